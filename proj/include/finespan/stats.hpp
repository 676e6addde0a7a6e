#pragma once

// Nonparametric comparison of k models over N evaluation subsets.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finespan::stats {

// -- distributions -----------------------------------------------------------

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);
/// Upper complement Q(a, x) = 1 - P(a, x), computed directly in its tail.
double gamma_q(double a, double x);
/// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

double normal_cdf(double z);
double chi2_sf(double x, double df);
double f_sf(double x, double df1, double df2);

/// CDF of the studentized range of k standard normals (infinite degrees of
/// freedom), by numerical integration.
double studentized_range_cdf(double q, double k);
double studentized_range_sf(double q, double k);
/// Smallest q with cdf(q) >= p.
double studentized_range_quantile(double p, double k);

// -- score matrices ------------------------------------------------------------

struct ScoreMatrix {
  std::vector<std::string> models;
  std::vector<std::string> subsets;
  std::vector<std::vector<double>> values;  // [subset][model]
  bool higher_is_better = true;

  std::size_t k() const { return models.size(); }
  std::size_t n() const { return subsets.size(); }
  /// Throws DataError unless k >= 2, N >= 2 and every cell is finite.
  void validate() const;
};

/// Header row: subset column then one column per model. Each further row
/// holds a subset id and k values.
ScoreMatrix parse_score_csv(std::string_view csv, bool higher_is_better = true);

/// Per-subset ranks, 1 = best, ties share their average rank.
std::vector<std::vector<double>> rank_rows(const ScoreMatrix& matrix);
std::vector<double> average_ranks(std::span<const double> values, bool higher_is_better);

// -- Friedman ------------------------------------------------------------------

struct FriedmanResult {
  std::size_t n = 0;
  std::size_t k = 0;
  std::vector<double> mean_ranks;
  double q = 0.0;
  double p_q = 1.0;
  double f = 0.0;  // +inf when the rankings agree perfectly
  double p_f = 1.0;
  double alpha = 0.05;
  bool reject = false;
  std::string note;

  nlohmann::json to_json(const std::vector<std::string>& models) const;
};

FriedmanResult friedman(const ScoreMatrix& matrix, double alpha = 0.05);

// -- Nemenyi -------------------------------------------------------------------

struct NemenyiResult {
  std::vector<double> mean_ranks;
  std::vector<std::vector<double>> p_values;  // symmetric, unit diagonal
  double standard_error = 0.0;                // sqrt(k(k+1)/(6N))
  double q_critical = 0.0;                    // studentized-range quantile at 1 - alpha
  double critical_difference = 0.0;           // q_critical / sqrt(2) * standard_error
  double alpha = 0.05;

  nlohmann::json to_json(const std::vector<std::string>& models) const;
};

NemenyiResult nemenyi(const ScoreMatrix& matrix, double alpha = 0.05);

// -- Wilcoxon signed-rank -----------------------------------------------------

enum class Alternative { two_sided, greater, less };
Alternative parse_alternative(std::string_view name);

enum class WilcoxonMethod { automatic, exact, normal };
WilcoxonMethod parse_wilcoxon_method(std::string_view name);

struct WilcoxonResult {
  std::size_t n = 0;  // pairs left after dropping zero differences
  double w_plus = 0.0;
  double w_minus = 0.0;
  double statistic = 0.0;  // min(W+, W-)
  double p = 1.0;
  WilcoxonMethod method = WilcoxonMethod::exact;
  std::string note;

  nlohmann::json to_json() const;
};

/// Differences x - y; zero differences are dropped and |d| ranked with
/// average ranks. Automatic picks exact enumeration for n <= 15, the normal
/// approximation with tie correction otherwise.
WilcoxonResult wilcoxon(std::span<const double> x, std::span<const double> y,
                        WilcoxonMethod method = WilcoxonMethod::automatic,
                        Alternative alternative = Alternative::two_sided);

// -- combined report -----------------------------------------------------------

struct PairResult {
  std::string a;
  std::string b;
  WilcoxonResult wilcoxon;
};

struct Comparison {
  std::string metric;
  std::vector<std::string> models;
  FriedmanResult friedman;
  NemenyiResult nemenyi;
  std::vector<PairResult> wilcoxon_pairs;

  nlohmann::json to_json() const;
  std::string to_markdown() const;
};

Comparison compare(const ScoreMatrix& matrix, double alpha = 0.05, std::string metric = {},
                   WilcoxonMethod method = WilcoxonMethod::automatic);

}  // namespace finespan::stats

#include "finespan/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>

#include "finespan/error.hpp"
#include "finespan/io.hpp"
#include "finespan/text.hpp"

namespace finespan::stats {

using nlohmann::json;

void ScoreMatrix::validate() const {
  if (k() < 2) throw DataError("score matrix needs at least 2 models");
  if (n() < 2) throw DataError("score matrix needs at least 2 subsets");
  if (values.size() != n()) throw DataError("score matrix row count differs from the subset count");
  for (std::size_t i = 0; i < n(); ++i) {
    if (values[i].size() != k())
      throw DataError("subset '" + subsets[i] + "' has " + std::to_string(values[i].size()) + " values, expected " +
                      std::to_string(k()));
    for (double v : values[i])
      if (!std::isfinite(v)) throw DataError("subset '" + subsets[i] + "' has a non-finite score");
  }
}

ScoreMatrix parse_score_csv(std::string_view csv, bool higher_is_better) {
  const auto rows = io::parse_csv(csv);
  if (rows.empty()) throw DataError("score CSV is empty");
  ScoreMatrix m;
  m.higher_is_better = higher_is_better;
  const auto& header = rows.front().fields;
  for (std::size_t c = 1; c < header.size(); ++c) m.models.emplace_back(text::trim(header[c]));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != header.size())
      throw DataError("score CSV line " + std::to_string(row.line) + ": expected " + std::to_string(header.size()) +
                      " fields");
    m.subsets.emplace_back(text::trim(row.fields[0]));
    std::vector<double> values;
    for (std::size_t c = 1; c < row.fields.size(); ++c) {
      const std::string cell(text::trim(row.fields[c]));
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw DataError("score CSV line " + std::to_string(row.line) + ": '" + cell + "' is not a number");
      }
    }
    m.values.push_back(std::move(values));
  }
  m.validate();
  return m;
}

std::vector<double> average_ranks(std::span<const double> values, bool higher_is_better) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return higher_is_better ? values[a] > values[b] : values[a] < values[b];
  });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::vector<std::vector<double>> rank_rows(const ScoreMatrix& matrix) {
  std::vector<std::vector<double>> out;
  for (const auto& row : matrix.values) out.push_back(average_ranks(row, matrix.higher_is_better));
  return out;
}

namespace {

std::vector<double> mean_ranks(const ScoreMatrix& matrix) {
  std::vector<double> mean(matrix.k(), 0.0);
  for (const auto& row : rank_rows(matrix))
    for (std::size_t j = 0; j < row.size(); ++j) mean[j] += row[j];
  for (double& r : mean) r /= static_cast<double>(matrix.n());
  return mean;
}

json number_or_string(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string fixed(double v, int digits) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

// -- Friedman ------------------------------------------------------------------

FriedmanResult friedman(const ScoreMatrix& matrix, double alpha) {
  matrix.validate();
  FriedmanResult r;
  r.n = matrix.n();
  r.k = matrix.k();
  r.alpha = alpha;
  r.mean_ranks = mean_ranks(matrix);
  const double n = static_cast<double>(r.n);
  const double k = static_cast<double>(r.k);
  double sum_sq = 0.0;
  for (double rank : r.mean_ranks) sum_sq += rank * rank;
  r.q = std::max(0.0, 12.0 * n / (k * (k + 1.0)) * (sum_sq - k * (k + 1.0) * (k + 1.0) / 4.0));
  r.p_q = chi2_sf(r.q, k - 1.0);
  const double denominator = n * (k - 1.0) - r.q;
  if (denominator <= 1e-12 * n * (k - 1.0)) {
    r.f = std::numeric_limits<double>::infinity();
    r.p_f = 0.0;
    r.note = "rankings agree on every subset; F is infinite and its p-value is the limit 0";
  } else {
    r.f = (n - 1.0) * r.q / denominator;
    r.p_f = f_sf(r.f, k - 1.0, (k - 1.0) * (n - 1.0));
  }
  r.reject = std::min(r.p_q, r.p_f) < alpha;
  return r;
}

json FriedmanResult::to_json(const std::vector<std::string>& models) const {
  json ranks = json::object();
  for (std::size_t j = 0; j < models.size() && j < mean_ranks.size(); ++j) ranks[models[j]] = mean_ranks[j];
  json out = {{"n", n},         {"k", k},     {"mean_ranks", std::move(ranks)}, {"Q", q}, {"p_Q", p_q},
              {"F", number_or_string(f)}, {"p_F", p_f}, {"alpha", alpha},       {"reject", reject}};
  if (!note.empty()) out["note"] = note;
  return out;
}

// -- Nemenyi -------------------------------------------------------------------

NemenyiResult nemenyi(const ScoreMatrix& matrix, double alpha) {
  matrix.validate();
  NemenyiResult r;
  r.alpha = alpha;
  r.mean_ranks = mean_ranks(matrix);
  const double k = static_cast<double>(matrix.k());
  const double n = static_cast<double>(matrix.n());
  r.standard_error = std::sqrt(k * (k + 1.0) / (6.0 * n));
  r.q_critical = studentized_range_quantile(1.0 - alpha, k);
  r.critical_difference = r.q_critical / std::sqrt(2.0) * r.standard_error;
  r.p_values.assign(matrix.k(), std::vector<double>(matrix.k(), 1.0));
  for (std::size_t i = 0; i < matrix.k(); ++i)
    for (std::size_t j = i + 1; j < matrix.k(); ++j) {
      const double diff = std::abs(r.mean_ranks[i] - r.mean_ranks[j]);
      const double p = diff == 0.0 ? 1.0 : studentized_range_sf(diff / r.standard_error * std::sqrt(2.0), k);
      r.p_values[i][j] = r.p_values[j][i] = p;
    }
  return r;
}

json NemenyiResult::to_json(const std::vector<std::string>& models) const {
  json matrix = json::object();
  for (std::size_t i = 0; i < models.size(); ++i) {
    json row = json::object();
    for (std::size_t j = 0; j < models.size(); ++j) row[models[j]] = p_values[i][j];
    matrix[models[i]] = std::move(row);
  }
  return {{"p_values", std::move(matrix)},
          {"standard_error", standard_error},
          {"q_critical", q_critical},
          {"critical_difference", critical_difference},
          {"alpha", alpha}};
}

// -- Wilcoxon signed-rank -----------------------------------------------------

Alternative parse_alternative(std::string_view name) {
  if (name == "two-sided") return Alternative::two_sided;
  if (name == "greater") return Alternative::greater;
  if (name == "less") return Alternative::less;
  throw ConfigError("unknown alternative '" + std::string(name) + "' (expected two-sided, greater or less)");
}

WilcoxonMethod parse_wilcoxon_method(std::string_view name) {
  if (name == "auto") return WilcoxonMethod::automatic;
  if (name == "exact") return WilcoxonMethod::exact;
  if (name == "normal" || name == "normal-approx") return WilcoxonMethod::normal;
  throw ConfigError("unknown Wilcoxon method '" + std::string(name) + "' (expected auto, exact or normal-approx)");
}

json WilcoxonResult::to_json() const {
  json out = {{"n", n},
              {"W_plus", w_plus},
              {"W_minus", w_minus},
              {"W", statistic},
              {"p", p},
              {"method", method == WilcoxonMethod::exact ? "exact" : "normal-approx"}};
  if (!note.empty()) out["note"] = note;
  return out;
}

WilcoxonResult wilcoxon(std::span<const double> x, std::span<const double> y, WilcoxonMethod method,
                        Alternative alternative) {
  if (x.size() != y.size()) throw DataError("Wilcoxon test needs paired lists of equal length");
  if (x.empty()) throw DataError("Wilcoxon test needs at least one pair");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] != y[i]) diffs.push_back(x[i] - y[i]);

  WilcoxonResult r;
  r.n = diffs.size();
  r.method = method == WilcoxonMethod::normal ? WilcoxonMethod::normal : WilcoxonMethod::exact;
  if (r.n == 0) {
    r.p = 1.0;
    r.note = "all differences are zero";
    return r;
  }
  std::vector<double> magnitude;
  for (double d : diffs) magnitude.push_back(std::abs(d));
  const auto ranks = average_ranks(magnitude, false);
  for (std::size_t i = 0; i < r.n; ++i) (diffs[i] > 0 ? r.w_plus : r.w_minus) += ranks[i];
  r.statistic = std::min(r.w_plus, r.w_minus);

  const double nn = static_cast<double>(r.n);
  const double mean = nn * (nn + 1.0) / 4.0;
  if (method == WilcoxonMethod::automatic) r.method = r.n <= 15 ? WilcoxonMethod::exact : WilcoxonMethod::normal;
  if (method == WilcoxonMethod::exact && r.n > 30) throw ConfigError("exact Wilcoxon enumeration is limited to n <= 30");

  if (r.method == WilcoxonMethod::exact) {
    // Doubled ranks are integers even with ties, so W+ sums stay exact.
    std::vector<long long> doubled;
    long long total = 0;
    for (double rank : ranks) {
      doubled.push_back(std::llround(rank * 2.0));
      total += doubled.back();
    }
    const long long observed = std::llround(r.w_plus * 2.0);
    // Counts of sign assignments per doubled W+ value.
    std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
    ways[0] = 1.0;
    for (long long d : doubled)
      for (long long s = total; s >= d; --s) ways[static_cast<std::size_t>(s)] += ways[static_cast<std::size_t>(s - d)];
    const double all = std::ldexp(1.0, static_cast<int>(r.n));
    double ge = 0.0;
    double le = 0.0;
    double extreme = 0.0;
    const long long centre2 = total;  // 2 * (2 * mean)
    const long long distance = std::llabs(2 * observed - centre2);
    for (long long s = 0; s <= total; ++s) {
      const double w = ways[static_cast<std::size_t>(s)];
      if (s >= observed) ge += w;
      if (s <= observed) le += w;
      if (std::llabs(2 * s - centre2) >= distance) extreme += w;
    }
    switch (alternative) {
      case Alternative::two_sided: r.p = extreme / all; break;
      case Alternative::greater: r.p = ge / all; break;
      case Alternative::less: r.p = le / all; break;
    }
  } else {
    double tie_term = 0.0;
    std::vector<double> sorted = magnitude;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
      std::size_t j = i;
      while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i);
      tie_term += t * t * t - t;
      i = j;
    }
    const double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = (r.w_plus - mean) / std::sqrt(variance);
    switch (alternative) {
      case Alternative::two_sided: r.p = std::erfc(std::abs(z) / std::sqrt(2.0)); break;
      case Alternative::greater: r.p = 1.0 - normal_cdf(z); break;
      case Alternative::less: r.p = normal_cdf(z); break;
    }
  }
  r.p = std::min(1.0, r.p);
  return r;
}

// -- combined report -----------------------------------------------------------

Comparison compare(const ScoreMatrix& matrix, double alpha, std::string metric, WilcoxonMethod method) {
  matrix.validate();
  Comparison c;
  c.metric = std::move(metric);
  c.models = matrix.models;
  c.friedman = friedman(matrix, alpha);
  c.nemenyi = nemenyi(matrix, alpha);
  for (std::size_t i = 0; i < matrix.k(); ++i)
    for (std::size_t j = i + 1; j < matrix.k(); ++j) {
      std::vector<double> a;
      std::vector<double> b;
      for (const auto& row : matrix.values) {
        a.push_back(row[i]);
        b.push_back(row[j]);
      }
      c.wilcoxon_pairs.push_back({matrix.models[i], matrix.models[j], wilcoxon(a, b, method)});
    }
  return c;
}

json Comparison::to_json() const {
  json pairs = json::array();
  for (const auto& p : wilcoxon_pairs) {
    auto record = p.wilcoxon.to_json();
    record["a"] = p.a;
    record["b"] = p.b;
    pairs.push_back(std::move(record));
  }
  return {{"metric", metric},
          {"models", models},
          {"friedman", friedman.to_json(models)},
          {"nemenyi", nemenyi.to_json(models)},
          {"wilcoxon_pairs", std::move(pairs)}};
}

std::string Comparison::to_markdown() const {
  std::ostringstream out;
  out << "## Model comparison" << (metric.empty() ? "" : " (" + metric + ")") << "\n\n";
  out << "Friedman (N = " << friedman.n << ", k = " << friedman.k << "): Q = " << fixed(friedman.q, 2)
      << ", p-value = " << fixed(friedman.p_q, 2) << "; F = " << fixed(friedman.f, 2)
      << ", p-value = " << fixed(friedman.p_f, 2) << ". "
      << (friedman.reject ? "H0 rejected" : "H0 not rejected") << " at alpha = " << fixed(friedman.alpha, 2)
      << ".\n\n";
  out << "| Model | Mean rank |\n|:--|--:|\n";
  for (std::size_t j = 0; j < models.size(); ++j) out << "| " << models[j] << " | " << fixed(friedman.mean_ranks[j], 2) << " |\n";
  out << "\nNemenyi: critical difference = " << fixed(nemenyi.critical_difference, 3)
      << " (q = " << fixed(nemenyi.q_critical, 3) << ").";
  std::vector<std::string> significant;
  for (std::size_t i = 0; i < models.size(); ++i)
    for (std::size_t j = i + 1; j < models.size(); ++j)
      if (nemenyi.p_values[i][j] < nemenyi.alpha)
        significant.push_back("between " + models[i] + " and " + models[j] + " (p-value = " +
                              fixed(nemenyi.p_values[i][j], 2) + ")");
  if (significant.empty()) {
    out << " No pair differs significantly.\n\n";
  } else {
    out << " Significant differences:";
    for (std::size_t s = 0; s < significant.size(); ++s) out << (s ? ";" : "") << " " << significant[s];
    out << ".\n\n";
  }
  out << "| Pair | W | n | p-value | Method |\n|:--|--:|--:|--:|:--|\n";
  for (const auto& p : wilcoxon_pairs)
    out << "| " << p.a << " vs " << p.b << " | " << fixed(p.wilcoxon.statistic, 1) << " | " << p.wilcoxon.n << " | "
        << fixed(p.wilcoxon.p, 4) << " | " << (p.wilcoxon.method == WilcoxonMethod::exact ? "exact" : "normal-approx")
        << " |\n";
  return out.str();
}

}  // namespace finespan::stats

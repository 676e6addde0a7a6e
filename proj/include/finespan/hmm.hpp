#pragma once

// Log-space HMM kernels. Emission scores are supplied per position as a
// dense length x states lattice, so the same kernels serve the weak
// supervision aggregator and arbitrary test models.

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace finespan::hmm {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double log_sum_exp(std::span<const double> values);

/// log(p) with log(0) = -inf.
double safe_log(double p);

/// Initial and transition log-probabilities. Transitions with log-probability
/// -inf are skipped by every kernel.
class LogModel {
 public:
  LogModel(std::vector<double> log_initial, Matrix log_transition);

  std::size_t states() const { return log_initial_.size(); }
  const std::vector<double>& log_initial() const { return log_initial_; }
  const Matrix& log_transition() const { return log_transition_; }

  /// (from, to) pairs with finite transition log-probability, grouped by `to`.
  const std::vector<std::pair<std::size_t, std::size_t>>& allowed() const { return allowed_; }

 private:
  std::vector<double> log_initial_;
  Matrix log_transition_;
  std::vector<std::pair<std::size_t, std::size_t>> allowed_;
};

/// Fills `alpha` (length x states) and returns log P(observations).
double forward(const LogModel& model, const Matrix& log_emission, Matrix& alpha);

/// Fills `beta` (length x states).
void backward(const LogModel& model, const Matrix& log_emission, Matrix& beta);

/// Posterior state marginals from forward/backward lattices.
Matrix posteriors(const Matrix& alpha, const Matrix& beta, double log_likelihood);

struct Path {
  std::vector<std::size_t> states;
  double log_prob = kLogZero;
};

/// Most probable state sequence. Ties resolve to the lowest state index.
Path viterbi(const LogModel& model, const Matrix& log_emission);

/// Joint log-probability of one state path.
double path_log_prob(const LogModel& model, const Matrix& log_emission, std::span<const std::size_t> path);

}  // namespace finespan::hmm

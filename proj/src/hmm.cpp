#include "finespan/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace finespan::hmm {

double log_sum_exp(std::span<const double> values) {
  double peak = kLogZero;
  for (double v : values) peak = std::max(peak, v);
  if (peak == kLogZero) return kLogZero;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - peak);
  return peak + std::log(sum);
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kLogZero; }

LogModel::LogModel(std::vector<double> log_initial, Matrix log_transition)
    : log_initial_(std::move(log_initial)), log_transition_(std::move(log_transition)) {
  const std::size_t n = log_initial_.size();
  if (log_transition_.rows() != n || log_transition_.cols() != n)
    throw std::invalid_argument("transition matrix must be states x states");
  for (std::size_t to = 0; to < n; ++to)
    for (std::size_t from = 0; from < n; ++from)
      if (log_transition_(from, to) != kLogZero) allowed_.emplace_back(from, to);
}

double forward(const LogModel& model, const Matrix& log_emission, Matrix& alpha) {
  const std::size_t length = log_emission.rows();
  const std::size_t states = model.states();
  alpha = Matrix(length, states, kLogZero);
  if (length == 0) return 0.0;
  for (std::size_t s = 0; s < states; ++s) alpha(0, s) = model.log_initial()[s] + log_emission(0, s);

  const auto& trans = model.log_transition();
  std::vector<double> peak(states);
  std::vector<double> acc(states);
  for (std::size_t t = 1; t < length; ++t) {
    // Two passes over the allowed edges: max, then shifted sum.
    std::fill(peak.begin(), peak.end(), kLogZero);
    for (const auto& [from, to] : model.allowed())
      peak[to] = std::max(peak[to], alpha(t - 1, from) + trans(from, to));
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& [from, to] : model.allowed()) {
      if (peak[to] == kLogZero) continue;
      acc[to] += std::exp(alpha(t - 1, from) + trans(from, to) - peak[to]);
    }
    for (std::size_t s = 0; s < states; ++s)
      alpha(t, s) = peak[s] == kLogZero ? kLogZero : peak[s] + std::log(acc[s]) + log_emission(t, s);
  }
  return log_sum_exp(alpha.row(length - 1));
}

void backward(const LogModel& model, const Matrix& log_emission, Matrix& beta) {
  const std::size_t length = log_emission.rows();
  const std::size_t states = model.states();
  beta = Matrix(length, states, kLogZero);
  if (length == 0) return;
  for (std::size_t s = 0; s < states; ++s) beta(length - 1, s) = 0.0;

  const auto& trans = model.log_transition();
  std::vector<double> peak(states);
  std::vector<double> acc(states);
  for (std::size_t t = length - 1; t-- > 0;) {
    std::fill(peak.begin(), peak.end(), kLogZero);
    for (const auto& [from, to] : model.allowed())
      peak[from] = std::max(peak[from], trans(from, to) + log_emission(t + 1, to) + beta(t + 1, to));
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const auto& [from, to] : model.allowed()) {
      if (peak[from] == kLogZero) continue;
      acc[from] += std::exp(trans(from, to) + log_emission(t + 1, to) + beta(t + 1, to) - peak[from]);
    }
    for (std::size_t s = 0; s < states; ++s)
      beta(t, s) = peak[s] == kLogZero ? kLogZero : peak[s] + std::log(acc[s]);
  }
}

Matrix posteriors(const Matrix& alpha, const Matrix& beta, double log_likelihood) {
  Matrix gamma(alpha.rows(), alpha.cols());
  for (std::size_t t = 0; t < alpha.rows(); ++t)
    for (std::size_t s = 0; s < alpha.cols(); ++s) {
      const double v = alpha(t, s) + beta(t, s);
      gamma(t, s) = v == kLogZero ? 0.0 : std::exp(v - log_likelihood);
    }
  return gamma;
}

Path viterbi(const LogModel& model, const Matrix& log_emission) {
  const std::size_t length = log_emission.rows();
  const std::size_t states = model.states();
  Path path;
  if (length == 0) {
    path.log_prob = 0.0;
    return path;
  }
  Matrix delta(length, states, kLogZero);
  std::vector<std::size_t> back(length * states, 0);
  for (std::size_t s = 0; s < states; ++s) delta(0, s) = model.log_initial()[s] + log_emission(0, s);

  const auto& trans = model.log_transition();
  for (std::size_t t = 1; t < length; ++t) {
    // allowed() is grouped by `to` with `from` ascending, so strict `>` keeps
    // the lowest predecessor on ties.
    for (const auto& [from, to] : model.allowed()) {
      const double score = delta(t - 1, from) + trans(from, to);
      if (score > delta(t, to)) {
        delta(t, to) = score;
        back[t * states + to] = from;
      }
    }
    for (std::size_t s = 0; s < states; ++s)
      if (delta(t, s) != kLogZero) delta(t, s) += log_emission(t, s);
  }

  std::size_t best = 0;
  for (std::size_t s = 1; s < states; ++s)
    if (delta(length - 1, s) > delta(length - 1, best)) best = s;
  path.log_prob = delta(length - 1, best);
  path.states.resize(length);
  path.states[length - 1] = best;
  for (std::size_t t = length - 1; t > 0; --t) path.states[t - 1] = back[t * states + path.states[t]];
  return path;
}

double path_log_prob(const LogModel& model, const Matrix& log_emission, std::span<const std::size_t> path) {
  if (path.empty()) return 0.0;
  double total = model.log_initial()[path[0]] + log_emission(0, path[0]);
  for (std::size_t t = 1; t < path.size(); ++t)
    total += model.log_transition()(path[t - 1], path[t]) + log_emission(t, path[t]);
  return total;
}

}  // namespace finespan::hmm

#include "finespan/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "finespan/error.hpp"
#include "finespan/io.hpp"
#include "finespan/text.hpp"

namespace finespan::aggregate {

using nlohmann::json;
using tagcodec::TagScheme;

namespace {

/// Emission probabilities below this are raised to it when decoding, so a
/// vote pattern never seen during fitting cannot zero out every path.
constexpr double kDecodeFloor = 1e-12;

/// Sentences per E-step block are n / kBlocks; block results are merged in
/// block order.
constexpr std::size_t kBlocks = 64;

std::string span_text(const weaklabel::SpanAnnotation& s) {
  return "span [" + std::to_string(s.start) + "," + std::to_string(s.end) + ") from " + s.source;
}

}  // namespace

// -- vote matrices -----------------------------------------------------------

VoteMatrix build_vote_matrix(const corpus::Sentence& sentence, std::span<const weaklabel::SpanAnnotation> spans,
                             const std::vector<std::string>& functions, const TagScheme& scheme) {
  VoteMatrix m;
  m.sentence_id = sentence.id;
  for (const auto& token : sentence.tokens) m.tokens.push_back(token.surface);
  m.functions = functions;
  m.votes.assign(functions.size(), std::vector<int>(sentence.tokens.size(), kAbstain));

  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t f = 0; f < functions.size(); ++f) index.emplace(functions[f], f);

  std::vector<const weaklabel::SpanAnnotation*> ordered;
  for (const auto& span : spans) {
    if (span.sentence_id != sentence.id)
      throw DataError("span for sentence '" + span.sentence_id + "' given to sentence '" + sentence.id + "'");
    if (!scheme.has_label(span.label))
      throw DataError("sentence '" + sentence.id + "': label '" + span.label + "' is not in the scheme");
    if (span.start >= span.end || span.end > sentence.text.size())
      throw DataError("sentence '" + sentence.id + "': " + span_text(span) + " is out of range");
    ordered.push_back(&span);
  }
  std::stable_sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) {
    if (a->start != b->start) return a->start < b->start;
    return a->end > b->end;
  });

  for (const auto* span : ordered) {
    const auto it = index.find(span->source);
    if (it == index.end()) continue;
    auto& row = m.votes[it->second];

    std::optional<std::size_t> first;
    std::size_t last = 0;
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
      const auto& token = sentence.tokens[t];
      if (token.start < span->end && token.end > span->start) {
        if (!first) first = t;
        last = t;
      }
    }
    if (!first) {
      m.warnings.push_back(span_text(*span) + " covers no token");
      continue;
    }
    const auto& head = sentence.tokens[*first];
    const auto& tail = sentence.tokens[last];
    const auto head_core = text::core_range(head.surface);
    const auto tail_core = text::core_range(tail.surface);
    if (!(span->start <= head.start || span->start == head.start + head_core.first) ||
        !(span->end >= tail.end || span->end == tail.start + tail_core.second))
      m.warnings.push_back(span_text(*span) + " snapped to token boundaries");

    bool clash = false;
    for (std::size_t t = *first; t <= last; ++t) clash = clash || row[t] != kAbstain;
    if (clash) {
      m.warnings.push_back(span_text(*span) + " overlaps another span of the same function");
      continue;
    }
    const int begin = scheme.begin_id(span->label);
    for (std::size_t t = *first; t <= last; ++t) row[t] = t == *first ? begin : begin + 1;
  }
  return m;
}

std::vector<VoteMatrix> build_vote_matrices(const corpus::Corpus& corpus,
                                            const std::vector<weaklabel::SpanAnnotation>& spans,
                                            const std::vector<std::string>& functions, const TagScheme& scheme) {
  std::unordered_map<std::string_view, std::size_t> position;
  for (std::size_t i = 0; i < corpus.size(); ++i) position.emplace(corpus.sentences[i].id, i);
  std::vector<std::vector<weaklabel::SpanAnnotation>> buckets(corpus.size());
  for (const auto& span : spans) {
    const auto it = position.find(span.sentence_id);
    if (it == position.end()) throw DataError("span references unknown sentence '" + span.sentence_id + "'");
    buckets[it->second].push_back(span);
  }
  std::vector<VoteMatrix> out(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out[k] = build_vote_matrix(corpus.sentences[k], buckets[k], functions, scheme);
  }
  return out;
}

std::vector<std::string> sources_of(const std::vector<weaklabel::SpanAnnotation>& spans) {
  std::set<std::string> names;
  for (const auto& s : spans) names.insert(s.source);
  return {names.begin(), names.end()};
}

// -- majority vote ------------------------------------------------------------

std::vector<std::size_t> vote_frequencies(std::span<const VoteMatrix> matrices, const TagScheme& scheme) {
  std::vector<std::size_t> freq(scheme.size(), 0);
  for (const auto& m : matrices)
    for (const auto& row : m.votes)
      for (int v : row)
        if (v != kAbstain) ++freq[static_cast<std::size_t>(v)];
  return freq;
}

namespace {

// Length of the voted span each token belongs to, per function row.
std::vector<std::vector<std::size_t>> vote_span_lengths(const VoteMatrix& matrix) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& row : matrix.votes) {
    std::vector<std::size_t> lengths(row.size(), 0);
    std::size_t t = 0;
    while (t < row.size()) {
      if (row[t] == kAbstain || row[t] == 0) {
        ++t;
        continue;
      }
      const int inside = TagScheme::is_begin(row[t]) ? row[t] + 1 : row[t];
      std::size_t end = t + 1;
      while (end < row.size() && row[end] == inside) ++end;
      for (std::size_t u = t; u < end; ++u) lengths[u] = end - t;
      t = end;
    }
    out.push_back(std::move(lengths));
  }
  return out;
}

}  // namespace

std::vector<std::string> majority_vote(const VoteMatrix& matrix, const TagScheme& scheme, TieBreak tie_break,
                                       const std::vector<std::size_t>* frequencies) {
  if (tie_break != TieBreak::lexicographic && frequencies == nullptr)
    throw ConfigError("label-frequency tie-break needs corpus vote frequencies");
  std::vector<std::vector<std::size_t>> span_lengths;
  if (tie_break == TieBreak::longest_span) span_lengths = vote_span_lengths(matrix);
  std::vector<std::string> tags(matrix.token_count(), "O");
  std::vector<std::size_t> counts(scheme.size());
  std::vector<std::size_t> longest(scheme.size());
  for (std::size_t t = 0; t < matrix.token_count(); ++t) {
    std::fill(counts.begin(), counts.end(), 0);
    std::fill(longest.begin(), longest.end(), 0);
    bool any = false;
    for (std::size_t f = 0; f < matrix.votes.size(); ++f) {
      const int v = matrix.votes[f][t];
      if (v == kAbstain) continue;
      const auto id = static_cast<std::size_t>(v);
      ++counts[id];
      if (!span_lengths.empty()) longest[id] = std::max(longest[id], span_lengths[f][t]);
      any = true;
    }
    if (!any) continue;
    std::optional<std::size_t> best;
    for (std::size_t id = 0; id < counts.size(); ++id) {
      if (counts[id] == 0) continue;
      if (!best || counts[id] > counts[*best]) {
        best = id;
        continue;
      }
      if (counts[id] < counts[*best]) continue;
      if (tie_break == TieBreak::longest_span && longest[id] != longest[*best]) {
        if (longest[id] > longest[*best]) best = id;
        continue;
      }
      if (tie_break != TieBreak::lexicographic && (*frequencies)[id] != (*frequencies)[*best]) {
        if ((*frequencies)[id] > (*frequencies)[*best]) best = id;
        continue;
      }
      if (scheme.tag(static_cast<int>(id)) < scheme.tag(static_cast<int>(*best))) best = id;
    }
    tags[t] = scheme.tag(static_cast<int>(*best));
  }
  return tagcodec::repair_bio(std::move(tags));
}

// -- model ------------------------------------------------------------------

namespace {

bool transition_allowed(std::size_t from, std::size_t to) {
  const int t = static_cast<int>(to);
  if (!TagScheme::is_inside(t)) return true;
  const int f = static_cast<int>(from);
  return f == t || f == t - 1;
}

json matrix_to_json(const hmm::Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
  return rows;
}

hmm::Matrix matrix_from_json(const json& rows, std::size_t expected_rows, std::size_t expected_cols) {
  hmm::Matrix m(expected_rows, expected_cols);
  if (rows.size() != expected_rows) throw DataError("model matrix has the wrong number of rows");
  for (std::size_t r = 0; r < expected_rows; ++r) {
    const auto values = rows[r].get<std::vector<double>>();
    if (values.size() != expected_cols) throw DataError("model matrix has the wrong number of columns");
    std::copy(values.begin(), values.end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

json AggregationModel::to_json() const {
  json emissions = json::object();
  for (std::size_t f = 0; f < functions.size(); ++f) emissions[functions[f]] = matrix_to_json(emission[f]);
  auto symbols = states;
  symbols.push_back("ABSTAIN");
  return {{"states", states},
          {"observation_symbols", symbols},
          {"functions", functions},
          {"dropped_functions", dropped_functions},
          {"initial", initial},
          {"transition", matrix_to_json(transition)},
          {"emission", std::move(emissions)},
          {"config", {{"max_iter", config.max_iter}, {"tol", config.tol}, {"seed", config.seed}}},
          {"corpus_fingerprint", corpus_fingerprint},
          {"log_likelihood", log_likelihood}};
}

AggregationModel AggregationModel::from_json(const json& doc) {
  AggregationModel m;
  try {
    m.states = doc.at("states").get<std::vector<std::string>>();
    m.functions = doc.at("functions").get<std::vector<std::string>>();
    m.dropped_functions = doc.value("dropped_functions", std::vector<std::string>{});
    m.initial = doc.at("initial").get<std::vector<double>>();
    const std::size_t n = m.states.size();
    if (m.initial.size() != n) throw DataError("model 'initial' length differs from the state count");
    m.transition = matrix_from_json(doc.at("transition"), n, n);
    for (const auto& f : m.functions) m.emission.push_back(matrix_from_json(doc.at("emission").at(f), n, n + 1));
    const auto& cfg = doc.at("config");
    m.config = {cfg.at("max_iter").get<std::size_t>(), cfg.at("tol").get<double>(), cfg.at("seed").get<std::uint64_t>()};
    m.corpus_fingerprint = doc.value("corpus_fingerprint", "");
    m.log_likelihood = doc.value("log_likelihood", std::vector<double>{});
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  return m;
}

ExpectedCounts::ExpectedCounts(std::size_t states, std::size_t functions)
    : initial(states, 0.0),
      transition(states, states),
      emission(functions, hmm::Matrix(states, states + 1)) {}

void ExpectedCounts::merge(const ExpectedCounts& other) {
  for (std::size_t i = 0; i < initial.size(); ++i) initial[i] += other.initial[i];
  for (std::size_t i = 0; i < transition.data().size(); ++i) transition.data()[i] += other.transition.data()[i];
  for (std::size_t f = 0; f < emission.size(); ++f)
    for (std::size_t i = 0; i < emission[f].data().size(); ++i) emission[f].data()[i] += other.emission[f].data()[i];
  log_likelihood += other.log_likelihood;
}

hmm::LogModel log_model(const AggregationModel& model) {
  const std::size_t n = model.states.size();
  std::vector<double> log_initial(n);
  hmm::Matrix log_transition(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    log_initial[i] = hmm::safe_log(model.initial[i]);
    for (std::size_t j = 0; j < n; ++j) log_transition(i, j) = hmm::safe_log(model.transition(i, j));
  }
  return {std::move(log_initial), std::move(log_transition)};
}

namespace {

/// Per-E-step precomputation shared by every sentence.
struct Context {
  const AggregationModel& model;
  hmm::LogModel lm;
  std::vector<hmm::Matrix> log_emission;
  std::unordered_map<std::string_view, std::size_t> function_index;

  Context(const AggregationModel& m, double floor) : model(m), lm(log_model(m)) {
    for (std::size_t f = 0; f < m.functions.size(); ++f) {
      hmm::Matrix le(m.emission[f].rows(), m.emission[f].cols());
      for (std::size_t i = 0; i < le.data().size(); ++i) le.data()[i] = hmm::safe_log(std::max(m.emission[f].data()[i], floor));
      log_emission.push_back(std::move(le));
      function_index.emplace(m.functions[f], f);
    }
  }

  hmm::Matrix scores(const VoteMatrix& matrix) const {
    const std::size_t states = model.states.size();
    const std::size_t length = matrix.token_count();
    // Model functions missing from the matrix count as abstaining.
    std::vector<const std::vector<int>*> rows(model.functions.size(), nullptr);
    for (std::size_t r = 0; r < matrix.functions.size(); ++r) {
      const auto it = function_index.find(matrix.functions[r]);
      if (it != function_index.end()) rows[it->second] = &matrix.votes[r];
    }
    hmm::Matrix out(length, states, 0.0);
    for (std::size_t f = 0; f < rows.size(); ++f) {
      const auto& le = log_emission[f];
      for (std::size_t t = 0; t < length; ++t) {
        const int vote = rows[f] ? (*rows[f])[t] : kAbstain;
        const std::size_t symbol = vote == kAbstain ? model.abstain_symbol() : static_cast<std::size_t>(vote);
        for (std::size_t s = 0; s < states; ++s) out(t, s) += le(s, symbol);
      }
    }
    return out;
  }

  std::vector<std::size_t> symbols(const VoteMatrix& matrix, std::size_t f_model) const {
    std::vector<std::size_t> out(matrix.token_count(), model.abstain_symbol());
    for (std::size_t r = 0; r < matrix.functions.size(); ++r) {
      if (matrix.functions[r] != model.functions[f_model]) continue;
      for (std::size_t t = 0; t < out.size(); ++t)
        if (matrix.votes[r][t] != kAbstain) out[t] = static_cast<std::size_t>(matrix.votes[r][t]);
    }
    return out;
  }

  void accumulate(const VoteMatrix& matrix, ExpectedCounts& acc) const {
    const std::size_t length = matrix.token_count();
    if (length == 0) return;
    const std::size_t states = model.states.size();
    const hmm::Matrix le = scores(matrix);
    hmm::Matrix alpha;
    hmm::Matrix beta;
    const double log_z = hmm::forward(lm, le, alpha);
    if (log_z == hmm::kLogZero) throw DataError("sentence '" + matrix.sentence_id + "' has zero likelihood");
    hmm::backward(lm, le, beta);
    acc.log_likelihood += log_z;

    const hmm::Matrix gamma = hmm::posteriors(alpha, beta, log_z);
    for (std::size_t s = 0; s < states; ++s) acc.initial[s] += gamma(0, s);
    for (std::size_t f = 0; f < model.functions.size(); ++f) {
      const auto obs = symbols(matrix, f);
      auto& em = acc.emission[f];
      for (std::size_t t = 0; t < length; ++t)
        for (std::size_t s = 0; s < states; ++s) em(s, obs[t]) += gamma(t, s);
    }
    const auto& lt = lm.log_transition();
    for (std::size_t t = 0; t + 1 < length; ++t)
      for (const auto& [from, to] : lm.allowed()) {
        const double v = alpha(t, from) + lt(from, to) + le(t + 1, to) + beta(t + 1, to) - log_z;
        if (v != hmm::kLogZero) acc.transition(from, to) += std::exp(v);
      }
  }
};

}  // namespace

hmm::Matrix emission_scores(const AggregationModel& model, const VoteMatrix& matrix, double floor) {
  return Context(model, floor).scores(matrix);
}

ExpectedCounts expected_counts_serial(const AggregationModel& model, std::span<const VoteMatrix> matrices) {
  const Context ctx(model, 0.0);
  ExpectedCounts acc(model.states.size(), model.functions.size());
  for (const auto& m : matrices) ctx.accumulate(m, acc);
  return acc;
}

ExpectedCounts expected_counts(const AggregationModel& model, std::span<const VoteMatrix> matrices) {
  const Context ctx(model, 0.0);
  const std::size_t n = matrices.size();
  std::vector<ExpectedCounts> blocks(kBlocks);
  const auto block_count = static_cast<std::ptrdiff_t>(kBlocks);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t b = 0; b < block_count; ++b) {
    const auto k = static_cast<std::size_t>(b);
    const std::size_t lo = n * k / kBlocks;
    const std::size_t hi = n * (k + 1) / kBlocks;
    if (lo == hi) continue;
    ExpectedCounts acc(model.states.size(), model.functions.size());
    for (std::size_t i = lo; i < hi; ++i) ctx.accumulate(matrices[i], acc);
    blocks[k] = std::move(acc);
  }
  ExpectedCounts total(model.states.size(), model.functions.size());
  for (const auto& block : blocks)
    if (!block.initial.empty()) total.merge(block);
  return total;
}

void maximize(AggregationModel& model, const ExpectedCounts& counts) {
  const auto normalize_into = [](std::span<const double> source, std::span<double> target) {
    double sum = 0.0;
    for (double v : source) sum += v;
    if (!(sum > 0.0)) return;
    for (std::size_t i = 0; i < source.size(); ++i) target[i] = source[i] / sum;
  };
  normalize_into(counts.initial, model.initial);
  for (std::size_t s = 0; s < model.states.size(); ++s) normalize_into(counts.transition.row(s), model.transition.row(s));
  // Abstain probabilities stay at their initial rates. The remaining mass
  // keeps the shape it was initialized with: one accuracy on the diagonal,
  // the rest spread evenly over the other tags.
  const std::size_t abstain = model.abstain_symbol();
  for (std::size_t f = 0; f < model.functions.size(); ++f)
    for (std::size_t s = 0; s < model.states.size(); ++s) {
      const auto source = counts.emission[f].row(s).first(abstain);
      auto target = model.emission[f].row(s);
      double sum = 0.0;
      for (double v : source) sum += v;
      if (!(sum > 0.0)) continue;
      const double voting = 1.0 - target[abstain];
      if (abstain == 1) {
        target[0] = voting;
        continue;
      }
      const double accuracy = source[s] / sum;
      const double spread = voting * (1.0 - accuracy) / static_cast<double>(abstain - 1);
      for (std::size_t o = 0; o < abstain; ++o) target[o] = o == s ? voting * accuracy : spread;
    }
}

AggregationModel initialize_model(std::span<const VoteMatrix> matrices, const TagScheme& scheme,
                                  const std::vector<std::string>& functions) {
  const std::size_t states = scheme.size();
  AggregationModel model;
  model.states = scheme.tags();
  model.functions = functions;
  model.initial.assign(states, 0.0);
  model.transition = hmm::Matrix(states, states);

  // States of labels no function ever votes for are unreachable: they are
  // unidentifiable and would otherwise absorb mass on all-abstain tokens.
  const auto freq = vote_frequencies(matrices, scheme);
  std::vector<bool> reachable(states, true);
  for (std::size_t s = 1; s < states; ++s) {
    const std::size_t begin = TagScheme::is_begin(static_cast<int>(s)) ? s : s - 1;
    reachable[s] = freq[begin] + freq[begin + 1] > 0;
  }

  std::vector<double> initial_counts(states, 0.0);
  hmm::Matrix transition_counts(states, states);
  for (std::size_t s = 0; s < states; ++s) {
    if (!TagScheme::is_inside(static_cast<int>(s)) && reachable[s]) initial_counts[s] = 1.0;
    for (std::size_t u = 0; u < states; ++u)
      if (transition_allowed(s, u) && reachable[u]) transition_counts(s, u) = 1.0;
  }

  // Per function: tokens per majority-vote state and abstentions among them.
  std::vector<std::vector<double>> state_tokens(functions.size(), std::vector<double>(states, 0.0));
  std::vector<std::vector<double>> state_abstains(functions.size(), std::vector<double>(states, 0.0));
  for (const auto& m : matrices) {
    const auto labels = majority_vote(m, scheme, TieBreak::longest_span, &freq);
    std::vector<std::size_t> ids;
    for (const auto& tag : labels) ids.push_back(static_cast<std::size_t>(scheme.id(tag)));
    if (!ids.empty()) initial_counts[ids[0]] += 1.0;
    for (std::size_t t = 0; t + 1 < ids.size(); ++t) transition_counts(ids[t], ids[t + 1]) += 1.0;
    for (std::size_t f = 0; f < functions.size(); ++f) {
      const auto row = std::find(m.functions.begin(), m.functions.end(), functions[f]);
      for (std::size_t t = 0; t < ids.size(); ++t) {
        state_tokens[f][ids[t]] += 1.0;
        const bool abstained = row == m.functions.end() || m.votes[static_cast<std::size_t>(row - m.functions.begin())][t] == kAbstain;
        if (abstained) state_abstains[f][ids[t]] += 1.0;
      }
    }
  }

  const auto normalize = [](std::span<double> v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    for (double& x : v) x /= sum;
  };
  model.initial = initial_counts;
  normalize(model.initial);
  model.transition = transition_counts;
  for (std::size_t s = 0; s < states; ++s) normalize(model.transition.row(s));

  for (std::size_t f = 0; f < functions.size(); ++f) {
    hmm::Matrix e(states, states + 1);
    for (std::size_t s = 0; s < states; ++s) {
      const double abstain = (state_abstains[f][s] + 1.0) / (state_tokens[f][s] + 2.0);
      const double spread = states > 1 ? 0.1 * (1.0 - abstain) / static_cast<double>(states - 1) : 0.0;
      for (std::size_t o = 0; o < states; ++o) e(s, o) = o == s ? (states > 1 ? 0.9 : 1.0) * (1.0 - abstain) : spread;
      e(s, states) = abstain;
    }
    model.emission.push_back(std::move(e));
  }
  return model;
}

AggregationModel fit_hmm(std::span<const VoteMatrix> matrices, const TagScheme& scheme, const FitConfig& config) {
  std::vector<std::string> candidates;
  for (const auto& m : matrices)
    for (const auto& f : m.functions)
      if (std::find(candidates.begin(), candidates.end(), f) == candidates.end()) candidates.push_back(f);

  std::vector<std::string> kept;
  std::vector<std::string> dropped;
  for (const auto& name : candidates) {
    bool votes = false;
    for (const auto& m : matrices) {
      const auto row = std::find(m.functions.begin(), m.functions.end(), name);
      if (row == m.functions.end()) continue;
      const auto& v = m.votes[static_cast<std::size_t>(row - m.functions.begin())];
      if (std::any_of(v.begin(), v.end(), [](int x) { return x != kAbstain; })) {
        votes = true;
        break;
      }
    }
    if (votes) {
      kept.push_back(name);
    } else {
      spdlog::warn("labeling function '{}' abstains everywhere; dropped before fitting", name);
      dropped.push_back(name);
    }
  }
  if (kept.empty()) throw DataError("nothing to aggregate");

  AggregationModel model = initialize_model(matrices, scheme, kept);
  model.config = config;
  model.dropped_functions = dropped;

  std::string fingerprint_input;
  for (const auto& m : matrices) {
    fingerprint_input += m.sentence_id;
    fingerprint_input.push_back('\x1f');
    for (const auto& tok : m.tokens) {
      fingerprint_input += tok;
      fingerprint_input.push_back(' ');
    }
    fingerprint_input.push_back('\x1e');
  }
  model.corpus_fingerprint = io::sha256_hex(fingerprint_input);

  for (std::size_t iter = 0; iter < config.max_iter; ++iter) {
    const ExpectedCounts counts = expected_counts(model, matrices);
    const double ll = counts.log_likelihood;
    if (!model.log_likelihood.empty()) {
      const double previous = model.log_likelihood.back();
      const double gain = ll - previous;
      model.log_likelihood.push_back(ll);
      if (config.tol >= 0.0 && gain < config.tol * std::abs(previous)) break;
    } else {
      model.log_likelihood.push_back(ll);
    }
    maximize(model, counts);
  }
  spdlog::debug("HMM fit: {} iterations, final log-likelihood {}", model.log_likelihood.size(),
                model.log_likelihood.empty() ? 0.0 : model.log_likelihood.back());
  return model;
}

// -- decoding ------------------------------------------------------------------

DecodeMode parse_decode_mode(std::string_view name) {
  if (name == "viterbi") return DecodeMode::viterbi;
  if (name == "posterior") return DecodeMode::posterior;
  throw ConfigError("unknown decode mode '" + std::string(name) + "' (expected viterbi or posterior)");
}

Decoded decode(const AggregationModel& model, const VoteMatrix& matrix, DecodeMode mode) {
  Decoded out;
  const std::size_t length = matrix.token_count();
  if (length == 0) return out;
  const Context ctx(model, kDecodeFloor);
  const hmm::Matrix le = ctx.scores(matrix);
  hmm::Matrix alpha;
  hmm::Matrix beta;
  const double log_z = hmm::forward(ctx.lm, le, alpha);
  hmm::backward(ctx.lm, le, beta);
  const hmm::Matrix gamma = hmm::posteriors(alpha, beta, log_z);

  std::vector<std::size_t> chosen(length);
  if (mode == DecodeMode::viterbi) {
    chosen = hmm::viterbi(ctx.lm, le).states;
  } else {
    for (std::size_t t = 0; t < length; ++t) {
      const auto row = gamma.row(t);
      chosen[t] = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
  }
  for (std::size_t t = 0; t < length; ++t) {
    out.tags.push_back(model.states[chosen[t]]);
    out.confidence.push_back(gamma(t, chosen[t]));
  }
  out.tags = tagcodec::repair_bio(std::move(out.tags));
  return out;
}

// -- corpus-level aggregation ---------------------------------------------

json to_json(const AnnotatedSentence& annotated) {
  json record = corpus::sentence_to_json(annotated.sentence);
  json entities = json::array();
  for (const auto& e : annotated.entities)
    entities.push_back({{"start", e.start}, {"end", e.end}, {"surface", e.surface}, {"label", e.label},
                        {"confidence", e.confidence}});
  record["entities"] = std::move(entities);
  return record;
}

AnnotatedSentence annotated_from_json(const json& record) {
  if (!record.contains("text")) throw DataError("annotated record missing 'text'");
  AnnotatedSentence out{corpus::sentence_from_json(record, record.value("id", std::string())), {}};
  if (record.contains("entities"))
    for (const auto& e : record["entities"]) {
      AnnotatedEntity entity;
      entity.start = e.at("start").get<std::size_t>();
      entity.end = e.at("end").get<std::size_t>();
      entity.label = e.at("label").get<std::string>();
      entity.surface = e.value("surface", out.sentence.text.substr(entity.start, entity.end - entity.start));
      entity.confidence = e.value("confidence", 1.0);
      out.entities.push_back(std::move(entity));
    }
  return out;
}

std::vector<AnnotatedEntity> entities_from_tags(const corpus::Sentence& sentence, const std::vector<std::string>& tags,
                                                const std::vector<double>& confidence) {
  std::vector<AnnotatedEntity> out;
  const auto& tokens = sentence.tokens;
  std::size_t t = 0;
  while (t < tags.size()) {
    const auto label = tagcodec::label_of_tag(tags[t]);
    if (label.empty()) {
      ++t;
      continue;
    }
    std::size_t u = t + 1;
    while (u < tags.size() && tags[u].starts_with("I-") && tagcodec::label_of_tag(tags[u]) == label) ++u;
    const auto& head = tokens[t];
    const auto& tail = tokens[u - 1];
    const auto head_core = text::core_range(head.surface);
    const auto tail_core = text::core_range(tail.surface);
    AnnotatedEntity e;
    e.start = head.start + (head_core.second > head_core.first ? head_core.first : 0);
    e.end = tail_core.second > tail_core.first ? tail.start + tail_core.second : tail.end;
    e.surface = sentence.text.substr(e.start, e.end - e.start);
    e.label = std::string(label);
    double sum = 0.0;
    for (std::size_t k = t; k < u; ++k) sum += k < confidence.size() ? confidence[k] : 1.0;
    e.confidence = sum / static_cast<double>(u - t);
    out.push_back(std::move(e));
    t = u;
  }
  return out;
}

double AggregateResult::annotations_per_sentence() const {
  const std::size_t sentences = annotated.size() + unannotated.size();
  return sentences == 0 ? 0.0 : static_cast<double>(total_annotations) / static_cast<double>(sentences);
}

json AggregateResult::summary() const {
  json labels = json::object();
  for (const auto& [label, count] : per_label) labels[label] = count;
  return {{"sentences", annotated.size() + unannotated.size()},
          {"annotated_sentences", annotated.size()},
          {"unannotated_sentences", unannotated.size()},
          {"total_annotations", total_annotations},
          {"annotations_per_sentence", annotations_per_sentence()},
          {"per_label", std::move(labels)}};
}

namespace {

AggregateResult partition(const AggregationModel& model, const corpus::Corpus& corpus,
                          const std::vector<VoteMatrix>& matrices, DecodeMode mode) {
  std::vector<Decoded> decoded(matrices.size());
  const auto n = static_cast<std::ptrdiff_t>(matrices.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    decoded[static_cast<std::size_t>(i)] = decode(model, matrices[static_cast<std::size_t>(i)], mode);

  AggregateResult result;
  result.model = model;
  result.unannotated.provenance = corpus.provenance;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& sentence = corpus.sentences[i];
    auto entities = entities_from_tags(sentence, decoded[i].tags, decoded[i].confidence);
    if (entities.empty()) {
      result.unannotated.sentences.push_back(sentence);
      continue;
    }
    result.total_annotations += entities.size();
    for (const auto& e : entities) ++result.per_label[e.label];
    result.annotated.push_back({sentence, std::move(entities)});
  }
  return result;
}

}  // namespace

AggregateResult aggregate_corpus(const corpus::Corpus& corpus, const std::vector<weaklabel::SpanAnnotation>& spans,
                                 const TagScheme& scheme, const AggregateConfig& config) {
  const auto functions = config.functions.empty() ? sources_of(spans) : config.functions;
  const auto matrices = build_vote_matrices(corpus, spans, functions, scheme);
  std::size_t warnings = 0;
  for (const auto& m : matrices) warnings += m.warnings.size();
  if (warnings) spdlog::info("{} span(s) snapped or dropped while building vote matrices", warnings);
  const auto model = fit_hmm(matrices, scheme, config.fit);
  return partition(model, corpus, matrices, config.mode);
}

AggregateResult decode_corpus(const AggregationModel& model, const corpus::Corpus& corpus,
                              const std::vector<weaklabel::SpanAnnotation>& spans, const TagScheme& scheme,
                              DecodeMode mode) {
  if (model.states != scheme.tags()) throw DataError("model states do not match the tag scheme");
  auto functions = model.functions;
  const auto matrices = build_vote_matrices(corpus, spans, functions, scheme);
  return partition(model, corpus, matrices, mode);
}

}  // namespace finespan::aggregate

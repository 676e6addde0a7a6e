#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finespan/corpus.hpp"
#include "finespan/hmm.hpp"
#include "finespan/tagcodec.hpp"
#include "finespan/weaklabel.hpp"

namespace finespan::aggregate {

inline constexpr int kAbstain = -1;

/// Token-level votes of every labeling function for one sentence.
struct VoteMatrix {
  std::string sentence_id;
  std::vector<std::string> tokens;
  std::vector<std::string> functions;
  std::vector<std::vector<int>> votes;  // [function][token]: tag id or kAbstain
  std::vector<std::string> warnings;

  std::size_t token_count() const { return tokens.size(); }
};

/// Projects each function's spans onto BIO votes. Spans that cut through a
/// token are snapped outward to the covering tokens and reported in
/// `warnings`; within one function, a span overlapping an earlier accepted
/// one is dropped with a warning. Spans from sources not listed in
/// `functions` are ignored.
VoteMatrix build_vote_matrix(const corpus::Sentence& sentence,
                             std::span<const weaklabel::SpanAnnotation> spans,
                             const std::vector<std::string>& functions,
                             const tagcodec::TagScheme& scheme);

/// One matrix per sentence, in corpus order. Throws DataError for spans
/// whose sentence id is not in the corpus.
std::vector<VoteMatrix> build_vote_matrices(const corpus::Corpus& corpus,
                                            const std::vector<weaklabel::SpanAnnotation>& spans,
                                            const std::vector<std::string>& functions,
                                            const tagcodec::TagScheme& scheme);

/// Distinct span sources, sorted.
std::vector<std::string> sources_of(const std::vector<weaklabel::SpanAnnotation>& spans);

// -- majority vote ------------------------------------------------------------

enum class TieBreak { label_frequency, lexicographic, longest_span };

/// Non-abstain vote count per tag id across matrices.
std::vector<std::size_t> vote_frequencies(std::span<const VoteMatrix> matrices, const tagcodec::TagScheme& scheme);

/// Per-token most frequent vote (all-abstain -> O), followed by BIO repair.
/// Label-frequency ties prefer the tag voted most often corpus-wide and fall
/// back to lexicographic order. Longest-span ties prefer the tag whose voted
/// span covers the most tokens, then fall back to label frequency.
/// `frequencies` is required unless ties are lexicographic.
std::vector<std::string> majority_vote(const VoteMatrix& matrix, const tagcodec::TagScheme& scheme,
                                       TieBreak tie_break = TieBreak::lexicographic,
                                       const std::vector<std::size_t>* frequencies = nullptr);

// -- HMM aggregation ----------------------------------------------------------

struct FitConfig {
  std::size_t max_iter = 50;
  double tol = 1e-6;  // stop when the relative log-likelihood gain drops below this
  std::uint64_t seed = 0;
};

/// Hidden states are the scheme's BIO tags. Each labeling function f emits
/// one symbol per token from tags + ABSTAIN (index = number of states) with
/// probability emission[f](state, symbol); functions are conditionally
/// independent given the state.
struct AggregationModel {
  std::vector<std::string> states;
  std::vector<std::string> functions;
  std::vector<double> initial;
  hmm::Matrix transition;             // states x states
  std::vector<hmm::Matrix> emission;  // per function: states x (states + 1)
  FitConfig config;
  std::string corpus_fingerprint;
  std::vector<double> log_likelihood;  // one entry per E-step, in order
  std::vector<std::string> dropped_functions;

  std::size_t abstain_symbol() const { return states.size(); }

  nlohmann::json to_json() const;
  static AggregationModel from_json(const nlohmann::json& doc);
};

/// Expected sufficient statistics gathered by one E-step.
struct ExpectedCounts {
  std::vector<double> initial;
  hmm::Matrix transition;
  std::vector<hmm::Matrix> emission;
  double log_likelihood = 0.0;

  ExpectedCounts() = default;
  ExpectedCounts(std::size_t states, std::size_t functions);
  void merge(const ExpectedCounts& other);
};

/// E-step over all matrices, parallel over fixed sentence blocks and reduced
/// in block order, so the result does not depend on the thread count.
ExpectedCounts expected_counts(const AggregationModel& model, std::span<const VoteMatrix> matrices);

/// Single-threaded sentence-by-sentence reference for `expected_counts`.
ExpectedCounts expected_counts_serial(const AggregationModel& model, std::span<const VoteMatrix> matrices);

/// M-step. P(ABSTAIN | state) is held at its initial rate and the rest of
/// each emission row is re-estimated. Rows with no expected mass keep their
/// previous values.
void maximize(AggregationModel& model, const ExpectedCounts& counts);

/// Initial parameters from longest-span majority-vote labels: add-one smoothed initial and
/// transition counts restricted to valid BIO moves; emissions put 0.9 of the
/// non-abstain mass on the matching tag and spread the rest uniformly, with
/// P(ABSTAIN | state) set to the function's add-one smoothed abstain rate on
/// tokens majority vote assigned to that state. Labels that receive no vote get
/// zero initial and incoming transition probability.
AggregationModel initialize_model(std::span<const VoteMatrix> matrices, const tagcodec::TagScheme& scheme,
                                  const std::vector<std::string>& functions);

/// Baum-Welch. Functions that abstain on every token are dropped with a
/// warning; throws DataError("nothing to aggregate") when no vote remains.
AggregationModel fit_hmm(std::span<const VoteMatrix> matrices, const tagcodec::TagScheme& scheme,
                         const FitConfig& config = {});

/// Sum over functions of log P(vote | state), per token (tokens x states).
/// `floor` lower-bounds emission probabilities; 0 keeps the exact model.
hmm::Matrix emission_scores(const AggregationModel& model, const VoteMatrix& matrix, double floor = 0.0);

hmm::LogModel log_model(const AggregationModel& model);

enum class DecodeMode { viterbi, posterior };
DecodeMode parse_decode_mode(std::string_view name);

struct Decoded {
  std::vector<std::string> tags;
  std::vector<double> confidence;  // posterior mass of the chosen state per token
};

Decoded decode(const AggregationModel& model, const VoteMatrix& matrix, DecodeMode mode = DecodeMode::viterbi);

// -- corpus-level aggregation ---------------------------------------------

struct AnnotatedEntity {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;
  std::string label;
  double confidence = 0.0;
};

struct AnnotatedSentence {
  corpus::Sentence sentence;
  std::vector<AnnotatedEntity> entities;
};

nlohmann::json to_json(const AnnotatedSentence& annotated);
AnnotatedSentence annotated_from_json(const nlohmann::json& record);

/// Character spans for the maximal B/I runs of `tags` over the sentence's
/// tokens, trimmed to the punctuation-stripped token cores at both ends.
std::vector<AnnotatedEntity> entities_from_tags(const corpus::Sentence& sentence,
                                                const std::vector<std::string>& tags,
                                                const std::vector<double>& confidence);

struct AggregateConfig {
  FitConfig fit;
  DecodeMode mode = DecodeMode::viterbi;
  /// Functions to consider; empty means every span source.
  std::vector<std::string> functions;
};

struct AggregateResult {
  AggregationModel model;
  std::vector<AnnotatedSentence> annotated;
  corpus::Corpus unannotated;
  std::size_t total_annotations = 0;
  std::map<std::string, std::size_t> per_label;

  /// Total annotations over every input sentence, annotated or not.
  double annotations_per_sentence() const;
  nlohmann::json summary() const;
};

AggregateResult aggregate_corpus(const corpus::Corpus& corpus, const std::vector<weaklabel::SpanAnnotation>& spans,
                                 const tagcodec::TagScheme& scheme, const AggregateConfig& config = {});

/// Decodes every sentence with an already fitted model.
AggregateResult decode_corpus(const AggregationModel& model, const corpus::Corpus& corpus,
                              const std::vector<weaklabel::SpanAnnotation>& spans,
                              const tagcodec::TagScheme& scheme, DecodeMode mode);

}  // namespace finespan::aggregate

#pragma once

// Token-level scoring of predicted tag sequences against gold: per-class
// precision/recall/F1 and the MUC-5 COR/INC/MIS/SPU categories with their
// derived error rates and manual-verification overrides.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "finespan/tagcodec.hpp"

namespace finespan::nereval {

/// label_only: B-X and I-X of the same X agree. strict_bio: tags must match.
enum class CompareMode { label_only, strict_bio };
CompareMode parse_compare_mode(std::string_view name);
std::string_view to_string(CompareMode mode);

// -- precision / recall / F1 -------------------------------------------------

struct ClassScore {
  std::string label;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::size_t support = 0;    // gold entity tokens
  std::size_t predicted = 0;  // predicted entity tokens
  std::size_t true_positive = 0;
};

struct PrfReport {
  CompareMode mode = CompareMode::label_only;
  std::vector<ClassScore> classes;  // labels with support or predictions, alphabetical
  ClassScore macro;     // unweighted mean over classes where the metric is defined
  ClassScore micro;     // pooled counts
  ClassScore weighted;  // support-weighted mean over classes where the metric is defined

  nlohmann::json to_json() const;
  /// Per-class rows, then macro/micro/weighted rows, four decimals.
  std::string to_markdown(std::string_view title = {}) const;
};

/// Sentences are matched by id and must have equal token counts. Throws
/// DataError for tags outside the scheme, unmatched ids or length drift.
PrfReport prf_report(std::span<const tagcodec::TaggedSentence> gold, std::span<const tagcodec::TaggedSentence> pred,
                     const tagcodec::TagScheme& scheme, CompareMode mode = CompareMode::label_only);

// -- MUC-5 categories ---------------------------------------------------------

enum class Category { cor, inc, mis, spu };
std::string_view to_string(Category category);
Category parse_category(std::string_view name);

struct MucCounts {
  std::size_t cor = 0;
  std::size_t inc = 0;
  std::size_t mis = 0;
  std::size_t spu = 0;

  std::size_t& at(Category c);
  std::size_t at(Category c) const;
  MucCounts& operator+=(const MucCounts& other);
  bool operator==(const MucCounts&) const = default;
};

/// Totals plus a breakdown keyed by the gold label (COR/INC/MIS) or the
/// predicted label (SPU).
struct MucTally {
  MucCounts totals;
  std::map<std::string, MucCounts> per_class;

  void add(Category category, const std::string& label);
  MucTally& operator+=(const MucTally& other);
};

/// One tallied token. `token_index` is the gold position when the event
/// involves a gold token and the predicted position otherwise.
struct MucEvent {
  std::string sentence_id;
  std::size_t token_index = 0;
  Category category = Category::cor;
  std::string gold_tag;
  std::string pred_tag;
};

struct MucResult {
  MucTally tally;
  std::vector<MucEvent> events;  // COR events included

  MucResult& operator+=(const MucResult& other);
};

/// Pairs of (gold position, predicted position); a missing side means the
/// token has no partner.
struct Alignment {
  std::vector<std::optional<std::size_t>> gold;
  std::vector<std::optional<std::size_t>> pred;

  std::size_t size() const { return gold.size(); }
};

/// Longest-common-subsequence alignment of token surfaces. Among equally
/// long alignments the latest matching partner is kept.
Alignment align_for_muc(std::span<const std::string> gold_tokens, std::span<const std::string> pred_tokens);

/// Identity alignment for sequences of equal length.
Alignment identity_alignment(std::size_t length);

/// Categorizes aligned tokens; unpartnered tokens face an implicit O.
MucResult muc_categorize(const tagcodec::TaggedSentence& gold, const tagcodec::TaggedSentence& pred,
                         const Alignment& alignment, CompareMode mode = CompareMode::label_only);

/// Equal-length variant; throws DataError on a length mismatch.
MucResult muc_categorize(const tagcodec::TaggedSentence& gold, const tagcodec::TaggedSentence& pred,
                         CompareMode mode = CompareMode::label_only);

/// Id-matched corpus scoring. Pairs whose token surfaces differ are aligned
/// with align_for_muc first. Throws DataError for unmatched ids.
MucResult muc_evaluate(std::span<const tagcodec::TaggedSentence> gold, std::span<const tagcodec::TaggedSentence> pred,
                       CompareMode mode = CompareMode::label_only);

/// Undefined (zero-denominator) rates are nullopt.
struct MucMetrics {
  std::optional<double> error_per_response_fill;
  std::optional<double> undergeneration;
  std::optional<double> overgeneration;
  std::optional<double> substitution;

  nlohmann::json to_json() const;
};

MucMetrics muc_metrics(const MucCounts& counts);

// -- manual-verification overrides -----------------------------------------

struct OverrideRecord {
  std::string sentence_id;
  std::size_t token_index = 0;
  Category category = Category::inc;
  bool model_correct = false;  // verdict "yes"
  std::size_t line = 0;
};

/// CSV with header sentence_id,token_index,category,verdict. Category must be
/// INC, MIS or SPU; verdict yes or no (case-insensitive).
std::vector<OverrideRecord> parse_overrides(std::string_view csv);

/// Raw and adjusted tallies. A "yes" on SPU moves the event to correct
/// additions; a "yes" on INC or MIS marks a gold error and removes it from
/// the error counts. Events without an override count as "no".
struct OverrideOutcome {
  MucCounts raw;
  MucCounts adjusted;
  MucCounts confirmed;  // "yes" verdicts per category
  std::size_t correct_additions = 0;
  std::size_t gold_errors = 0;

  nlohmann::json to_json() const;
  /// Metric,Correct?,<model> rows: COR, then No/Yes for MIS, INC, SPU.
  std::string to_csv(std::string_view model_name) const;
};

/// Throws DataError listing every override that matches no event of its
/// category, and any event overridden twice.
OverrideOutcome apply_overrides(const MucResult& result, std::span<const OverrideRecord> overrides);

}  // namespace finespan::nereval

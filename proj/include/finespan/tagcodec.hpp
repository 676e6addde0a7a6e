#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "finespan/corpus.hpp"

namespace finespan::tagcodec {

/// The 23 labels of the Brazilian earnings-call scheme, alphabetically sorted.
const std::vector<std::string>& default_labels();

/// Ordered label set with its BIO tags. Tag ids are assigned "O" = 0, then
/// B-X and I-X for each label X in alphabetical order, so id(I-X) = id(B-X)+1.
class TagScheme {
 public:
  /// Sorts the labels; throws ConfigError on empty input, empty or
  /// duplicate labels, or labels containing whitespace.
  static TagScheme build(std::vector<std::string> labels);
  static TagScheme from_json(const nlohmann::json& doc);

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::string>& tags() const { return tags_; }
  std::size_t size() const { return tags_.size(); }

  bool has_label(std::string_view label) const;
  bool has_tag(std::string_view tag) const;
  /// Throws DataError for tags outside the scheme.
  int id(std::string_view tag) const;
  const std::string& tag(int id) const { return tags_.at(static_cast<std::size_t>(id)); }

  int begin_id(std::string_view label) const { return id("B-" + std::string(label)); }
  int inside_id(std::string_view label) const { return begin_id(label) + 1; }
  static bool is_begin(int id) { return id > 0 && id % 2 == 1; }
  static bool is_inside(int id) { return id > 0 && id % 2 == 0; }
  /// Empty for "O".
  std::string_view label_of(int id) const;

  nlohmann::json to_json() const;
  std::string fingerprint() const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> tag_to_id_;
};

/// "B-LUCRO" -> "LUCRO", "O" -> "".
std::string_view label_of_tag(std::string_view tag);

/// True when no I-X follows anything other than B-X or I-X.
bool is_valid_bio(const std::vector<std::string>& tags);

/// Promotes orphan I-X tags to B-X.
std::vector<std::string> repair_bio(std::vector<std::string> tags);

struct TaggedSentence {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> tags;

  bool operator==(const TaggedSentence&) const = default;
};

/// Throws DataError when lengths differ, tags are outside the scheme or the
/// BIO sequence is invalid.
void validate(const TaggedSentence& tagged, const TagScheme& scheme);

nlohmann::json to_json(const TaggedSentence& tagged);
TaggedSentence tagged_from_json(const nlohmann::json& record);

/// Token-classification export: {"id", "tokens", "ner_tags": [int]}.
nlohmann::json to_token_classification(const TaggedSentence& tagged, const TagScheme& scheme);

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string label;
};

struct BioResult {
  TaggedSentence tagged;
  std::vector<std::string> diagnostics;
};

/// Projects character spans onto whitespace tokens. Spans that cut through a
/// token are snapped outward with a diagnostic; when spans overlap the
/// outermost (then earliest) one wins and the rest are reported.
BioResult spans_to_bio(const corpus::Sentence& sentence, const std::vector<EntitySpan>& entities,
                       const TagScheme& scheme);

// -- subword alignment ----------------------------------------------------

inline constexpr int kIgnoreIndex = -100;

struct SubwordAlignment {
  std::vector<std::string> subwords;
  std::vector<std::optional<std::size_t>> token_index;  // nullopt marks specials
  std::vector<int> label_ids;
};

struct SpecialTokens {
  std::size_t prefix = 0;
  std::size_t suffix = 0;
  std::string prefix_surface = "[CLS]";
  std::string suffix_surface = "[SEP]";
};

/// Every subword repeats the tag id of its token; specials carry -100.
SubwordAlignment align_subwords(const TaggedSentence& tagged,
                                const std::vector<std::vector<std::string>>& segmentation,
                                const SpecialTokens& specials, const TagScheme& scheme);

/// Total subwords over total tokens across all sentences.
double subword_ratio(const std::vector<std::vector<std::vector<std::string>>>& segmentations);
double subword_ratio(std::size_t subwords, std::size_t tokens);

// -- seq2seq template -----------------------------------------------------

struct SeqTarget {
  std::string id;
  std::string target_text;
};

/// Wraps every maximal B/I run as `[w1_w2|LABEL]` and joins tokens with
/// single spaces. Inside entities `\` and `_` are escaped as `\\` and `\_`.
/// Throws DataError for entity tokens containing `[`, `]` or `|`, and for
/// outside tokens that would read back as an entity.
SeqTarget encode_seq(const TaggedSentence& tagged);

enum class DiagnosticKind { unknown_label, malformed_pattern, empty_entity };
std::string_view to_string(DiagnosticKind kind);

struct DecodeDiagnostic {
  DiagnosticKind kind;
  std::size_t token_index;  // position in the whitespace split
  std::string token;
};

struct DecodeResult {
  TaggedSentence tagged;
  std::vector<DecodeDiagnostic> diagnostics;
};

/// Whitespace split; `[...|LABEL]` tokens with a known label expand into
/// B-/I- tagged words, everything else is tagged O. In strict mode any
/// diagnostic raises DataError; lenient mode never throws.
DecodeResult decode_seq(std::string_view generated, const TagScheme& scheme, bool strict,
                        std::string id = {});

}  // namespace finespan::tagcodec

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finespan::corpus {

struct Token {
  std::string surface;
  std::size_t start = 0;  // byte offset into Sentence::text
  std::size_t end = 0;

  bool operator==(const Token&) const = default;
};

/// Whitespace tokenization. Offsets are byte offsets into `text`.
std::vector<Token> tokenize(std::string_view text);

struct Sentence {
  std::string id;
  std::string text;
  std::map<std::string, std::string> meta;
  std::vector<Token> tokens;

  /// Tokens that are not pure punctuation.
  std::size_t word_count() const;
};

Sentence make_sentence(std::string id, std::string text,
                       std::map<std::string, std::string> meta = {});

struct Provenance {
  std::vector<std::string> sources;
  std::string ingested_at;  // ISO-8601 UTC; never written to artifacts
};

struct Corpus {
  std::vector<Sentence> sentences;
  Provenance provenance;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
};

enum class Format { csv, jsonl };

Format parse_format(std::string_view name);

/// Reads a CSV (header row with a `text` column) or JSON-lines file.
/// Missing ids become `<file-stem>:<row-index>` with a 0-based data row index.
/// Every other column or key is kept as string metadata.
Corpus ingest(const std::filesystem::path& path, Format format);

/// Throws DataError on duplicate sentence ids.
void check_unique_ids(const Corpus& corpus);

nlohmann::json sentence_to_json(const Sentence& sentence);
Sentence sentence_from_json(const nlohmann::json& record, std::string fallback_id);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

// -- filtering -------------------------------------------------------------

enum class DropReason { too_short, duplicate };
std::string_view to_string(DropReason reason);

struct FilterResult {
  Corpus kept;
  Corpus dropped;
  std::vector<DropReason> reasons;  // parallel to dropped.sentences
};

/// Keeps sentences with more than `min_words` words and, with `dedupe`, the
/// first occurrence of each trimmed text. Order is preserved on both sides.
FilterResult filter(const Corpus& corpus, std::size_t min_words, bool dedupe);

// -- descriptive statistics ------------------------------------------------

struct LengthSummary {
  std::size_t count = 0;
  std::size_t min = 0;
  std::size_t max = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  std::size_t bin_width = 1;
  std::size_t bin_start = 0;
  std::vector<std::size_t> histogram;  // bin i covers [bin_start + i*w, bin_start + (i+1)*w)
};

struct StatsReport {
  std::optional<std::string> group_by;
  LengthSummary overall;
  std::map<std::string, LengthSummary> groups;
};

LengthSummary summarize_lengths(const std::vector<std::size_t>& word_counts,
                                std::size_t bin_width = 1);

StatsReport stats(const Corpus& corpus, const std::optional<std::string>& group_by,
                  std::size_t bin_width = 1);

nlohmann::json to_json(const LengthSummary& summary);
nlohmann::json to_json(const StatsReport& report);

// -- splitting -------------------------------------------------------------

/// Name and version of the shuffle recorded in every split manifest.
inline constexpr std::string_view kSplitAlgorithm = "splitmix64+fisher-yates/v1";

struct SplitSpec {
  double train = 0.7;
  double validation = 0.2;
  double test = 0.1;
  std::uint64_t seed = 42;

  /// Throws ConfigError unless fractions are non-negative and sum to 1.
  void validate() const;
};

SplitSpec parse_fractions(std::string_view csv, std::uint64_t seed);

/// Partition sizes: validation and test get floor(n*f), train takes the rest.
std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec);

struct SplitResult {
  Corpus train;
  Corpus validation;
  Corpus test;
};

SplitResult split(const Corpus& corpus, const SplitSpec& spec);

/// Deterministic permutation of [0, n) drawn from the split generator.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

/// JSON-lines manifest: header record naming the algorithm, then one
/// {"id", "partition"} record per sentence in partition order.
std::vector<nlohmann::json> split_manifest(const SplitResult& result, const SplitSpec& spec);

/// SplitMix64 (Steele, Lea, Flood 2014). Small, fast and trivially portable,
/// which is what reproducible splits across implementations need.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace finespan::corpus

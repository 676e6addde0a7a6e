#pragma once

// Classification of text-generation errors into critical (numbers, words or
// repetition changed) and non-critical (formatting only).

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace finespan::nereval {

enum class Severity { critical, non_critical };
std::string_view to_string(Severity severity);
Severity parse_severity(std::string_view name);

enum class Reason { numeric_alteration, word_change, repetition, formatting_only };
std::string_view to_string(Reason reason);
Reason parse_reason(std::string_view name);

struct ErrorTriage {
  std::string sentence_id;
  Severity severity = Severity::non_critical;
  std::vector<Reason> reasons;  // in enum order
  double similarity = 1.0;

  nlohmann::json to_json() const;
  static ErrorTriage from_json(const nlohmann::json& record);
};

struct TriageConfig {
  /// Minimum n-gram length, in whitespace tokens, for repetition checks.
  std::size_t repetition_ngram = 4;
};

/// Numbers in Brazilian notation (`.` thousands, `,` decimals), keeping a
/// trailing `%` and a leading `R$`, e.g. "R$824,00", "0,08%", "2022".
std::vector<std::string> numeric_tokens(std::string_view text);

/// Largest number of consecutive copies of any n-gram with n >= min_n,
/// keyed by the n-gram joined with single spaces.
std::map<std::string, std::size_t> consecutive_repeats(const std::vector<std::string>& tokens, std::size_t min_n);

/// Words of a generated or target sentence with the `[entity|LABEL]` markup
/// removed, case and accents folded, outer punctuation stripped and
/// numeric tokens dropped.
std::vector<std::string> normalized_words(std::string_view text);

/// nullopt when the strings are identical.
std::optional<ErrorTriage> triage_generation(std::string_view target, std::string_view generated,
                                             const TriageConfig& config = {}, std::string sentence_id = {});

struct TriageSummary {
  std::size_t evaluated = 0;
  std::size_t critical = 0;
  std::size_t non_critical = 0;
  std::map<std::string, std::size_t> reasons;
  double bin_width = 0.05;
  std::vector<std::size_t> critical_histogram;  // similarity bins over [0, 1]
  std::vector<std::size_t> non_critical_histogram;

  std::size_t errors() const { return critical + non_critical; }
  /// Share of the evaluated sentences with any error, in percent; nullopt
  /// when nothing was evaluated.
  std::optional<double> error_percent() const;
  std::optional<double> critical_percent() const;
  nlohmann::json to_json() const;
};

/// `evaluated` is the size of the evaluated set, errors or not. Values equal
/// to 1.0 fall in the last bin.
TriageSummary triage_summary(std::span<const ErrorTriage> triages, std::size_t evaluated, double bin_width = 0.05);

}  // namespace finespan::nereval

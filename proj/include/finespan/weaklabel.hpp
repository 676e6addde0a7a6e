#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <regex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "finespan/corpus.hpp"

namespace finespan::weaklabel {

struct SpanAnnotation {
  std::string sentence_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;
  std::string label;
  std::string source;

  bool operator==(const SpanAnnotation&) const = default;
};

nlohmann::json to_json(const SpanAnnotation& span);
SpanAnnotation span_from_json(const nlohmann::json& record);

/// POSIX extended regex (leftmost-longest) matched over the raw sentence
/// bytes. Matches that begin or end inside a word are discarded.
class RegexFunction {
 public:
  /// Throws ConfigError when the pattern does not compile.
  RegexFunction(std::string name, std::string label, std::string pattern, bool case_insensitive = false);

  const std::string& name() const { return name_; }
  const std::string& label() const { return label_; }
  const std::string& pattern() const { return pattern_; }
  bool case_insensitive() const { return case_insensitive_; }

  std::vector<SpanAnnotation> apply(const corpus::Sentence& sentence) const;

 private:
  std::string name_;
  std::string label_;
  std::string pattern_;
  bool case_insensitive_;
  std::regex regex_;
};

enum class HeuristicRule { percent, money };
HeuristicRule parse_heuristic(std::string_view id);
std::string_view to_string(HeuristicRule rule);

/// Hand-written scanners for quantities whose surface forms vary too much
/// for a single pattern: `12,5%`, `R$ 900 MM`, `R$10,8 bilhões`,
/// `900 milhões de reais`.
class HeuristicFunction {
 public:
  HeuristicFunction(std::string name, std::string label, HeuristicRule rule);

  const std::string& name() const { return name_; }
  const std::string& label() const { return label_; }
  HeuristicRule rule() const { return rule_; }

  std::vector<SpanAnnotation> apply(const corpus::Sentence& sentence) const;

 private:
  std::string name_;
  std::string label_;
  HeuristicRule rule_;
};

struct Gazetteer {
  std::string label;
  std::vector<std::string> phrases;  // whitespace-normalized
  bool case_sensitive = false;
  bool accent_sensitive = true;

  /// Throws ConfigError for an empty label, empty phrase list or empty phrase.
  void validate() const;
};

Gazetteer load_gazetteer(const std::filesystem::path& path);
/// Every *.json file in `dir`, in filename order.
std::vector<Gazetteer> load_gazetteer_dir(const std::filesystem::path& dir);

/// Immutable token trie. Matching is token-aligned: a phrase token matches
/// a sentence token when their punctuation-stripped cores agree after the
/// configured case and accent folding. At each start token the longest
/// phrase wins and scanning resumes after it.
class GazetteerFunction {
 public:
  explicit GazetteerFunction(Gazetteer gazetteer);

  std::string name() const { return "gazetteer:" + gazetteer_.label; }
  const std::string& label() const { return gazetteer_.label; }
  const Gazetteer& gazetteer() const { return gazetteer_; }

  std::vector<SpanAnnotation> apply(const corpus::Sentence& sentence) const;

 private:
  struct Node {
    std::map<std::string, std::size_t> children;
    bool terminal = false;
  };

  std::string key(std::string_view token_core) const;

  Gazetteer gazetteer_;
  std::vector<Node> nodes_;
};

using LabelingFunction = std::variant<RegexFunction, HeuristicFunction, GazetteerFunction>;

std::string function_name(const LabelingFunction& fn);
std::string function_label(const LabelingFunction& fn);

/// Ordered collection of labeling functions with unique names.
class FunctionSet {
 public:
  void add(LabelingFunction fn);
  const std::vector<LabelingFunction>& functions() const { return functions_; }
  std::vector<std::string> names() const;
  std::size_t size() const { return functions_.size(); }

  /// SHA-256 over the canonical JSON of every function's configuration.
  std::string fingerprint() const;

 private:
  std::vector<LabelingFunction> functions_;
};

/// Rule file: a JSON list of {name, kind, label, pattern?, rule?,
/// case_insensitive?}. Heuristic rules name their scanner in `rule`
/// (defaulting to `pattern`, then `name`).
std::vector<LabelingFunction> load_rules(const std::filesystem::path& path);
std::vector<LabelingFunction> parse_rules(const nlohmann::json& doc);

std::vector<SpanAnnotation> run_regex_annotators(const corpus::Corpus& corpus,
                                                 const std::vector<RegexFunction>& patterns);
std::vector<SpanAnnotation> run_heuristic_annotators(const corpus::Corpus& corpus,
                                                     const std::vector<HeuristicFunction>& rules);
std::vector<SpanAnnotation> run_gazetteer(const corpus::Corpus& corpus,
                                          const std::vector<Gazetteer>& gazetteers);

/// Applies every function to every sentence, parallel over sentences.
/// Output order: sentence order, then function order, then span start.
std::vector<SpanAnnotation> annotate(const corpus::Corpus& corpus, const FunctionSet& functions);

/// Single-threaded reference for `annotate`.
std::vector<SpanAnnotation> annotate_serial(const corpus::Corpus& corpus, const FunctionSet& functions);

}  // namespace finespan::weaklabel

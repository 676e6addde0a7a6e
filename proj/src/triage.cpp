#include "finespan/triage.hpp"

#include <algorithm>
#include <cmath>

#include "finespan/error.hpp"
#include "finespan/similarity.hpp"
#include "finespan/text.hpp"

namespace finespan::nereval {

using nlohmann::json;

std::string_view to_string(Severity severity) {
  return severity == Severity::critical ? "critical" : "non-critical";
}

Severity parse_severity(std::string_view name) {
  if (name == "critical") return Severity::critical;
  if (name == "non-critical") return Severity::non_critical;
  throw DataError("unknown severity '" + std::string(name) + "'");
}

std::string_view to_string(Reason reason) {
  switch (reason) {
    case Reason::numeric_alteration: return "numeric-alteration";
    case Reason::word_change: return "word-change";
    case Reason::repetition: return "repetition";
    case Reason::formatting_only: return "formatting-only";
  }
  return "?";
}

Reason parse_reason(std::string_view name) {
  for (const auto r : {Reason::numeric_alteration, Reason::word_change, Reason::repetition, Reason::formatting_only})
    if (to_string(r) == name) return r;
  throw DataError("unknown triage reason '" + std::string(name) + "'");
}

json ErrorTriage::to_json() const {
  json r = json::array();
  for (const auto reason : reasons) r.push_back(to_string(reason));
  return {{"id", sentence_id}, {"severity", to_string(severity)}, {"reasons", std::move(r)}, {"similarity", similarity}};
}

ErrorTriage ErrorTriage::from_json(const json& record) {
  ErrorTriage t;
  try {
    t.sentence_id = record.value("id", std::string());
    t.severity = parse_severity(record.at("severity").get<std::string>());
    for (const auto& r : record.value("reasons", json::array())) t.reasons.push_back(parse_reason(r.get<std::string>()));
    t.similarity = record.value("similarity", 1.0);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed triage record: ") + e.what());
  }
  return t;
}

namespace {

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && text::is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !text::is_space(s[i])) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

/// Entity words of a `[w1_w2|LABEL]` token with `\_` and `\\` unescaped, or
/// the token itself when it is not entity markup. Punctuation glued to
/// either side of the brackets, as in `[9,8|MONEY].`, is kept as its own word.
std::vector<std::string> token_words(const std::string& token) {
  const auto open = token.find('[');
  const auto close = token.rfind(']');
  const auto bar = token.rfind('|');
  if (open == std::string::npos || close == std::string::npos || bar == std::string::npos || bar < open ||
      bar > close || close - open < 2 || !text::is_all_punct(token.substr(0, open) + ".") ||
      !text::is_all_punct(token.substr(close + 1) + "."))
    return {token};
  const std::string_view body(token.data() + open + 1, bar - open - 1);
  std::vector<std::string> words;
  if (open > 0) words.push_back(token.substr(0, open));
  words.emplace_back();
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] == '\\' && i + 1 < body.size() && (body[i + 1] == '_' || body[i + 1] == '\\')) {
      words.back().push_back(body[++i]);
    } else if (body[i] == '_') {
      words.emplace_back();
    } else {
      words.back().push_back(body[i]);
    }
  }
  if (close + 1 < token.size()) words.push_back(token.substr(close + 1));
  return words;
}

bool is_numeric_word(std::string_view w) {
  if (w.starts_with("r$") || w.starts_with("R$")) w.remove_prefix(2);
  if (w.ends_with('%')) w.remove_suffix(1);
  if (w.empty() || !is_ascii_digit(w.front())) return false;
  return std::all_of(w.begin(), w.end(), [](char c) { return is_ascii_digit(c) || c == '.' || c == ','; });
}

/// Removes the second and later copies of consecutively repeated n-grams.
std::vector<std::string> collapse_repeats(std::vector<std::string> words, std::size_t min_n) {
  min_n = std::max<std::size_t>(min_n, 1);
  for (std::size_t i = 0; i < words.size(); ++i) {
    for (std::size_t n = min_n; i + 2 * n <= words.size(); ++n) {
      while (i + 2 * n <= words.size() &&
             std::equal(words.begin() + static_cast<std::ptrdiff_t>(i), words.begin() + static_cast<std::ptrdiff_t>(i + n),
                        words.begin() + static_cast<std::ptrdiff_t>(i + n)))
        words.erase(words.begin() + static_cast<std::ptrdiff_t>(i + n),
                    words.begin() + static_cast<std::ptrdiff_t>(i + 2 * n));
    }
  }
  return words;
}

}  // namespace

std::vector<std::string> numeric_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::string prefix;
    std::size_t j = i;
    if (s.substr(i, 2) == "R$") {
      j = i + 2;
      if (j < s.size() && (s[j] == ' ' || s[j] == '_')) ++j;
      if (j >= s.size() || !is_ascii_digit(s[j])) {
        i += 2;
        continue;
      }
      prefix = "R$";
    } else if (!is_ascii_digit(s[i])) {
      ++i;
      continue;
    }
    const std::size_t start = j;
    while (j < s.size() && is_ascii_digit(s[j])) ++j;
    while (j + 1 < s.size() && (s[j] == '.' || s[j] == ',') && is_ascii_digit(s[j + 1])) {
      ++j;
      while (j < s.size() && is_ascii_digit(s[j])) ++j;
    }
    std::string number = prefix + std::string(s.substr(start, j - start));
    if (j < s.size() && s[j] == '%') {
      number.push_back('%');
      ++j;
    }
    out.push_back(std::move(number));
    i = j;
  }
  return out;
}

std::map<std::string, std::size_t> consecutive_repeats(const std::vector<std::string>& tokens, std::size_t min_n) {
  std::map<std::string, std::size_t> out;
  min_n = std::max<std::size_t>(min_n, 1);
  const std::size_t len = tokens.size();
  for (std::size_t i = 0; i < len; ++i)
    for (std::size_t n = min_n; i + 2 * n <= len; ++n) {
      std::size_t copies = 1;
      while (i + (copies + 1) * n <= len &&
             std::equal(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n),
                        tokens.begin() + static_cast<std::ptrdiff_t>(i + copies * n)))
        ++copies;
      if (copies < 2) continue;
      std::string key;
      for (std::size_t k = i; k < i + n; ++k) {
        if (k > i) key.push_back(' ');
        key += tokens[k];
      }
      auto& slot = out[key];
      slot = std::max(slot, copies);
    }
  return out;
}

std::vector<std::string> normalized_words(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& token : split_ws(s))
    for (const auto& word : token_words(token)) {
      const std::string folded = text::fold(word);
      const auto [lo, hi] = text::core_range(folded);
      if (lo == hi) continue;
      std::string core = folded.substr(lo, hi - lo);
      if (is_numeric_word(core)) continue;
      out.push_back(std::move(core));
    }
  return out;
}

std::optional<ErrorTriage> triage_generation(std::string_view target, std::string_view generated,
                                             const TriageConfig& config, std::string sentence_id) {
  if (target == generated) return std::nullopt;
  ErrorTriage t;
  t.sentence_id = std::move(sentence_id);
  t.similarity = similarity_ratio(target, generated);

  auto target_numbers = numeric_tokens(target);
  auto generated_numbers = numeric_tokens(generated);
  std::sort(target_numbers.begin(), target_numbers.end());
  std::sort(generated_numbers.begin(), generated_numbers.end());
  if (target_numbers != generated_numbers) t.reasons.push_back(Reason::numeric_alteration);

  const auto n = config.repetition_ngram;
  if (collapse_repeats(normalized_words(target), n) != collapse_repeats(normalized_words(generated), n))
    t.reasons.push_back(Reason::word_change);

  const auto target_repeats = consecutive_repeats(split_ws(target), n);
  for (const auto& [ngram, copies] : consecutive_repeats(split_ws(generated), n)) {
    const auto it = target_repeats.find(ngram);
    if (copies > (it == target_repeats.end() ? 1 : it->second)) {
      t.reasons.push_back(Reason::repetition);
      break;
    }
  }

  if (t.reasons.empty()) {
    t.reasons.push_back(Reason::formatting_only);
    t.severity = Severity::non_critical;
  } else {
    t.severity = Severity::critical;
  }
  return t;
}

std::optional<double> TriageSummary::error_percent() const {
  if (evaluated == 0) return std::nullopt;
  return 100.0 * static_cast<double>(errors()) / static_cast<double>(evaluated);
}

std::optional<double> TriageSummary::critical_percent() const {
  if (evaluated == 0) return std::nullopt;
  return 100.0 * static_cast<double>(critical) / static_cast<double>(evaluated);
}

json TriageSummary::to_json() const {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json edges = json::array();
  for (std::size_t b = 0; b <= critical_histogram.size(); ++b)
    edges.push_back(std::min(1.0, static_cast<double>(b) * bin_width));
  return {{"evaluated", evaluated},
          {"errors", errors()},
          {"critical", critical},
          {"non_critical", non_critical},
          {"error_percent", opt(error_percent())},
          {"critical_percent", opt(critical_percent())},
          {"reasons", reasons},
          {"similarity_histogram",
           {{"bin_edges", std::move(edges)}, {"critical", critical_histogram}, {"non_critical", non_critical_histogram}}}};
}

TriageSummary triage_summary(std::span<const ErrorTriage> triages, std::size_t evaluated, double bin_width) {
  if (!(bin_width > 0.0) || bin_width > 1.0) throw ConfigError("histogram bin width must be in (0, 1]");
  TriageSummary s;
  s.evaluated = evaluated;
  s.bin_width = bin_width;
  const auto bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - 1e-9));
  s.critical_histogram.assign(bins, 0);
  s.non_critical_histogram.assign(bins, 0);
  for (const auto& t : triages) {
    const bool critical = t.severity == Severity::critical;
    ++(critical ? s.critical : s.non_critical);
    for (const auto r : t.reasons) ++s.reasons[std::string(to_string(r))];
    const double clamped = std::clamp(t.similarity, 0.0, 1.0);
    const auto bin = std::min(bins - 1, static_cast<std::size_t>(std::floor(clamped / bin_width + 1e-12)));
    ++(critical ? s.critical_histogram : s.non_critical_histogram)[bin];
  }
  return s;
}

}  // namespace finespan::nereval

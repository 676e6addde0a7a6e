#include "finespan/weaklabel.hpp"

#include <algorithm>
#include <set>

#include "finespan/error.hpp"
#include "finespan/io.hpp"
#include "finespan/text.hpp"

namespace finespan::weaklabel {

using nlohmann::json;

json to_json(const SpanAnnotation& span) {
  return {{"sentence_id", span.sentence_id}, {"start", span.start}, {"end", span.end},
          {"surface", span.surface},         {"label", span.label}, {"source", span.source}};
}

SpanAnnotation span_from_json(const json& record) {
  try {
    return {record.at("sentence_id").get<std::string>(), record.at("start").get<std::size_t>(),
            record.at("end").get<std::size_t>(),         record.at("surface").get<std::string>(),
            record.at("label").get<std::string>(),       record.at("source").get<std::string>()};
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed span annotation: ") + e.what());
  }
}

namespace {

SpanAnnotation make_span(const corpus::Sentence& sentence, std::size_t start, std::size_t end,
                         const std::string& label, const std::string& source) {
  return {sentence.id, start, end, sentence.text.substr(start, end - start), label, source};
}

}  // namespace

// -- regex -----------------------------------------------------------------

RegexFunction::RegexFunction(std::string name, std::string label, std::string pattern, bool case_insensitive)
    : name_(std::move(name)),
      label_(std::move(label)),
      pattern_(std::move(pattern)),
      case_insensitive_(case_insensitive) {
  if (pattern_.empty()) throw ConfigError("regex function '" + name_ + "' has an empty pattern");
  auto flags = std::regex::extended;
  if (case_insensitive_) flags |= std::regex::icase;
  try {
    regex_ = std::regex(pattern_, flags);
  } catch (const std::regex_error& e) {
    throw ConfigError("regex function '" + name_ + "': pattern does not compile: " + e.what());
  }
}

std::vector<SpanAnnotation> RegexFunction::apply(const corpus::Sentence& sentence) const {
  std::vector<SpanAnnotation> out;
  const std::string& text = sentence.text;
  std::size_t pos = 0;
  std::smatch match;
  while (pos < text.size()) {
    const auto flags = pos > 0 ? std::regex_constants::match_prev_avail : std::regex_constants::match_default;
    if (!std::regex_search(text.cbegin() + static_cast<std::ptrdiff_t>(pos), text.cend(), match, regex_, flags))
      break;
    const std::size_t start = pos + static_cast<std::size_t>(match.position(0));
    const std::size_t end = start + static_cast<std::size_t>(match.length(0));
    if (end > start && text::at_word_boundary(text, start) && text::at_word_boundary(text, end)) {
      out.push_back(make_span(sentence, start, end, label_, name_));
      pos = end;
    } else {
      pos = start;
      text::next_code_point(text, pos);
    }
  }
  return out;
}

// -- heuristics ------------------------------------------------------------

HeuristicRule parse_heuristic(std::string_view id) {
  if (id == "percent") return HeuristicRule::percent;
  if (id == "money") return HeuristicRule::money;
  throw ConfigError("unknown heuristic rule '" + std::string(id) + "' (expected percent or money)");
}

std::string_view to_string(HeuristicRule rule) { return rule == HeuristicRule::percent ? "percent" : "money"; }

HeuristicFunction::HeuristicFunction(std::string name, std::string label, HeuristicRule rule)
    : name_(std::move(name)), label_(std::move(label)), rule_(rule) {}

namespace {

bool digit_at(std::string_view s, std::size_t i) { return i < s.size() && s[i] >= '0' && s[i] <= '9'; }

/// Digits with `.`/`,` group or decimal separators. Returns the end offset,
/// or `start` when there is no digit at `start`.
std::size_t scan_number(std::string_view s, std::size_t start) {
  std::size_t i = start;
  while (digit_at(s, i)) ++i;
  if (i == start) return start;
  while (i + 1 < s.size() && (s[i] == '.' || s[i] == ',') && digit_at(s, i + 1)) {
    ++i;
    while (digit_at(s, i)) ++i;
  }
  return i;
}

/// Scale words after an amount, longest alternatives first.
constexpr std::string_view kScaleWords[] = {
    "milhões", "milhoes", "milhão", "milhao", "bilhões", "bilhoes", "bilhão", "bilhao",
    "trilhões", "trilhão", "mil",   "MM",     "MI",      "mi",      "bi",     "BI"};

std::size_t scan_word(std::string_view s, std::size_t at, std::string_view word) {
  if (s.substr(at, word.size()) != word) return at;
  const std::size_t end = at + word.size();
  return text::at_word_boundary(s, end) ? end : at;
}

/// Optional " <scale>" after an amount ending at `end`.
std::size_t scan_scale(std::string_view s, std::size_t end) {
  std::size_t at = end;
  if (at < s.size() && s[at] == ' ') ++at;
  for (auto word : kScaleWords) {
    const std::size_t after = scan_word(s, at, word);
    if (after != at) return after;
  }
  return end;
}

/// Optional " de reais" or " reais" after an amount ending at `end`.
std::size_t scan_reais(std::string_view s, std::size_t end) {
  if (end >= s.size() || s[end] != ' ') return end;
  std::size_t at = end + 1;
  const std::size_t after_de = scan_word(s, at, "de");
  if (after_de != at && after_de < s.size() && s[after_de] == ' ') at = after_de + 1;
  const std::size_t after = scan_word(s, at, "reais");
  return after != at ? after : end;
}

bool number_start(std::string_view s, std::size_t i) {
  if (!digit_at(s, i) || !text::at_word_boundary(s, i)) return false;
  if (i > 0 && (s[i - 1] == ',' || s[i - 1] == '.') && i > 1 && digit_at(s, i - 2)) return false;
  return true;
}

}  // namespace

std::vector<SpanAnnotation> HeuristicFunction::apply(const corpus::Sentence& sentence) const {
  std::vector<SpanAnnotation> out;
  const std::string_view s = sentence.text;
  std::size_t i = 0;
  while (i < s.size()) {
    if (rule_ == HeuristicRule::percent) {
      if (number_start(s, i)) {
        const std::size_t end = scan_number(s, i);
        std::size_t pct = end;
        if (pct < s.size() && s[pct] == ' ') ++pct;
        if (pct < s.size() && s[pct] == '%') {
          out.push_back(make_span(sentence, i, pct + 1, label_, name_));
          i = pct + 1;
        } else {
          i = end;
        }
        continue;
      }
    } else {
      if (s.substr(i, 2) == "R$" && text::at_word_boundary(s, i)) {
        std::size_t at = i + 2;
        if (at < s.size() && s[at] == ' ') ++at;
        const std::size_t end = scan_number(s, at);
        if (end != at) {
          const std::size_t stop = scan_scale(s, end);
          out.push_back(make_span(sentence, i, stop, label_, name_));
          i = stop;
          continue;
        }
      } else if (number_start(s, i)) {
        const std::size_t end = scan_number(s, i);
        const std::size_t scaled = scan_scale(s, end);
        const std::size_t stop = scan_reais(s, scaled);
        if (stop != scaled) out.push_back(make_span(sentence, i, stop, label_, name_));
        i = stop == scaled ? end : stop;
        continue;
      }
    }
    text::next_code_point(s, i);
  }
  return out;
}

// -- gazetteers ------------------------------------------------------------

void Gazetteer::validate() const {
  if (label.empty()) throw ConfigError("gazetteer has an empty label");
  if (phrases.empty()) throw ConfigError("gazetteer '" + label + "' has no phrases");
  for (const auto& p : phrases)
    if (text::trim(p).empty()) throw ConfigError("gazetteer '" + label + "' contains an empty phrase");
}

namespace {

std::string normalize_whitespace(std::string_view phrase) {
  std::string out;
  for (const auto& token : corpus::tokenize(phrase)) {
    if (!out.empty()) out.push_back(' ');
    out += token.surface;
  }
  return out;
}

}  // namespace

Gazetteer load_gazetteer(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  Gazetteer g;
  try {
    g.label = doc.at("label").get<std::string>();
    g.case_sensitive = doc.value("case_sensitive", false);
    g.accent_sensitive = doc.value("accent_sensitive", true);
    for (const auto& p : doc.at("phrases")) g.phrases.push_back(normalize_whitespace(p.get<std::string>()));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    g.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return g;
}

std::vector<Gazetteer> load_gazetteer_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("gazetteer directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<Gazetteer> out;
  for (const auto& f : files) out.push_back(load_gazetteer(f));
  return out;
}

GazetteerFunction::GazetteerFunction(Gazetteer gazetteer) : gazetteer_(std::move(gazetteer)) {
  for (auto& p : gazetteer_.phrases) p = normalize_whitespace(p);
  gazetteer_.validate();
  nodes_.emplace_back();
  for (const auto& phrase : gazetteer_.phrases) {
    std::size_t node = 0;
    for (const auto& token : corpus::tokenize(phrase)) {
      const auto [b, e] = text::core_range(token.surface);
      const std::string k = key(e > b ? std::string_view(token.surface).substr(b, e - b)
                                      : std::string_view(token.surface));
      const auto it = nodes_[node].children.find(k);
      if (it != nodes_[node].children.end()) {
        node = it->second;
      } else {
        nodes_.emplace_back();
        nodes_[node].children.emplace(k, nodes_.size() - 1);
        node = nodes_.size() - 1;
      }
    }
    nodes_[node].terminal = true;
  }
}

std::string GazetteerFunction::key(std::string_view core) const {
  std::string out;
  out.reserve(core.size());
  for (std::size_t pos = 0; pos < core.size();) {
    char32_t cp = text::next_code_point(core, pos);
    if (!gazetteer_.case_sensitive) cp = text::to_lower(cp);
    if (!gazetteer_.accent_sensitive) cp = text::strip_accent(cp);
    text::append_utf8(out, cp);
  }
  return out;
}

std::vector<SpanAnnotation> GazetteerFunction::apply(const corpus::Sentence& sentence) const {
  std::vector<SpanAnnotation> out;
  const auto& tokens = sentence.tokens;
  std::vector<std::pair<std::size_t, std::size_t>> cores;
  std::vector<std::string> keys;
  cores.reserve(tokens.size());
  keys.reserve(tokens.size());
  for (const auto& token : tokens) {
    const auto range = text::core_range(token.surface);
    cores.push_back(range);
    keys.push_back(range.second > range.first
                       ? key(std::string_view(token.surface).substr(range.first, range.second - range.first))
                       : std::string());
  }

  std::size_t t = 0;
  while (t < tokens.size()) {
    std::size_t node = 0;
    std::optional<std::size_t> last_match;
    for (std::size_t u = t; u < tokens.size() && !keys[u].empty(); ++u) {
      const auto it = nodes_[node].children.find(keys[u]);
      if (it == nodes_[node].children.end()) break;
      node = it->second;
      if (nodes_[node].terminal) last_match = u;
    }
    if (!last_match) {
      ++t;
      continue;
    }
    const std::size_t start = tokens[t].start + cores[t].first;
    const std::size_t end = tokens[*last_match].start + cores[*last_match].second;
    out.push_back(make_span(sentence, start, end, gazetteer_.label, name()));
    t = *last_match + 1;
  }
  return out;
}

// -- function sets ---------------------------------------------------------

std::string function_name(const LabelingFunction& fn) {
  return std::visit([](const auto& f) { return std::string(f.name()); }, fn);
}

std::string function_label(const LabelingFunction& fn) {
  return std::visit([](const auto& f) { return std::string(f.label()); }, fn);
}

void FunctionSet::add(LabelingFunction fn) {
  const auto name = function_name(fn);
  for (const auto& existing : functions_)
    if (function_name(existing) == name) throw ConfigError("duplicate labeling function name '" + name + "'");
  functions_.push_back(std::move(fn));
}

std::vector<std::string> FunctionSet::names() const {
  std::vector<std::string> out;
  for (const auto& fn : functions_) out.push_back(function_name(fn));
  return out;
}

namespace {

json describe(const LabelingFunction& fn) {
  struct Visitor {
    json operator()(const RegexFunction& f) const {
      return {{"name", f.name()}, {"kind", "regex"}, {"label", f.label()},
              {"pattern", f.pattern()}, {"case_insensitive", f.case_insensitive()}};
    }
    json operator()(const HeuristicFunction& f) const {
      return {{"name", f.name()}, {"kind", "heuristic"}, {"label", f.label()}, {"rule", to_string(f.rule())}};
    }
    json operator()(const GazetteerFunction& f) const {
      const auto& g = f.gazetteer();
      return {{"name", f.name()},
              {"kind", "gazetteer"},
              {"label", g.label},
              {"case_sensitive", g.case_sensitive},
              {"accent_sensitive", g.accent_sensitive},
              {"phrases", g.phrases}};
    }
  };
  return std::visit(Visitor{}, fn);
}

}  // namespace

std::string FunctionSet::fingerprint() const {
  json all = json::array();
  for (const auto& fn : functions_) all.push_back(describe(fn));
  return io::sha256_hex(all.dump());
}

std::vector<LabelingFunction> parse_rules(const json& doc) {
  const json& list = doc.is_object() && doc.contains("rules") ? doc["rules"] : doc;
  if (!list.is_array()) throw ConfigError("rule file must be a JSON list");
  std::vector<LabelingFunction> out;
  std::set<std::string> names;
  for (const auto& rule : list) {
    try {
      const auto name = rule.at("name").get<std::string>();
      const auto kind = rule.at("kind").get<std::string>();
      const auto label = rule.at("label").get<std::string>();
      if (!names.insert(name).second) throw ConfigError("duplicate rule name '" + name + "'");
      if (kind == "regex") {
        out.emplace_back(RegexFunction(name, label, rule.at("pattern").get<std::string>(),
                                       rule.value("case_insensitive", false)));
      } else if (kind == "heuristic") {
        const auto id = rule.value("rule", rule.value("pattern", name));
        out.emplace_back(HeuristicFunction(name, label, parse_heuristic(id)));
      } else if (kind == "gazetteer") {
        Gazetteer g{label, rule.at("phrases").get<std::vector<std::string>>(), rule.value("case_sensitive", false),
                    rule.value("accent_sensitive", true)};
        out.emplace_back(GazetteerFunction(std::move(g)));
      } else {
        throw ConfigError("rule '" + name + "': unknown kind '" + kind + "'");
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed rule: ") + e.what());
    }
  }
  return out;
}

std::vector<LabelingFunction> load_rules(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_rules(doc);
}

// -- corpus runners ----------------------------------------------------------

namespace {

template <typename Fn>
std::vector<SpanAnnotation> run_each(const corpus::Corpus& corpus, const std::vector<Fn>& functions) {
  std::vector<SpanAnnotation> out;
  for (const auto& sentence : corpus.sentences)
    for (const auto& fn : functions) {
      auto spans = fn.apply(sentence);
      out.insert(out.end(), std::make_move_iterator(spans.begin()), std::make_move_iterator(spans.end()));
    }
  return out;
}

std::vector<SpanAnnotation> annotate_sentence(const corpus::Sentence& sentence, const FunctionSet& functions) {
  std::vector<SpanAnnotation> out;
  for (const auto& fn : functions.functions()) {
    auto spans = std::visit([&](const auto& f) { return f.apply(sentence); }, fn);
    out.insert(out.end(), std::make_move_iterator(spans.begin()), std::make_move_iterator(spans.end()));
  }
  return out;
}

}  // namespace

std::vector<SpanAnnotation> run_regex_annotators(const corpus::Corpus& corpus,
                                                 const std::vector<RegexFunction>& patterns) {
  return run_each(corpus, patterns);
}

std::vector<SpanAnnotation> run_heuristic_annotators(const corpus::Corpus& corpus,
                                                     const std::vector<HeuristicFunction>& rules) {
  return run_each(corpus, rules);
}

std::vector<SpanAnnotation> run_gazetteer(const corpus::Corpus& corpus, const std::vector<Gazetteer>& gazetteers) {
  std::vector<GazetteerFunction> functions;
  std::set<std::string> labels;
  for (const auto& g : gazetteers) {
    if (!labels.insert(g.label).second) throw ConfigError("two gazetteers share the label '" + g.label + "'");
    functions.emplace_back(g);
  }
  return run_each(corpus, functions);
}

std::vector<SpanAnnotation> annotate_serial(const corpus::Corpus& corpus, const FunctionSet& functions) {
  std::vector<SpanAnnotation> out;
  for (const auto& sentence : corpus.sentences) {
    auto spans = annotate_sentence(sentence, functions);
    out.insert(out.end(), std::make_move_iterator(spans.begin()), std::make_move_iterator(spans.end()));
  }
  return out;
}

std::vector<SpanAnnotation> annotate(const corpus::Corpus& corpus, const FunctionSet& functions) {
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
  std::vector<std::vector<SpanAnnotation>> per_sentence(corpus.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    per_sentence[static_cast<std::size_t>(i)] = annotate_sentence(corpus.sentences[static_cast<std::size_t>(i)], functions);
  std::vector<SpanAnnotation> out;
  for (auto& spans : per_sentence)
    out.insert(out.end(), std::make_move_iterator(spans.begin()), std::make_move_iterator(spans.end()));
  return out;
}

}  // namespace finespan::weaklabel

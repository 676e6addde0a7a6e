#include "finespan/tagcodec.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "finespan/error.hpp"
#include "finespan/io.hpp"
#include "finespan/text.hpp"

namespace finespan::tagcodec {

using nlohmann::json;

const std::vector<std::string>& default_labels() {
  static const std::vector<std::string> labels = {
      "BALANCO_PATRIMONIAL",     "CARTEIRA",
      "CLIENTE",                 "COMPANY",
      "CONDICOES_MACROECONOMICAS", "DESPESA",
      "INDICADOR_EFICIENCIA",    "INDICADOR_LIQUIDEZ",
      "INDICADOR_RENTABILIDADE", "INDICADOR_VALUATION",
      "LUCRO",                   "MONEY",
      "ORG",                     "PERCENTUAL",
      "PRODUTO",                 "PROVENTO",
      "PROVISAO",                "QUARTER",
      "RECEITA",                 "RESULTADO",
      "RISCO",                   "SEMESTER",
      "YEAR"};
  return labels;
}

TagScheme TagScheme::build(std::vector<std::string> labels) {
  if (labels.empty()) throw ConfigError("tag scheme needs at least one label");
  std::sort(labels.begin(), labels.end());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) throw ConfigError("empty label in tag scheme");
    if (std::any_of(labels[i].begin(), labels[i].end(), text::is_space))
      throw ConfigError("label '" + labels[i] + "' contains whitespace");
    if (i > 0 && labels[i] == labels[i - 1]) throw ConfigError("duplicate label '" + labels[i] + "'");
  }
  TagScheme scheme;
  scheme.labels_ = std::move(labels);
  scheme.tags_.push_back("O");
  for (const auto& label : scheme.labels_) {
    scheme.tags_.push_back("B-" + label);
    scheme.tags_.push_back("I-" + label);
  }
  for (std::size_t i = 0; i < scheme.tags_.size(); ++i)
    scheme.tag_to_id_.emplace(scheme.tags_[i], static_cast<int>(i));
  return scheme;
}

TagScheme TagScheme::from_json(const json& doc) {
  if (!doc.contains("labels") || !doc["labels"].is_array())
    throw ConfigError("scheme JSON needs a 'labels' array");
  auto scheme = build(doc["labels"].get<std::vector<std::string>>());
  if (doc.contains("tags") && doc["tags"].get<std::vector<std::string>>() != scheme.tags_)
    throw ConfigError("scheme JSON 'tags' disagree with its labels");
  if (doc.contains("tag_to_id"))
    for (const auto& [tag, id] : doc["tag_to_id"].items())
      if (!scheme.has_tag(tag) || scheme.id(tag) != id.get<int>())
        throw ConfigError("scheme JSON maps '" + tag + "' to a conflicting id");
  return scheme;
}

bool TagScheme::has_label(std::string_view label) const {
  return std::binary_search(labels_.begin(), labels_.end(), label);
}

bool TagScheme::has_tag(std::string_view tag) const {
  return tag_to_id_.find(std::string(tag)) != tag_to_id_.end();
}

int TagScheme::id(std::string_view tag) const {
  const auto it = tag_to_id_.find(std::string(tag));
  if (it == tag_to_id_.end()) throw DataError("tag '" + std::string(tag) + "' is not in the scheme");
  return it->second;
}

std::string_view TagScheme::label_of(int id) const {
  if (id <= 0) return {};
  return labels_.at(static_cast<std::size_t>(id - 1) / 2);
}

json TagScheme::to_json() const {
  json map = json::object();
  for (std::size_t i = 0; i < tags_.size(); ++i) map[tags_[i]] = i;
  return {{"labels", labels_}, {"tags", tags_}, {"tag_to_id", std::move(map)}};
}

std::string TagScheme::fingerprint() const { return io::sha256_hex(to_json().dump()); }

std::string_view label_of_tag(std::string_view tag) {
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') return tag.substr(2);
  return {};
}

bool is_valid_bio(const std::vector<std::string>& tags) {
  std::string_view previous_label;
  for (const auto& tag : tags) {
    const auto label = label_of_tag(tag);
    if (tag.starts_with("I-") && label != previous_label) return false;
    previous_label = label;
  }
  return true;
}

std::vector<std::string> repair_bio(std::vector<std::string> tags) {
  std::string previous_label;
  for (auto& tag : tags) {
    const std::string label(label_of_tag(tag));
    if (tag.starts_with("I-") && label != previous_label) tag = "B-" + label;
    previous_label = label;
  }
  return tags;
}

void validate(const TaggedSentence& tagged, const TagScheme& scheme) {
  if (tagged.tokens.size() != tagged.tags.size())
    throw DataError("sentence '" + tagged.id + "': " + std::to_string(tagged.tokens.size()) +
                    " tokens but " + std::to_string(tagged.tags.size()) + " tags");
  for (const auto& tag : tagged.tags)
    if (!scheme.has_tag(tag)) throw DataError("sentence '" + tagged.id + "': unknown tag '" + tag + "'");
  if (!is_valid_bio(tagged.tags)) throw DataError("sentence '" + tagged.id + "': invalid BIO sequence");
}

json to_json(const TaggedSentence& tagged) {
  return {{"id", tagged.id}, {"tokens", tagged.tokens}, {"tags", tagged.tags}};
}

TaggedSentence tagged_from_json(const json& record) {
  TaggedSentence out;
  if (record.contains("id")) out.id = record["id"].is_string() ? record["id"].get<std::string>() : record["id"].dump();
  if (!record.contains("tokens") || !record.contains("tags"))
    throw DataError("tagged record needs 'tokens' and 'tags'");
  out.tokens = record["tokens"].get<std::vector<std::string>>();
  out.tags = record["tags"].get<std::vector<std::string>>();
  return out;
}

json to_token_classification(const TaggedSentence& tagged, const TagScheme& scheme) {
  std::vector<int> ids;
  ids.reserve(tagged.tags.size());
  for (const auto& tag : tagged.tags) ids.push_back(scheme.id(tag));
  return {{"id", tagged.id}, {"tokens", tagged.tokens}, {"ner_tags", std::move(ids)}};
}

// -- BIO projection --------------------------------------------------------

BioResult spans_to_bio(const corpus::Sentence& sentence, const std::vector<EntitySpan>& entities,
                       const TagScheme& scheme) {
  BioResult result;
  auto& tagged = result.tagged;
  tagged.id = sentence.id;
  for (const auto& token : sentence.tokens) tagged.tokens.push_back(token.surface);
  tagged.tags.assign(sentence.tokens.size(), "O");

  struct Placed {
    std::size_t first_token;
    std::size_t last_token;  // inclusive
    const EntitySpan* span;
  };
  std::vector<Placed> placed;
  for (const auto& entity : entities) {
    if (!scheme.has_label(entity.label))
      throw DataError("sentence '" + sentence.id + "': label '" + entity.label + "' is not in the scheme");
    if (entity.start >= entity.end || entity.end > sentence.text.size())
      throw DataError("sentence '" + sentence.id + "': span [" + std::to_string(entity.start) + "," +
                      std::to_string(entity.end) + ") out of range");
    std::optional<std::size_t> first;
    std::size_t last = 0;
    for (std::size_t t = 0; t < sentence.tokens.size(); ++t) {
      const auto& token = sentence.tokens[t];
      if (token.start < entity.end && token.end > entity.start) {
        if (!first) first = t;
        last = t;
      }
    }
    if (!first) {
      result.diagnostics.push_back("span [" + std::to_string(entity.start) + "," +
                                   std::to_string(entity.end) + ") covers no token; dropped");
      continue;
    }
    const auto& head = sentence.tokens[*first];
    const auto& tail = sentence.tokens[last];
    const auto head_core = text::core_range(head.surface);
    const auto tail_core = text::core_range(tail.surface);
    const bool start_ok = entity.start <= head.start || entity.start == head.start + head_core.first;
    const bool end_ok = entity.end >= tail.end || entity.end == tail.start + tail_core.second;
    if (!start_ok || !end_ok)
      result.diagnostics.push_back("span [" + std::to_string(entity.start) + "," +
                                   std::to_string(entity.end) + ") snapped to token boundaries");
    placed.push_back({*first, last, &entity});
  }

  // Outermost first; ties go to the earlier span.
  std::stable_sort(placed.begin(), placed.end(), [](const Placed& a, const Placed& b) {
    const auto wa = a.last_token - a.first_token;
    const auto wb = b.last_token - b.first_token;
    if (wa != wb) return wa > wb;
    return a.first_token < b.first_token;
  });
  std::vector<bool> taken(sentence.tokens.size(), false);
  for (const auto& p : placed) {
    bool clash = false;
    for (std::size_t t = p.first_token; t <= p.last_token; ++t) clash = clash || taken[t];
    if (clash) {
      result.diagnostics.push_back("span [" + std::to_string(p.span->start) + "," +
                                   std::to_string(p.span->end) + ") " + p.span->label +
                                   " overlaps a wider entity; dropped");
      continue;
    }
    for (std::size_t t = p.first_token; t <= p.last_token; ++t) {
      taken[t] = true;
      tagged.tags[t] = (t == p.first_token ? "B-" : "I-") + p.span->label;
    }
  }
  return result;
}

// -- subword alignment ----------------------------------------------------

SubwordAlignment align_subwords(const TaggedSentence& tagged,
                                const std::vector<std::vector<std::string>>& segmentation,
                                const SpecialTokens& specials, const TagScheme& scheme) {
  if (segmentation.size() != tagged.tokens.size())
    throw DataError("sentence '" + tagged.id + "': segmentation covers " +
                    std::to_string(segmentation.size()) + " tokens, expected " +
                    std::to_string(tagged.tokens.size()));
  SubwordAlignment out;
  for (std::size_t i = 0; i < specials.prefix; ++i) {
    out.subwords.push_back(specials.prefix_surface);
    out.token_index.push_back(std::nullopt);
    out.label_ids.push_back(kIgnoreIndex);
  }
  for (std::size_t t = 0; t < segmentation.size(); ++t) {
    if (segmentation[t].empty())
      throw DataError("sentence '" + tagged.id + "': token " + std::to_string(t) + " ('" +
                      tagged.tokens[t] + "') has no subwords");
    const int tag_id = scheme.id(tagged.tags.at(t));
    for (const auto& piece : segmentation[t]) {
      out.subwords.push_back(piece);
      out.token_index.push_back(t);
      out.label_ids.push_back(tag_id);
    }
  }
  for (std::size_t i = 0; i < specials.suffix; ++i) {
    out.subwords.push_back(specials.suffix_surface);
    out.token_index.push_back(std::nullopt);
    out.label_ids.push_back(kIgnoreIndex);
  }
  return out;
}

double subword_ratio(std::size_t subwords, std::size_t tokens) {
  if (tokens == 0) throw DataError("subword ratio over zero tokens");
  return static_cast<double>(subwords) / static_cast<double>(tokens);
}

double subword_ratio(const std::vector<std::vector<std::vector<std::string>>>& segmentations) {
  std::size_t tokens = 0;
  std::size_t subwords = 0;
  for (const auto& sentence : segmentations) {
    tokens += sentence.size();
    for (const auto& token : sentence) subwords += token.size();
  }
  return subword_ratio(subwords, tokens);
}

// -- seq2seq template -----------------------------------------------------

namespace {

bool looks_like_entity(std::string_view token) {
  return token.starts_with('[') && token.find('|') != std::string_view::npos;
}

void escape_into(std::string& out, std::string_view word) {
  for (char c : word) {
    if (c == '\\' || c == '_') out.push_back('\\');
    out.push_back(c);
  }
}

/// Splits entity content on unescaped underscores and removes escapes.
std::vector<std::string> split_entity_words(std::string_view content) {
  std::vector<std::string> words(1);
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (c == '\\' && i + 1 < content.size() && (content[i + 1] == '\\' || content[i + 1] == '_')) {
      words.back().push_back(content[++i]);
    } else if (c == '_') {
      words.emplace_back();
    } else {
      words.back().push_back(c);
    }
  }
  return words;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && text::is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !text::is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

}  // namespace

SeqTarget encode_seq(const TaggedSentence& tagged) {
  if (tagged.tokens.size() != tagged.tags.size())
    throw DataError("sentence '" + tagged.id + "': tokens and tags differ in length");
  if (!is_valid_bio(tagged.tags)) throw DataError("sentence '" + tagged.id + "': invalid BIO sequence");
  std::string out;
  std::size_t t = 0;
  const std::size_t n = tagged.tokens.size();
  while (t < n) {
    if (!out.empty()) out.push_back(' ');
    const auto& token = tagged.tokens[t];
    const auto label = label_of_tag(tagged.tags[t]);
    if (label.empty()) {
      if (looks_like_entity(token))
        throw DataError("sentence '" + tagged.id + "': token '" + token + "' would decode as an entity");
      out += token;
      ++t;
      continue;
    }
    out.push_back('[');
    std::size_t u = t;
    do {
      const auto& word = tagged.tokens[u];
      if (word.find_first_of("[]|") != std::string::npos)
        throw DataError("sentence '" + tagged.id + "': entity token '" + word +
                        "' contains a reserved character ([, ] or |)");
      if (u > t) out.push_back('_');
      escape_into(out, word);
      ++u;
    } while (u < n && tagged.tags[u].starts_with("I-") && label_of_tag(tagged.tags[u]) == label);
    out.push_back('|');
    out += label;
    out.push_back(']');
    t = u;
  }
  return {tagged.id, std::move(out)};
}

std::string_view to_string(DiagnosticKind kind) {
  switch (kind) {
    case DiagnosticKind::unknown_label:
      return "unknown-label";
    case DiagnosticKind::malformed_pattern:
      return "malformed-pattern";
    case DiagnosticKind::empty_entity:
      return "empty-entity";
  }
  return "?";
}

DecodeResult decode_seq(std::string_view generated, const TagScheme& scheme, bool strict, std::string id) {
  DecodeResult result;
  auto& tagged = result.tagged;
  tagged.id = std::move(id);

  const auto pieces = split_whitespace(generated);
  for (std::size_t index = 0; index < pieces.size(); ++index) {
    const auto piece = pieces[index];
    const auto flag = [&](DiagnosticKind kind) {
      result.diagnostics.push_back({kind, index, std::string(piece)});
    };
    const auto emit_outside = [&](std::string_view word) {
      tagged.tokens.emplace_back(word);
      tagged.tags.emplace_back("O");
    };

    if (!looks_like_entity(piece)) {
      emit_outside(piece);
      continue;
    }
    const auto bar = piece.rfind('|');
    if (!piece.ends_with(']') || bar + 1 >= piece.size() - 1) {
      flag(DiagnosticKind::malformed_pattern);
      emit_outside(piece);
      continue;
    }
    const auto content = piece.substr(1, bar - 1);
    const auto label = piece.substr(bar + 1, piece.size() - bar - 2);
    auto words = split_entity_words(content);
    const auto empties = std::count_if(words.begin(), words.end(), [](const auto& w) { return w.empty(); });
    if (empties == static_cast<std::ptrdiff_t>(words.size())) {
      flag(DiagnosticKind::empty_entity);
      emit_outside(piece);
      continue;
    }
    if (empties > 0) {
      flag(DiagnosticKind::malformed_pattern);
      std::erase_if(words, [](const auto& w) { return w.empty(); });
    }
    const bool known = scheme.has_label(label);
    if (!known) flag(DiagnosticKind::unknown_label);
    for (std::size_t w = 0; w < words.size(); ++w) {
      tagged.tokens.push_back(std::move(words[w]));
      tagged.tags.push_back(known ? (w == 0 ? "B-" : "I-") + std::string(label) : "O");
    }
  }

  if (strict && !result.diagnostics.empty()) {
    const auto& d = result.diagnostics.front();
    throw DataError("decode: " + std::string(to_string(d.kind)) + " at token " +
                    std::to_string(d.token_index) + " ('" + d.token + "')");
  }
  return result;
}

}  // namespace finespan::tagcodec

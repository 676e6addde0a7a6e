#include "finespan/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <unordered_set>

#include "finespan/error.hpp"
#include "finespan/io.hpp"
#include "finespan/text.hpp"

namespace finespan::corpus {

using nlohmann::json;

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text::is_space(text[i])) ++i;
    if (i == text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !text::is_space(text[i])) ++i;
    tokens.push_back(Token{std::string(text.substr(start, i - start)), start, i});
  }
  return tokens;
}

std::size_t Sentence::word_count() const {
  return static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(), [](const Token& t) {
    return !text::is_all_punct(t.surface);
  }));
}

Sentence make_sentence(std::string id, std::string text, std::map<std::string, std::string> meta) {
  Sentence s{std::move(id), std::move(text), std::move(meta), {}};
  s.tokens = tokenize(s.text);
  return s;
}

Format parse_format(std::string_view name) {
  if (name == "csv") return Format::csv;
  if (name == "jsonl") return Format::jsonl;
  throw ConfigError("unknown corpus format '" + std::string(name) + "' (expected csv or jsonl)");
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string scalar_to_string(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

Corpus ingest_csv(const std::filesystem::path& path) {
  const auto rows = io::parse_csv(io::read_file(path));
  if (rows.empty()) throw DataError(path.string() + ": empty CSV, expected a header row");
  const auto& header = rows.front().fields;
  const auto text_col = std::find(header.begin(), header.end(), "text");
  if (text_col == header.end())
    throw DataError(path.string() + ": CSV header has no 'text' column", rows.front().line);
  const auto text_index = static_cast<std::size_t>(text_col - header.begin());
  const auto id_col = std::find(header.begin(), header.end(), "id");
  const std::string stem = path.stem().string();

  Corpus corpus;
  corpus.sentences.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& fields = rows[r].fields;
    if (fields.size() <= text_index)
      throw DataError(path.string() + ": record missing 'text'", rows[r].line);
    std::map<std::string, std::string> meta;
    std::string id = stem + ":" + std::to_string(r - 1);
    for (std::size_t c = 0; c < header.size() && c < fields.size(); ++c) {
      if (c == text_index) continue;
      if (id_col != header.end() && header[c] == "id") {
        if (!fields[c].empty()) id = fields[c];
        continue;
      }
      meta[header[c]] = fields[c];
    }
    corpus.sentences.push_back(make_sentence(std::move(id), fields[text_index], std::move(meta)));
  }
  return corpus;
}

Corpus ingest_jsonl(const std::filesystem::path& path) {
  Corpus corpus;
  const std::string stem = path.stem().string();
  std::size_t index = 0;
  io::for_each_jsonl(path, [&](const json& record, std::size_t line) {
    if (!record.is_object() || !record.contains("text") || !record["text"].is_string())
      throw DataError(path.string() + ": record missing 'text'", line);
    corpus.sentences.push_back(sentence_from_json(record, stem + ":" + std::to_string(index)));
    ++index;
  });
  return corpus;
}

}  // namespace

Sentence sentence_from_json(const json& record, std::string fallback_id) {
  std::map<std::string, std::string> meta;
  std::string id = std::move(fallback_id);
  for (const auto& [key, value] : record.items()) {
    if (key == "text") continue;
    if (key == "id") {
      if (!value.is_null()) id = scalar_to_string(value);
      continue;
    }
    if (key == "entities" || key == "tokens" || key == "tags") continue;
    meta[key] = scalar_to_string(value);
  }
  return make_sentence(std::move(id), record.at("text").get<std::string>(), std::move(meta));
}

Corpus ingest(const std::filesystem::path& path, Format format) {
  if (!std::filesystem::exists(path)) throw IoError("cannot open " + path.string());
  Corpus corpus = format == Format::csv ? ingest_csv(path) : ingest_jsonl(path);
  corpus.provenance.sources.push_back(path.string());
  corpus.provenance.ingested_at = utc_now();
  check_unique_ids(corpus);
  return corpus;
}

void check_unique_ids(const Corpus& corpus) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i)
    if (!seen.insert(corpus.sentences[i].id).second)
      throw DataError("duplicate sentence id '" + corpus.sentences[i].id + "'", i + 1);
}

json sentence_to_json(const Sentence& sentence) {
  json record = json::object();
  for (const auto& [key, value] : sentence.meta) record[key] = value;
  record["id"] = sentence.id;
  record["text"] = sentence.text;
  return record;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::vector<json> records;
  records.reserve(corpus.size());
  for (const auto& s : corpus.sentences) records.push_back(sentence_to_json(s));
  io::write_jsonl(path, records);
}

// -- filtering -------------------------------------------------------------

std::string_view to_string(DropReason reason) {
  return reason == DropReason::too_short ? "too-short" : "duplicate";
}

FilterResult filter(const Corpus& corpus, std::size_t min_words, bool dedupe) {
  FilterResult out;
  out.kept.provenance = corpus.provenance;
  out.dropped.provenance = corpus.provenance;
  std::unordered_set<std::string> seen;
  for (const auto& sentence : corpus.sentences) {
    if (sentence.word_count() <= min_words) {
      out.dropped.sentences.push_back(sentence);
      out.reasons.push_back(DropReason::too_short);
      continue;
    }
    if (dedupe && !seen.insert(std::string(text::trim(sentence.text))).second) {
      out.dropped.sentences.push_back(sentence);
      out.reasons.push_back(DropReason::duplicate);
      continue;
    }
    out.kept.sentences.push_back(sentence);
  }
  return out;
}

// -- descriptive statistics ------------------------------------------------

namespace {

double quantile(const std::vector<std::size_t>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return static_cast<double>(sorted[lo]) +
         frac * (static_cast<double>(sorted[hi]) - static_cast<double>(sorted[lo]));
}

}  // namespace

LengthSummary summarize_lengths(const std::vector<std::size_t>& word_counts, std::size_t bin_width) {
  if (bin_width == 0) throw ConfigError("histogram bin width must be positive");
  LengthSummary s;
  s.bin_width = bin_width;
  s.count = word_counts.size();
  if (word_counts.empty()) return s;

  // Welford's update; the tests hold it against a two-pass computation.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (std::size_t x : word_counts) {
    ++n;
    const double delta = static_cast<double>(x) - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (static_cast<double>(x) - mean);
  }
  s.mean = mean;
  s.stddev = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;

  auto sorted = word_counts;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile(sorted, 0.25);
  s.median = quantile(sorted, 0.5);
  s.q3 = quantile(sorted, 0.75);

  s.bin_start = (s.min / bin_width) * bin_width;
  s.histogram.assign((s.max - s.bin_start) / bin_width + 1, 0);
  for (std::size_t x : word_counts) ++s.histogram[(x - s.bin_start) / bin_width];
  return s;
}

StatsReport stats(const Corpus& corpus, const std::optional<std::string>& group_by,
                  std::size_t bin_width) {
  StatsReport report;
  report.group_by = group_by;
  std::vector<std::size_t> all;
  std::map<std::string, std::vector<std::size_t>> grouped;
  all.reserve(corpus.size());
  for (const auto& sentence : corpus.sentences) {
    const std::size_t wc = sentence.word_count();
    all.push_back(wc);
    if (group_by) {
      const auto it = sentence.meta.find(*group_by);
      if (it == sentence.meta.end())
        throw DataError("sentence '" + sentence.id + "' has no meta key '" + *group_by + "'");
      grouped[it->second].push_back(wc);
    }
  }
  report.overall = summarize_lengths(all, bin_width);
  for (const auto& [key, counts] : grouped) report.groups[key] = summarize_lengths(counts, bin_width);
  return report;
}

json to_json(const LengthSummary& s) {
  json histogram = json::array();
  for (std::size_t i = 0; i < s.histogram.size(); ++i)
    histogram.push_back({{"from", s.bin_start + i * s.bin_width}, {"count", s.histogram[i]}});
  return {{"count", s.count},   {"min", s.min},       {"max", s.max},
          {"mean", s.mean},     {"std", s.stddev},    {"q1", s.q1},
          {"median", s.median}, {"q3", s.q3},         {"bin_width", s.bin_width},
          {"histogram", std::move(histogram)}};
}

json to_json(const StatsReport& report) {
  json out = {{"overall", to_json(report.overall)}};
  out["group_by"] = report.group_by ? json(*report.group_by) : json(nullptr);
  json groups = json::object();
  for (const auto& [key, summary] : report.groups) groups[key] = to_json(summary);
  out["groups"] = std::move(groups);
  return out;
}

// -- splitting -------------------------------------------------------------

std::uint64_t SplitMix64::below(std::uint64_t bound) {
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t x = next();
  while (x >= limit) x = next();
  return x % bound;
}

void SplitSpec::validate() const {
  if (train < 0 || validation < 0 || test < 0)
    throw ConfigError("split fractions must be non-negative");
  if (std::abs(train + validation + test - 1.0) > 1e-9)
    throw ConfigError("split fractions must sum to 1");
}

SplitSpec parse_fractions(std::string_view csv, std::uint64_t seed) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto comma = csv.find(',', start);
    const auto piece = std::string(csv.substr(start, comma == std::string_view::npos ? csv.npos : comma - start));
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(piece, &used));
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::exception&) {
      throw ConfigError("bad split fraction '" + piece + "'");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (parts.size() != 3) throw ConfigError("expected three split fractions train,validation,test");
  SplitSpec spec{parts[0], parts[1], parts[2], seed};
  spec.validate();
  return spec;
}

std::array<std::size_t, 3> split_sizes(std::size_t n, const SplitSpec& spec) {
  spec.validate();
  const auto part = [n](double f) {
    // The epsilon keeps products like 10 * 0.1 from flooring to 0.
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * f + 1e-9));
  };
  const std::size_t validation = std::min(part(spec.validation), n);
  const std::size_t test = std::min(part(spec.test), n - validation);
  return {n - validation - test, validation, test};
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  SplitMix64 rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

SplitResult split(const Corpus& corpus, const SplitSpec& spec) {
  if (corpus.empty()) throw DataError("cannot split an empty corpus");
  const auto sizes = split_sizes(corpus.size(), spec);
  const auto order = shuffled_indices(corpus.size(), spec.seed);
  SplitResult out;
  for (auto* part : {&out.train, &out.validation, &out.test}) part->provenance = corpus.provenance;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < sizes[0]; ++i) out.train.sentences.push_back(corpus.sentences[order[cursor++]]);
  for (std::size_t i = 0; i < sizes[1]; ++i) out.validation.sentences.push_back(corpus.sentences[order[cursor++]]);
  for (std::size_t i = 0; i < sizes[2]; ++i) out.test.sentences.push_back(corpus.sentences[order[cursor++]]);
  return out;
}

std::vector<json> split_manifest(const SplitResult& result, const SplitSpec& spec) {
  std::vector<json> out;
  out.push_back({{"manifest", "split"},
                 {"algorithm", kSplitAlgorithm},
                 {"seed", spec.seed},
                 {"fractions", {spec.train, spec.validation, spec.test}},
                 {"sizes", {result.train.size(), result.validation.size(), result.test.size()}}});
  const auto emit = [&](const Corpus& part, const char* name) {
    for (const auto& s : part.sentences) out.push_back({{"id", s.id}, {"partition", name}});
  };
  emit(result.train, "train");
  emit(result.validation, "validation");
  emit(result.test, "test");
  return out;
}

}  // namespace finespan::corpus

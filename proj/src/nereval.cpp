#include "finespan/nereval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "finespan/error.hpp"
#include "finespan/io.hpp"
#include "finespan/text.hpp"

namespace finespan::nereval {

using nlohmann::json;
using tagcodec::TaggedSentence;
using tagcodec::TagScheme;

CompareMode parse_compare_mode(std::string_view name) {
  if (name == "label-only" || name == "label_only") return CompareMode::label_only;
  if (name == "strict-bio" || name == "strict_bio") return CompareMode::strict_bio;
  throw ConfigError("unknown comparison mode '" + std::string(name) + "' (expected label-only or strict-bio)");
}

std::string_view to_string(CompareMode mode) { return mode == CompareMode::label_only ? "label-only" : "strict-bio"; }

namespace {

bool same(std::string_view gold, std::string_view pred, CompareMode mode) {
  if (mode == CompareMode::strict_bio) return gold == pred;
  return tagcodec::label_of_tag(gold) == tagcodec::label_of_tag(pred);
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::optional<double> harmonic(const std::optional<double>& p, const std::optional<double>& r) {
  if (!p || !r) return std::nullopt;
  if (*p + *r == 0.0) return 0.0;
  return 2.0 * *p * *r / (*p + *r);
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json score_json(const ClassScore& s) {
  return {{"precision", opt(s.precision)}, {"recall", opt(s.recall)}, {"f1", opt(s.f1)},
          {"support", s.support},          {"predicted", s.predicted}, {"true_positive", s.true_positive}};
}

std::string cell(const std::optional<double>& v) {
  if (!v) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

void check_tags(const TaggedSentence& s, const TagScheme& scheme) {
  for (const auto& tag : s.tags)
    if (!scheme.has_tag(tag)) throw DataError("sentence '" + s.id + "': tag '" + tag + "' is not in the scheme");
}

/// Pairs each gold sentence with the prediction of the same id.
std::vector<std::pair<const TaggedSentence*, const TaggedSentence*>> match_ids(
    std::span<const TaggedSentence> gold, std::span<const TaggedSentence> pred) {
  std::unordered_map<std::string_view, const TaggedSentence*> by_id;
  for (const auto& p : pred)
    if (!by_id.emplace(p.id, &p).second) throw DataError("duplicate prediction for sentence '" + p.id + "'");
  std::vector<std::pair<const TaggedSentence*, const TaggedSentence*>> pairs;
  std::vector<std::string> missing;
  for (const auto& g : gold) {
    const auto it = by_id.find(g.id);
    if (it == by_id.end()) {
      missing.push_back(g.id);
      continue;
    }
    pairs.emplace_back(&g, it->second);
    by_id.erase(it);
  }
  if (!missing.empty() || !by_id.empty()) {
    std::string msg = "gold and predictions do not cover the same sentences;";
    for (std::size_t i = 0; i < missing.size() && i < 5; ++i) msg += " no prediction for '" + missing[i] + "';";
    std::vector<std::string_view> extra;
    for (const auto& [id, _] : by_id) extra.push_back(id);
    std::sort(extra.begin(), extra.end());
    for (std::size_t i = 0; i < extra.size() && i < 5; ++i) msg += " no gold for '" + std::string(extra[i]) + "';";
    throw DataError(msg);
  }
  return pairs;
}

}  // namespace

// -- precision / recall / F1 -------------------------------------------------

PrfReport prf_report(std::span<const TaggedSentence> gold, std::span<const TaggedSentence> pred,
                     const TagScheme& scheme, CompareMode mode) {
  std::map<std::string, ClassScore> classes;
  ClassScore micro;
  micro.label = "micro avg";
  for (const auto& [g, p] : match_ids(gold, pred)) {
    check_tags(*g, scheme);
    check_tags(*p, scheme);
    if (g->tags.size() != p->tags.size())
      throw DataError("sentence '" + g->id + "': gold has " + std::to_string(g->tags.size()) +
                      " tokens, prediction has " + std::to_string(p->tags.size()));
    for (std::size_t t = 0; t < g->tags.size(); ++t) {
      const auto gl = tagcodec::label_of_tag(g->tags[t]);
      const auto pl = tagcodec::label_of_tag(p->tags[t]);
      if (!gl.empty()) {
        auto& c = classes[std::string(gl)];
        ++c.support;
        ++micro.support;
        if (same(g->tags[t], p->tags[t], mode)) {
          ++c.true_positive;
          ++micro.true_positive;
        }
      }
      if (!pl.empty()) {
        ++classes[std::string(pl)].predicted;
        ++micro.predicted;
      }
    }
  }

  PrfReport report;
  report.mode = mode;
  for (auto& [label, c] : classes) {
    c.label = label;
    c.precision = ratio(c.true_positive, c.predicted);
    c.recall = ratio(c.true_positive, c.support);
    c.f1 = harmonic(c.precision, c.recall);
    report.classes.push_back(c);
  }
  micro.precision = ratio(micro.true_positive, micro.predicted);
  micro.recall = ratio(micro.true_positive, micro.support);
  micro.f1 = harmonic(micro.precision, micro.recall);

  const auto average = [&](std::optional<double> ClassScore::*field, bool weighted) -> std::optional<double> {
    double sum = 0.0;
    double weight = 0.0;
    for (const auto& c : report.classes) {
      const auto& v = c.*field;
      if (!v) continue;
      const double w = weighted ? static_cast<double>(c.support) : 1.0;
      sum += w * *v;
      weight += w;
    }
    if (weight == 0.0) return std::nullopt;
    return sum / weight;
  };
  report.macro.label = "macro avg";
  report.weighted.label = "weighted avg";
  for (auto* agg : {&report.macro, &report.weighted}) {
    const bool weighted = agg == &report.weighted;
    agg->precision = average(&ClassScore::precision, weighted);
    agg->recall = average(&ClassScore::recall, weighted);
    agg->f1 = average(&ClassScore::f1, weighted);
    agg->support = micro.support;
    agg->predicted = micro.predicted;
    agg->true_positive = micro.true_positive;
  }
  report.micro = micro;
  return report;
}

json PrfReport::to_json() const {
  json per_class = json::object();
  for (const auto& c : classes) per_class[c.label] = score_json(c);
  return {{"mode", to_string(mode)},
          {"classes", std::move(per_class)},
          {"macro avg", score_json(macro)},
          {"micro avg", score_json(micro)},
          {"weighted avg", score_json(weighted)}};
}

std::string PrfReport::to_markdown(std::string_view title) const {
  std::ostringstream out;
  if (!title.empty()) out << "### " << title << "\n\n";
  out << "| Class | Precision | Recall | F1-score | Support |\n";
  out << "|:--|--:|--:|--:|--:|\n";
  for (const auto& c : classes)
    out << "| " << c.label << " | " << cell(c.precision) << " | " << cell(c.recall) << " | " << cell(c.f1) << " | "
        << c.support << " |\n";
  for (const auto* c : {&macro, &micro, &weighted})
    out << "| " << c->label << " | " << cell(c->precision) << " | " << cell(c->recall) << " | " << cell(c->f1)
        << " | " << c->support << " |\n";
  return out.str();
}

// -- MUC-5 categories ---------------------------------------------------------

std::string_view to_string(Category category) {
  switch (category) {
    case Category::cor: return "COR";
    case Category::inc: return "INC";
    case Category::mis: return "MIS";
    case Category::spu: return "SPU";
  }
  return "?";
}

Category parse_category(std::string_view name) {
  const auto upper = text::trim(name);
  if (upper == "COR" || upper == "cor") return Category::cor;
  if (upper == "INC" || upper == "inc") return Category::inc;
  if (upper == "MIS" || upper == "mis") return Category::mis;
  if (upper == "SPU" || upper == "spu") return Category::spu;
  throw DataError("unknown MUC category '" + std::string(name) + "'");
}

std::size_t& MucCounts::at(Category c) {
  switch (c) {
    case Category::cor: return cor;
    case Category::inc: return inc;
    case Category::mis: return mis;
    case Category::spu: return spu;
  }
  return cor;
}

std::size_t MucCounts::at(Category c) const { return const_cast<MucCounts*>(this)->at(c); }

MucCounts& MucCounts::operator+=(const MucCounts& other) {
  cor += other.cor;
  inc += other.inc;
  mis += other.mis;
  spu += other.spu;
  return *this;
}

void MucTally::add(Category category, const std::string& label) {
  ++totals.at(category);
  ++per_class[label].at(category);
}

MucTally& MucTally::operator+=(const MucTally& other) {
  totals += other.totals;
  for (const auto& [label, counts] : other.per_class) per_class[label] += counts;
  return *this;
}

MucResult& MucResult::operator+=(const MucResult& other) {
  tally += other.tally;
  events.insert(events.end(), other.events.begin(), other.events.end());
  return *this;
}

Alignment identity_alignment(std::size_t length) {
  Alignment a;
  for (std::size_t i = 0; i < length; ++i) {
    a.gold.emplace_back(i);
    a.pred.emplace_back(i);
  }
  return a;
}

Alignment align_for_muc(std::span<const std::string> gold_tokens, std::span<const std::string> pred_tokens) {
  const std::size_t n = gold_tokens.size();
  const std::size_t m = pred_tokens.size();
  // lcs[i][j]: LCS length of the prefixes gold[0, i) and pred[0, j).
  std::vector<std::size_t> lcs((n + 1) * (m + 1), 0);
  const auto at = [m](std::size_t i, std::size_t j) { return i * (m + 1) + j; };
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      lcs[at(i, j)] = gold_tokens[i - 1] == pred_tokens[j - 1] ? lcs[at(i - 1, j - 1)] + 1
                                                             : std::max(lcs[at(i - 1, j)], lcs[at(i, j - 1)]);
  Alignment a;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && gold_tokens[i - 1] == pred_tokens[j - 1] && lcs[at(i, j)] == lcs[at(i - 1, j - 1)] + 1) {
      --i;
      --j;
      a.gold.emplace_back(i);
      a.pred.emplace_back(j);
    } else if (j > 0 && (i == 0 || lcs[at(i, j - 1)] >= lcs[at(i - 1, j)])) {
      --j;
      a.gold.emplace_back(std::nullopt);
      a.pred.emplace_back(j);
    } else {
      --i;
      a.gold.emplace_back(i);
      a.pred.emplace_back(std::nullopt);
    }
  }
  std::reverse(a.gold.begin(), a.gold.end());
  std::reverse(a.pred.begin(), a.pred.end());
  return a;
}

MucResult muc_categorize(const TaggedSentence& gold, const TaggedSentence& pred, const Alignment& alignment,
                         CompareMode mode) {
  static const std::string kOutside = "O";
  MucResult result;
  for (std::size_t k = 0; k < alignment.size(); ++k) {
    const auto gi = alignment.gold[k];
    const auto pi = alignment.pred[k];
    const std::string& g = gi ? gold.tags.at(*gi) : kOutside;
    const std::string& p = pi ? pred.tags.at(*pi) : kOutside;
    const bool gold_entity = g != "O";
    const bool pred_entity = p != "O";
    if (!gold_entity && !pred_entity) continue;
    Category category;
    if (!gold_entity)
      category = Category::spu;
    else if (!pred_entity)
      category = Category::mis;
    else
      category = same(g, p, mode) ? Category::cor : Category::inc;
    const std::string label(tagcodec::label_of_tag(category == Category::spu ? p : g));
    result.tally.add(category, label);
    result.events.push_back({gold.id, gi ? *gi : *pi, category, g, p});
  }
  return result;
}

MucResult muc_categorize(const TaggedSentence& gold, const TaggedSentence& pred, CompareMode mode) {
  if (gold.tags.size() != pred.tags.size())
    throw DataError("sentence '" + gold.id + "': gold has " + std::to_string(gold.tags.size()) +
                    " tokens, prediction has " + std::to_string(pred.tags.size()) + "; align first");
  return muc_categorize(gold, pred, identity_alignment(gold.tags.size()), mode);
}

MucResult muc_evaluate(std::span<const TaggedSentence> gold, std::span<const TaggedSentence> pred, CompareMode mode) {
  MucResult total;
  for (const auto& [g, p] : match_ids(gold, pred)) {
    if (g->tokens == p->tokens && g->tags.size() == p->tags.size())
      total += muc_categorize(*g, *p, identity_alignment(g->tags.size()), mode);
    else
      total += muc_categorize(*g, *p, align_for_muc(g->tokens, p->tokens), mode);
  }
  return total;
}

MucMetrics muc_metrics(const MucCounts& c) {
  MucMetrics m;
  m.error_per_response_fill = ratio(c.inc + c.mis + c.spu, c.cor + c.inc + c.mis + c.spu);
  m.undergeneration = ratio(c.mis, c.cor + c.inc + c.mis);
  m.overgeneration = ratio(c.spu, c.cor + c.inc + c.spu);
  m.substitution = ratio(c.inc, c.cor + c.inc);
  return m;
}

json MucMetrics::to_json() const {
  return {{"error_per_response_fill", opt(error_per_response_fill)},
          {"undergeneration", opt(undergeneration)},
          {"overgeneration", opt(overgeneration)},
          {"substitution", opt(substitution)}};
}

// -- manual-verification overrides -----------------------------------------

std::vector<OverrideRecord> parse_overrides(std::string_view csv) {
  const auto rows = io::parse_csv(csv);
  if (rows.empty()) return {};
  const auto& header = rows.front().fields;
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[std::string(text::trim(header[i]))] = i;
  for (const char* name : {"sentence_id", "token_index", "category", "verdict"})
    if (!column.count(name)) throw DataError(std::string("overrides file lacks a '") + name + "' column");

  std::vector<OverrideRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto field = [&](const char* name) -> std::string {
      const std::size_t i = column.at(name);
      if (i >= row.fields.size()) throw DataError("overrides line " + std::to_string(row.line) + ": missing " + name);
      return std::string(text::trim(row.fields[i]));
    };
    OverrideRecord rec;
    rec.line = row.line;
    rec.sentence_id = field("sentence_id");
    const auto index = field("token_index");
    try {
      std::size_t used = 0;
      rec.token_index = std::stoul(index, &used);
      if (used != index.size()) throw std::invalid_argument(index);
    } catch (const std::exception&) {
      throw DataError("overrides line " + std::to_string(row.line) + ": bad token_index '" + index + "'");
    }
    rec.category = parse_category(field("category"));
    if (rec.category == Category::cor)
      throw DataError("overrides line " + std::to_string(row.line) + ": COR events cannot be overridden");
    const auto verdict = text::lower(field("verdict"));
    if (verdict == "yes")
      rec.model_correct = true;
    else if (verdict != "no")
      throw DataError("overrides line " + std::to_string(row.line) + ": verdict must be yes or no");
    out.push_back(std::move(rec));
  }
  return out;
}

OverrideOutcome apply_overrides(const MucResult& result, std::span<const OverrideRecord> overrides) {
  using Key = std::tuple<std::string, std::size_t, Category>;
  std::set<Key> events;
  for (const auto& e : result.events)
    if (e.category != Category::cor) events.emplace(e.sentence_id, e.token_index, e.category);

  std::set<Key> seen;
  std::vector<std::string> problems;
  OverrideOutcome out;
  out.raw = result.tally.totals;
  for (const auto& o : overrides) {
    const Key key{o.sentence_id, o.token_index, o.category};
    const std::string where = "line " + std::to_string(o.line) + " (" + o.sentence_id + ", token " +
                              std::to_string(o.token_index) + ", " + std::string(to_string(o.category)) + ")";
    if (!events.count(key)) {
      problems.push_back(where + " matches no event");
      continue;
    }
    if (!seen.insert(key).second) {
      problems.push_back(where + " repeats an earlier override");
      continue;
    }
    if (o.model_correct) ++out.confirmed.at(o.category);
  }
  if (!problems.empty()) {
    std::string msg = std::to_string(problems.size()) + " invalid override(s):";
    for (const auto& p : problems) msg += "\n  " + p;
    throw DataError(msg);
  }
  out.adjusted = out.raw;
  out.adjusted.inc -= out.confirmed.inc;
  out.adjusted.mis -= out.confirmed.mis;
  out.adjusted.spu -= out.confirmed.spu;
  out.correct_additions = out.confirmed.spu;
  out.gold_errors = out.confirmed.inc + out.confirmed.mis;
  return out;
}

json OverrideOutcome::to_json() const {
  const auto counts = [](const MucCounts& c) {
    return json{{"COR", c.cor}, {"INC", c.inc}, {"MIS", c.mis}, {"SPU", c.spu}};
  };
  return {{"raw", counts(raw)},
          {"adjusted", counts(adjusted)},
          {"confirmed", counts(confirmed)},
          {"correct_additions", correct_additions},
          {"gold_errors", gold_errors},
          {"raw_metrics", muc_metrics(raw).to_json()},
          {"adjusted_metrics", muc_metrics(adjusted).to_json()}};
}

std::string OverrideOutcome::to_csv(std::string_view model_name) const {
  std::ostringstream out;
  out << "Metric,Correct?," << io::csv_escape(model_name) << "\n";
  out << "COR,," << raw.cor << "\n";
  for (const auto c : {Category::mis, Category::inc, Category::spu}) {
    out << to_string(c) << ",No," << raw.at(c) - confirmed.at(c) << "\n";
    out << ",Yes," << confirmed.at(c) << "\n";
  }
  return out.str();
}

}  // namespace finespan::nereval

// Acceptance runner: one PASS/FAIL line per criterion, each with its
// measured runtime against the allowed budget.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "finespan/aggregate.hpp"
#include "finespan/corpus.hpp"
#include "finespan/hmm.hpp"
#include "finespan/io.hpp"
#include "finespan/nereval.hpp"
#include "finespan/pipeline.hpp"
#include "finespan/similarity.hpp"
#include "finespan/stats.hpp"
#include "finespan/tagcodec.hpp"
#include "finespan/triage.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace finespan;
namespace ts = testing_support;

namespace {

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool condition, const std::string& what) {
    if (!condition) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  std::optional<double> budget_seconds;
  std::function<void(Verdict&)> check;
};

tagcodec::TagScheme default_scheme() { return tagcodec::TagScheme::build(tagcodec::default_labels()); }

void scheme_fidelity(Verdict& v) {
  const auto s = default_scheme();
  v.detail << s.size() << " tags, B-COMPANY=" << s.id("B-COMPANY") << ", B-LUCRO=" << s.id("B-LUCRO")
           << ", I-LUCRO=" << s.id("I-LUCRO");
  v.expect(s.labels().size() == 23, "23 labels");
  v.expect(s.size() == 47, "47 tags");
  v.expect(s.id("O") == 0 && s.id("B-COMPANY") == 7 && s.id("B-LUCRO") == 21 && s.id("I-LUCRO") == 22, "tag ids");
}

void worked_example(Verdict& v) {
  const auto scheme = default_scheme();
  const auto sentence = corpus::make_sentence("s1", "O lucro líquido do Santander aumentou");
  const auto functions = load_function_set(ts::data_dir() / "rules" / "rules-v1.json", ts::data_dir() / "gazetteers");
  corpus::Corpus c;
  c.sentences.push_back(sentence);
  const auto agg = aggregate::aggregate_corpus(c, weaklabel::annotate(c, functions), scheme);
  std::vector<tagcodec::EntitySpan> spans;
  if (!agg.annotated.empty())
    for (const auto& e : agg.annotated[0].entities) spans.push_back({e.start, e.end, e.label});
  const auto tagged = tagcodec::spans_to_bio(sentence, spans, scheme).tagged;
  const auto ids = tagcodec::to_token_classification(tagged, scheme)["ner_tags"].get<std::vector<int>>();
  v.expect(ids == std::vector<int>{0, 21, 22, 0, 7, 0}, "ner_tags");

  const std::vector<std::vector<std::string>> pieces = {{"O"}, {"lucro"}, {"líquido"}, {"do"}, {"Santa", "##nder"},
                                                        {"aumentou"}};
  tagcodec::SpecialTokens specials;
  specials.prefix = 1;
  specials.suffix = 1;
  const auto aligned = tagcodec::align_subwords(tagged, pieces, specials, scheme);
  v.expect(aligned.label_ids == std::vector<int>{-100, 0, 21, 22, 0, 7, 7, 0, -100}, "subword alignment");
  const auto target = tagcodec::encode_seq(tagged).target_text;
  v.expect(target == "O [lucro_líquido|LUCRO] do [Santander|COMPANY] aumentou", "seq2seq target");
  v.detail << "ner_tags via weak labels and HMM, 9 aligned labels, target \"" << target << "\"";
}

void seq_round_trip(Verdict& v) {
  const auto scheme = default_scheme();
  std::mt19937 rng(10000);
  std::size_t round_trips = 0;
  for (std::size_t i = 0; i < 10000; ++i) {
    const auto t = ts::random_sentence(rng, scheme, i);
    const auto d = tagcodec::decode_seq(tagcodec::encode_seq(t).target_text, scheme, true, t.id);
    round_trips += d.tagged == t && d.diagnostics.empty();
  }
  std::mt19937 fuzz(4242);
  std::size_t survived = 0;
  for (int i = 0; i < 10000; ++i) {
    try {
      const auto d = tagcodec::decode_seq(ts::fuzz_string(fuzz), scheme, false);
      survived += tagcodec::is_valid_bio(d.tagged.tags);
    } catch (...) {
    }
  }
  v.detail << round_trips << "/10000 round trips, " << survived << "/10000 fuzzed decodes";
  v.expect(round_trips == 10000, "round trip");
  v.expect(survived == 10000, "lenient decode");
}

void muc_suite(Verdict& v) {
  using nereval::MucCounts;
  std::mt19937_64 rng(1000);
  std::size_t formulas = 0;
  for (int i = 0; i < 1000; ++i) {
    const MucCounts c{i % 50 == 0 ? 0 : rng() % 40000, rng() % 200, rng() % 200, rng() % 200};
    const auto m = nereval::muc_metrics(c);
    const double cor = static_cast<double>(c.cor);
    const double inc = static_cast<double>(c.inc);
    const double mis = static_cast<double>(c.mis);
    const double spu = static_cast<double>(c.spu);
    const auto same = [](const std::optional<double>& got, double num, double den) {
      if (den == 0.0) return !got.has_value();
      return got.has_value() && std::abs(*got - num / den) <= 1e-12;
    };
    formulas += same(m.error_per_response_fill, inc + mis + spu, cor + inc + mis + spu) &&
                same(m.undergeneration, mis, cor + inc + mis) && same(m.overgeneration, spu, cor + inc + spu) &&
                same(m.substitution, inc, cor + inc);
  }
  std::mt19937 pairs(50);
  std::size_t conserved = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto gold = ts::sentence("s", ts::random_tags(pairs, 50));
    auto pred = ts::sentence("s", ts::random_tags(pairs, 50));
    for (std::size_t t = 0; t < 50; ++t)
      if (pairs() % 2 == 0) pred.tags[t] = gold.tags[t];
    const auto c = nereval::muc_categorize(gold, pred).tally.totals;
    const auto gold_entities = static_cast<std::size_t>(std::count_if(gold.tags.begin(), gold.tags.end(), [](const auto& t) { return t != "O"; }));
    const auto pred_entities = static_cast<std::size_t>(std::count_if(pred.tags.begin(), pred.tags.end(), [](const auto& t) { return t != "O"; }));
    conserved += c == ts::muc_brute(gold.tags, pred.tags) && c.cor + c.inc + c.mis == gold_entities &&
                 c.cor + c.inc + c.spu == pred_entities;
  }
  const auto dir = ts::fixture_dir() / "verification";
  std::vector<tagcodec::TaggedSentence> gold;
  std::vector<tagcodec::TaggedSentence> pred;
  for (const auto& r : io::read_jsonl(dir / "gold.jsonl")) gold.push_back(tagcodec::tagged_from_json(r));
  for (const auto& r : io::read_jsonl(dir / "pred.jsonl")) pred.push_back(tagcodec::tagged_from_json(r));
  const auto outcome = nereval::apply_overrides(nereval::muc_evaluate(gold, pred),
                                                nereval::parse_overrides(io::read_file(dir / "overrides.csv")));
  const bool table = outcome.to_csv("BERTimbau") == io::read_file(dir / "expected.csv");
  v.detail << formulas << "/1000 formula checks, " << conserved << "/1000 conserving pairs, verification table "
           << (table ? "reproduced" : "differs") << " (COR " << outcome.raw.cor << ", MIS " << outcome.raw.mis - outcome.confirmed.mis
           << "+" << outcome.confirmed.mis << ", INC " << outcome.raw.inc << ", SPU " << outcome.raw.spu - outcome.confirmed.spu
           << "+" << outcome.confirmed.spu << ")";
  v.expect(formulas == 1000, "formulas");
  v.expect(conserved == 1000, "conservation");
  v.expect(table, "verification table");
}

void hmm_correctness(Verdict& v) {
  std::mt19937 rng(500);
  std::size_t viterbi_ok = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t states = 1 + rng() % 5;
    const std::size_t length = 1 + rng() % 6;
    const auto m = ts::random_hmm(rng, states, length);
    std::vector<std::size_t> path;
    std::vector<std::size_t> best_path;
    std::vector<double> all;
    double best = ts::kNegInf;
    ts::enumerate(m, path, best, best_path, all);
    const auto got = hmm::viterbi(hmm::LogModel(m.log_initial, m.log_transition), m.log_emission);
    viterbi_ok += std::abs(got.log_prob - best) <= 1e-9 && got.states == best_path;
  }

  const auto scheme = ts::two_labels();
  std::size_t monotone = 0;
  for (unsigned seed = 0; seed < 20; ++seed) {
    std::mt19937 r(seed);
    const auto truth = ts::truth_sequences(r, 40 + seed);
    auto votes = ts::noisy_votes(r, truth, {0.05 + 0.01 * seed, 0.25, 0.4});
    for (auto& m : votes)
      for (auto& row : m.votes)
        for (int& x : row)
          if (r() % 3 == 0) x = aggregate::kAbstain;
    const auto model = aggregate::fit_hmm(votes, scheme, {50, -1.0, 0});
    bool ok = model.log_likelihood.size() == 50;
    for (std::size_t i = 1; i < model.log_likelihood.size(); ++i)
      ok = ok && model.log_likelihood[i] >= model.log_likelihood[i - 1] - 1e-6;
    monotone += ok;
  }

  std::mt19937 r(200);
  const auto truth = ts::truth_sequences(r, 200);
  const auto votes = ts::noisy_votes(r, truth, {0.1, 0.2, 0.3});
  const auto model = aggregate::fit_hmm(votes, scheme, {50, 1e-6, 0});
  const auto freq = aggregate::vote_frequencies(votes, scheme);
  std::vector<std::vector<std::string>> hmm_tags;
  std::vector<std::vector<std::string>> mv_tags;
  for (const auto& m : votes) {
    hmm_tags.push_back(aggregate::decode(model, m).tags);
    mv_tags.push_back(aggregate::majority_vote(m, scheme, aggregate::TieBreak::label_frequency, &freq));
  }
  const double hmm_acc = ts::accuracy(hmm_tags, truth, scheme);
  const double mv_acc = ts::accuracy(mv_tags, truth, scheme);
  v.detail << viterbi_ok << "/500 Viterbi paths, " << monotone << "/20 monotone EM runs, accuracy HMM " << hmm_acc
           << " vs majority " << mv_acc;
  v.expect(viterbi_ok == 500, "Viterbi");
  v.expect(monotone == 20, "EM monotonicity");
  v.expect(hmm_acc >= mv_acc, "HMM >= majority vote");
}

void similarity(Verdict& v) {
  std::mt19937 rng(1000);
  const std::vector<std::string> alphabets = {"ab", "abc", "lucro", "0123456789,%", "çãé ab"};
  std::size_t exact = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto alpha = ts::decode_utf8(alphabets[rng() % alphabets.size()]);
    std::u32string a;
    std::u32string b;
    for (std::size_t k = rng() % 50; k > 0; --k) a.push_back(alpha[rng() % alpha.size()]);
    for (std::size_t k = rng() % 50; k > 0; --k) b.push_back(alpha[rng() % alpha.size()]);
    const auto ua = ts::encode_utf8(a);
    const auto ub = ts::encode_utf8(b);
    exact += nereval::similarity_ratio(ua, ub) == ts::ratio_dp(ua, ub);
  }
  const double same = nereval::similarity_ratio(std::string_view("lucro líquido"), std::string_view("lucro líquido"));
  const double disjoint = nereval::similarity_ratio(std::string_view("abc"), std::string_view("xyz"));
  v.detail << exact << "/1000 exact, identical " << same << ", disjoint " << disjoint;
  v.expect(exact == 1000, "DP oracle");
  v.expect(same == 1.0 && disjoint == 0.0, "edge cases");
}

void triage_fidelity(Verdict& v) {
  const auto dir = ts::fixture_dir() / "triage";
  std::map<std::string, nlohmann::json> expected;
  for (const auto& rec : io::read_jsonl(dir / "ptt5_expected.jsonl")) expected[rec.at("id").get<std::string>()] = rec;
  std::vector<nereval::ErrorTriage> triages;
  std::size_t evaluated = 0;
  std::size_t mismatches = 0;
  std::size_t examples = 0;
  for (const auto& rec : io::read_jsonl(dir / "ptt5_pairs.jsonl")) {
    ++evaluated;
    const auto id = rec.at("id").get<std::string>();
    const auto t = nereval::triage_generation(rec.at("target").get<std::string>(),
                                              rec.at("generated").get<std::string>(), {}, id);
    const auto it = expected.find(id);
    if (!t) {
      mismatches += it != expected.end();
      continue;
    }
    triages.push_back(*t);
    std::vector<std::string> reasons;
    for (auto r : t->reasons) reasons.emplace_back(nereval::to_string(r));
    const bool match = it != expected.end() && std::string(nereval::to_string(t->severity)) == it->second.at("severity") &&
                       reasons == it->second.at("reasons").get<std::vector<std::string>>();
    mismatches += !match;
    examples += match && id.rfind("ptt5-ex-", 0) == 0 && t->severity == nereval::Severity::critical;
  }
  const auto summary = nereval::triage_summary(triages, evaluated);
  const double percent = summary.error_percent().value_or(0.0);
  v.detail << examples << "/4 documented examples, " << summary.critical << " critical / " << summary.non_critical
           << " non-critical of " << evaluated << " (" << percent << "%), " << mismatches << " mismatches";
  v.expect(examples == 4, "documented examples");
  v.expect(mismatches == 0, "fixture labels");
  v.expect(summary.critical == 299 && summary.non_critical == 46 && evaluated == 5794, "counts");
  v.expect(percent > 5.5 && percent < 6.0, "nearly 6%");
}

void statistics(Verdict& v) {
  const std::vector<double> x = {0.9899, 0.9892, 0.9885, 0.9878, 0.9871};
  const std::vector<double> y = {0.9842, 0.9835, 0.9828, 0.9821, 0.9814};
  const double p = stats::wilcoxon(x, y).p;

  stats::ScoreMatrix m;
  m.models = {"BERTimbau", "mBERT", "PTT5", "mT5"};
  for (int s = 0; s < 5; ++s) {
    m.subsets.push_back("fold-" + std::to_string(s + 1));
    m.values.push_back({0.99 - 0.001 * s, 0.98 - 0.001 * s, 0.97 - 0.001 * s, 0.96 - 0.001 * s});
  }
  const auto f = stats::friedman(m);
  const double closed = 12.0 / (5.0 * 4.0 * 5.0) * (25.0 + 100.0 + 225.0 + 400.0) - 3.0 * 5.0 * 5.0;
  const auto n = stats::nemenyi(m);
  v.detail << "Wilcoxon p " << p << ", Friedman Q " << f.q << " (closed form " << closed << "), Nemenyi q "
           << n.q_critical;
  v.expect(std::abs(p - 0.0625) <= 1e-12, "Wilcoxon");
  v.expect(std::abs(f.q - closed) <= 1e-9 && std::abs(closed - 15.0) <= 1e-12, "Friedman");
  v.expect(std::abs(n.q_critical - 3.633) <= 0.01, "Nemenyi");
}

void dataset_accounting(Verdict& v) {
  auto config = pipeline::PipelineConfig::load(ts::data_dir() / "golden" / "pipeline.json");
  const auto a = ts::scratch("acceptance-a");
  const auto b = ts::scratch("acceptance-b");
  config.paths.output_dir = a;
  const auto run = pipeline::run_pipeline(config);
  config.paths.output_dir = b;
  pipeline::run_pipeline(config);
  const auto got = ts::accounting(run);
  const auto expected = nlohmann::json::parse(io::read_file(ts::data_dir() / "golden" / "expected.json"));
  const bool identical = ts::tree_digest(a) == ts::tree_digest(b);
  v.detail << got["kept_sentences"] << " kept, " << got["total_annotations"] << " entities, split "
           << got["split_sizes"]["train"] << "/" << got["split_sizes"]["validation"] << "/" << got["split_sizes"]["test"]
           << ", " << got["annotations_per_sentence"].get<double>() << " per sentence, runs "
           << (identical ? "byte-identical" : "differ");
  v.expect(got == expected, "accounting");
  v.expect(identical, "determinism");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<Criterion> criteria = {
      {1, "tag scheme fidelity", 1.0, scheme_fidelity},
      {2, "worked-example fidelity", 1.0, worked_example},
      {3, "seq2seq round trip", 30.0, seq_round_trip},
      {4, "MUC formula suite", 30.0, muc_suite},
      {5, "HMM correctness", 120.0, hmm_correctness},
      {6, "similarity", std::nullopt, similarity},
      {7, "triage fidelity", std::nullopt, triage_fidelity},
      {8, "statistics", 10.0, statistics},
      {9, "dataset accounting", 60.0, dataset_accounting},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Verdict v;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.check(v);
    } catch (const std::exception& e) {
      v.ok = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds && seconds >= *c.budget_seconds) v.expect(false, "runtime budget");
    std::ostringstream timing;
    timing.precision(3);
    timing << std::fixed << seconds << " s";
    if (c.budget_seconds) timing << " < " << std::defaultfloat << *c.budget_seconds << " s";
    std::printf("%s %d %s (%s): %s\n", v.ok ? "PASS" : "FAIL", c.id, c.name.c_str(), timing.str().c_str(),
                v.detail.str().c_str());
    failures += !v.ok;
  }
  return failures == 0 ? 0 : 1;
}

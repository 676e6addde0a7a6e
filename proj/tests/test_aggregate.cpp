#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include <omp.h>

#include "finespan/aggregate.hpp"
#include "finespan/error.hpp"
#include "finespan/hmm.hpp"
#include "finespan/io.hpp"
#include "finespan/pipeline.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace finespan;
using namespace finespan::aggregate;
using finespan::tagcodec::TagScheme;
namespace ts = testing_support;
using namespace testing_support;

TEST_CASE("Viterbi and forward agree with exhaustive enumeration on 500 random models") {
  std::mt19937 rng(500);
  std::size_t viterbi_ok = 0;
  std::size_t forward_ok = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t states = 1 + rng() % 5;
    const std::size_t length = 1 + rng() % 6;
    const auto m = random_hmm(rng, states, length);
    std::vector<std::size_t> path;
    std::vector<std::size_t> best_path;
    std::vector<double> all;
    double best = kNegInf;
    enumerate(m, path, best, best_path, all);

    const hmm::LogModel model(m.log_initial, m.log_transition);
    const auto v = hmm::viterbi(model, m.log_emission);
    if (std::abs(v.log_prob - best) <= 1e-9 && v.states == best_path) ++viterbi_ok;

    double max = kNegInf;
    for (double x : all) max = std::max(max, x);
    double sum = 0.0;
    for (double x : all) sum += std::exp(x - max);
    hmm::Matrix alpha;
    const double ll = hmm::forward(model, m.log_emission, alpha);
    if (std::abs(ll - (max + std::log(sum))) <= 1e-9) ++forward_ok;
  }
  CHECK(viterbi_ok == 500);
  CHECK(forward_ok == 500);
}

TEST_CASE("posterior marginals sum to one") {
  std::mt19937 rng(3);
  const auto m = random_hmm(rng, 4, 7);
  const hmm::LogModel model(m.log_initial, m.log_transition);
  hmm::Matrix alpha;
  hmm::Matrix beta;
  const double ll = hmm::forward(model, m.log_emission, alpha);
  hmm::backward(model, m.log_emission, beta);
  const auto post = hmm::posteriors(alpha, beta, ll);
  for (std::size_t t = 0; t < post.rows(); ++t) {
    double s = 0.0;
    for (double p : post.row(t)) s += p;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("majority vote") {
  const auto scheme = TagScheme::build({"PRODUTO", "RESULTADO"});
  VoteMatrix m{"s", {"x"}, {"f", "g"}, {{scheme.id("B-RESULTADO")}, {scheme.id("B-PRODUTO")}}, {}};
  CHECK(majority_vote(m, scheme, TieBreak::lexicographic) == std::vector<std::string>{"B-PRODUTO"});
  const std::vector<std::size_t> freq = {0, 1, 0, 5, 0};
  CHECK(majority_vote(m, scheme, TieBreak::label_frequency, &freq) == std::vector<std::string>{"B-RESULTADO"});
  CHECK_THROWS_AS(majority_vote(m, scheme, TieBreak::label_frequency), ConfigError);

  VoteMatrix orphan{"s", {"a", "b"}, {"f"}, {{kAbstain, scheme.id("I-PRODUTO")}}, {}};
  CHECK(majority_vote(orphan, scheme) == std::vector<std::string>{"O", "B-PRODUTO"});
}

TEST_CASE("longest-span ties keep the longer voted entity together") {
  const auto scheme = TagScheme::build({"ORG", "RECEITA"});
  VoteMatrix m{"s",
               {"Receita", "Federal"},
               {"gazetteer:ORG", "gazetteer:RECEITA"},
               {{scheme.id("B-ORG"), scheme.id("I-ORG")}, {scheme.id("B-RECEITA"), kAbstain}},
               {}};
  const std::vector<std::size_t> freq = {0, 1, 1, 9, 0};
  CHECK(majority_vote(m, scheme, TieBreak::longest_span, &freq) == std::vector<std::string>{"B-ORG", "I-ORG"});
  CHECK(majority_vote(m, scheme, TieBreak::label_frequency, &freq) == std::vector<std::string>{"B-RECEITA", "B-ORG"});
}

TEST_CASE("vote matrix projection snaps and drops overlaps") {
  const auto scheme = TagScheme::build({"X"});
  const auto sentence = corpus::make_sentence("s", "um dois três quatro");
  const std::vector<weaklabel::SpanAnnotation> spans = {
      {"s", 4, 6, "oi", "X", "f"}, {"s", 3, 13, "dois três", "X", "f"}, {"s", 15, 20, "uatro", "X", "g"}};
  const auto m = build_vote_matrix(sentence, spans, {"f", "g"}, scheme);
  CHECK(m.votes[0] == std::vector<int>{kAbstain, 1, 2, kAbstain});
  CHECK(m.votes[1] == std::vector<int>{kAbstain, kAbstain, kAbstain, 1});
  CHECK(m.warnings.size() == 3);
}

TEST_CASE("a single noiseless function is reproduced exactly") {
  const auto scheme = two_labels();
  std::mt19937 rng(11);
  const auto truth = truth_sequences(rng, 60);
  auto votes = noisy_votes(rng, truth, {0.0});
  const auto model = fit_hmm(votes, scheme, {30, 1e-8, 0});
  for (std::size_t i = 0; i < votes.size(); ++i) {
    const auto d = decode(model, votes[i]);
    for (std::size_t t = 0; t < truth[i].size(); ++t) CHECK(scheme.id(d.tags[t]) == truth[i][t]);
  }
}

TEST_CASE("HMM is at least as accurate as majority vote on the 10/20/30% noise corpus") {
  const auto scheme = two_labels();
  std::mt19937 rng(200);
  const auto truth = truth_sequences(rng, 200);
  const auto votes = noisy_votes(rng, truth, {0.1, 0.2, 0.3});
  const auto model = fit_hmm(votes, scheme, {50, 1e-6, 0});
  std::vector<std::vector<std::string>> hmm_tags;
  std::vector<std::vector<std::string>> mv_tags;
  const auto freq = vote_frequencies(votes, scheme);
  for (const auto& m : votes) {
    hmm_tags.push_back(decode(model, m).tags);
    mv_tags.push_back(majority_vote(m, scheme, TieBreak::label_frequency, &freq));
  }
  const double hmm_acc = accuracy(hmm_tags, truth, scheme);
  const double mv_acc = accuracy(mv_tags, truth, scheme);
  MESSAGE("HMM accuracy " << hmm_acc << ", majority vote " << mv_acc);
  CHECK(hmm_acc >= mv_acc);
}

TEST_CASE("EM log-likelihood never decreases over 50 iterations on 20 corpora") {
  const auto scheme = two_labels();
  std::size_t monotone = 0;
  for (unsigned seed = 0; seed < 20; ++seed) {
    std::mt19937 rng(seed);
    const auto truth = truth_sequences(rng, 40 + seed);
    auto votes = noisy_votes(rng, truth, {0.05 + 0.01 * seed, 0.25, 0.4});
    // Sprinkle abstentions so the abstain symbol is exercised.
    for (auto& m : votes)
      for (auto& row : m.votes)
        for (int& v : row)
          if (rng() % 3 == 0) v = kAbstain;
    const auto model = fit_hmm(votes, scheme, {50, -1.0, 0});
    bool ok = model.log_likelihood.size() == 50;
    for (std::size_t i = 1; i < model.log_likelihood.size(); ++i)
      ok = ok && model.log_likelihood[i] >= model.log_likelihood[i - 1] - 1e-6;
    monotone += ok;
  }
  CHECK(monotone == 20);
}

TEST_CASE("blocked E-step matches the serial reference and ignores the thread count") {
  const auto scheme = two_labels();
  std::mt19937 rng(64);
  const auto truth = truth_sequences(rng, 300);
  const auto votes = noisy_votes(rng, truth, {0.1, 0.2, 0.3});
  const auto model = initialize_model(votes, scheme, {"f0", "f1", "f2"});
  const auto serial = expected_counts_serial(model, votes);
  omp_set_num_threads(1);
  const auto one = expected_counts(model, votes);
  omp_set_num_threads(4);
  const auto four = expected_counts(model, votes);
  CHECK(one.log_likelihood == four.log_likelihood);
  CHECK(one.transition == four.transition);
  CHECK(one.emission == four.emission);
  CHECK(serial.log_likelihood == doctest::Approx(one.log_likelihood).epsilon(1e-12));
  for (std::size_t i = 0; i < serial.transition.data().size(); ++i)
    CHECK(serial.transition.data()[i] == doctest::Approx(one.transition.data()[i]).epsilon(1e-10));
}

TEST_CASE("aggregation errors and dropped functions") {
  const auto scheme = two_labels();
  VoteMatrix silent{"s", {"a", "b"}, {"f"}, {{kAbstain, kAbstain}}, {}};
  std::vector<VoteMatrix> only_silent = {silent};
  CHECK_THROWS_WITH_AS(fit_hmm(only_silent, scheme), "nothing to aggregate", DataError);
  VoteMatrix mixed{"t", {"a", "b"}, {"f", "g"}, {{kAbstain, kAbstain}, {1, 2}}, {}};
  std::vector<VoteMatrix> corpus = {mixed};
  const auto model = fit_hmm(corpus, scheme, {5, 1e-6, 0});
  CHECK(model.dropped_functions == std::vector<std::string>{"f"});
  CHECK(model.functions == std::vector<std::string>{"g"});
}

TEST_CASE("model JSON round trip decodes identically") {
  const auto scheme = two_labels();
  std::mt19937 rng(5);
  const auto truth = truth_sequences(rng, 30);
  const auto votes = noisy_votes(rng, truth, {0.1, 0.2, 0.3});
  const auto model = fit_hmm(votes, scheme, {10, 1e-6, 0});
  const auto back = AggregationModel::from_json(nlohmann::json::parse(model.to_json().dump()));
  for (const auto& m : votes) CHECK(decode(back, m).tags == decode(model, m).tags);
}

TEST_CASE("worked example aggregates to the documented tags") {
  const auto scheme = TagScheme::build(tagcodec::default_labels());
  const auto functions = load_function_set(ts::data_dir() / "rules" / "rules-v1.json", ts::data_dir() / "gazetteers");
  corpus::Corpus c;
  c.sentences.push_back(corpus::make_sentence("s1", "O lucro líquido do Santander aumentou"));
  const auto r = aggregate_corpus(c, weaklabel::annotate(c, functions), scheme);
  REQUIRE(r.annotated.size() == 1);
  std::vector<std::string> tags(6, "O");
  const auto& tokens = r.annotated[0].sentence.tokens;
  for (const auto& e : r.annotated[0].entities)
    for (std::size_t t = 0; t < tokens.size(); ++t)
      if (tokens[t].start >= e.start && tokens[t].end <= e.end)
        tags[t] = (tokens[t].start == e.start ? "B-" : "I-") + e.label;
  std::vector<int> ids;
  for (const auto& tag : tags) ids.push_back(scheme.id(tag));
  CHECK(ids == std::vector<int>{0, 21, 22, 0, 7, 0});
}

TEST_CASE("golden corpus aggregation agrees with the template entities") {
  const auto scheme = TagScheme::build(tagcodec::default_labels());
  const auto functions = load_function_set(ts::data_dir() / "rules" / "rules-v1.json", ts::data_dir() / "gazetteers");
  const auto raw = corpus::ingest(ts::data_dir() / "golden" / "corpus.jsonl", corpus::Format::jsonl);
  const auto kept = corpus::filter(raw, 4, true).kept;
  const auto r = aggregate_corpus(kept, weaklabel::annotate(kept, functions), scheme);

  std::set<std::tuple<std::string, std::size_t, std::size_t, std::string>> truth;
  std::set<std::string> kept_ids;
  for (const auto& s : kept.sentences) kept_ids.insert(s.id);
  for (const auto& rec : io::read_jsonl(ts::data_dir() / "golden" / "template_entities.jsonl")) {
    const auto id = rec.at("id").get<std::string>();
    if (!kept_ids.count(id)) continue;
    for (const auto& e : rec.at("entities"))
      truth.insert({id, e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>(), e.at("label").get<std::string>()});
  }
  std::size_t predicted = 0;
  std::size_t correct = 0;
  for (const auto& a : r.annotated)
    for (const auto& e : a.entities) {
      ++predicted;
      correct += truth.count({a.sentence.id, e.start, e.end, e.label});
    }
  const double precision = static_cast<double>(correct) / static_cast<double>(predicted);
  const double recall = static_cast<double>(correct) / static_cast<double>(truth.size());
  MESSAGE("precision " << precision << ", recall " << recall);
  CHECK(precision >= 0.98);
  CHECK(recall >= 0.95);
}

TEST_CASE("HMM against majority vote across seeds (reported)") {
  const auto scheme = two_labels();
  std::size_t within = 0;
  for (unsigned seed = 1; seed <= 10; ++seed) {
    std::mt19937 rng(1000 + seed);
    const auto truth = truth_sequences(rng, 200);
    const auto votes = noisy_votes(rng, truth, {0.1, 0.2, 0.3});
    const auto model = fit_hmm(votes, scheme, {50, 1e-6, 0});
    const auto freq = vote_frequencies(votes, scheme);
    std::vector<std::vector<std::string>> hmm_tags;
    std::vector<std::vector<std::string>> mv_tags;
    for (const auto& m : votes) {
      hmm_tags.push_back(decode(model, m).tags);
      mv_tags.push_back(majority_vote(m, scheme, TieBreak::label_frequency, &freq));
    }
    const double gap = accuracy(hmm_tags, truth, scheme) - accuracy(mv_tags, truth, scheme);
    within += gap >= -0.005;
    if (gap < -0.005) MESSAGE("seed " << seed << ": HMM trails majority vote by " << -gap);
  }
  MESSAGE(within << "/10 seeds with HMM accuracy >= majority vote - 0.5 points");
}

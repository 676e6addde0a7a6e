#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>

#include "finespan/io.hpp"
#include "finespan/similarity.hpp"
#include "finespan/triage.hpp"
#include "generators.hpp"
#include "support.hpp"

using namespace finespan;
using namespace finespan::nereval;
namespace ts = testing_support;
using ts::decode_utf8;
using ts::encode_utf8;
using ts::ratio_dp;

namespace {

std::vector<std::string> names(const std::vector<Reason>& reasons) {
  std::vector<std::string> out;
  for (auto r : reasons) out.emplace_back(to_string(r));
  return out;
}

}  // namespace

TEST_CASE("similarity matches difflib on the committed pairs") {
  std::size_t exact = 0;
  std::size_t total = 0;
  for (const auto& rec : io::read_jsonl(ts::fixture_dir() / "similarity" / "difflib_pairs.jsonl")) {
    const auto a = rec.at("a").get<std::string>();
    const auto b = rec.at("b").get<std::string>();
    std::size_t matched = 0;
    for (const auto& block : matching_blocks(decode_utf8(a), decode_utf8(b))) matched += block.size;
    exact += similarity_ratio(a, b) == rec.at("ratio").get<double>() && matched == rec.at("matched").get<std::size_t>();
    ++total;
  }
  CHECK(total == 1000);
  CHECK(exact == 1000);
}

TEST_CASE("similarity matches the quadratic oracle on 1000 random pairs") {
  std::mt19937 rng(1000);
  const std::vector<std::string> alphabets = {"ab", "abc", "lucro", "0123456789,%", "çãé ab"};
  std::size_t exact = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto alpha = decode_utf8(alphabets[rng() % alphabets.size()]);
    std::u32string a;
    std::u32string b;
    for (std::size_t k = rng() % 50; k > 0; --k) a.push_back(alpha[rng() % alpha.size()]);
    for (std::size_t k = rng() % 50; k > 0; --k) b.push_back(alpha[rng() % alpha.size()]);
    const auto ua = encode_utf8(a);
    const auto ub = encode_utf8(b);
    exact += similarity_ratio(ua, ub) == ratio_dp(ua, ub);
  }
  CHECK(exact == 1000);
}

TEST_CASE("similarity edge cases") {
  CHECK(similarity_ratio(std::string_view("lucro líquido"), std::string_view("lucro líquido")) == 1.0);
  CHECK(similarity_ratio(std::string_view("abc"), std::string_view("xyz")) == 0.0);
  CHECK(similarity_ratio(std::string_view(""), std::string_view("")) == 1.0);
  CHECK(similarity_ratio(std::string_view("ção"), std::string_view("cao")) == doctest::Approx(2.0 / 6.0));
}

TEST_CASE("triage of the documented generation errors") {
  const auto money = triage_generation("o custo foi de [R$_824,00|MONEY] por cliente .",
                                       "o custo foi de [R$_8924,00|MONEY] por cliente .");
  REQUIRE(money);
  CHECK(money->severity == Severity::critical);
  CHECK(names(money->reasons) == std::vector<std::string>{"numeric-alteration"});

  const auto word = triage_generation("a decisão da [Receita_Federal|ORG] foi favorável .",
                                      "a decisão da [receita_fixa|ORG] foi favorável .");
  REQUIRE(word);
  CHECK(word->severity == Severity::critical);
  CHECK(names(word->reasons) == std::vector<std::string>{"word-change"});

  const auto percent = triage_generation("os prejuízo foram [0,08%|PERCENTUAL] no período .",
                                         "os prejuízo foram [0,88%|PERCENTUAL] no período .");
  REQUIRE(percent);
  CHECK(names(percent->reasons) == std::vector<std::string>{"numeric-alteration"});

  const std::string seg = "[R$_10,8_bilhões|MONEY] para acho que está em torno de [R$_9,8|MONEY]";
  const std::string bad = "[R$_8,8_bilhões|MONEY] para acho que está em torno de [R$_9,8|MONEY]";
  std::string repeated = "a gente saiu de";
  for (int i = 0; i < 8; ++i) repeated += " " + bad;
  const auto rep = triage_generation("a gente saiu de " + seg, repeated);
  REQUIRE(rep);
  CHECK(rep->severity == Severity::critical);
  CHECK(names(rep->reasons) == std::vector<std::string>{"numeric-alteration", "repetition"});

  const auto format = triage_generation("o lucro foi estável .", "O lucro foi estável.");
  REQUIRE(format);
  CHECK(format->severity == Severity::non_critical);
  CHECK(names(format->reasons) == std::vector<std::string>{"formatting-only"});

  CHECK_FALSE(triage_generation("igual .", "igual ."));
}

TEST_CASE("triage helpers") {
  CHECK(numeric_tokens("custo de R$824,00 e 0,08% em 2022") == std::vector<std::string>{"R$824,00", "0,08%", "2022"});
  const std::vector<std::string> tokens = {"a", "b", "c", "d", "a", "b", "c", "d", "a", "b", "c", "d", "x"};
  CHECK(consecutive_repeats(tokens, 4).at("a b c d") == 3);
  CHECK(normalized_words("O [Lucro_Líquido|LUCRO] caiu.") == std::vector<std::string>{"o", "lucro", "liquido", "caiu"});
}

TEST_CASE("PTT5 fixture reproduces the error counts") {
  const auto dir = ts::fixture_dir() / "triage";
  std::map<std::string, nlohmann::json> expected;
  for (const auto& rec : io::read_jsonl(dir / "ptt5_expected.jsonl")) expected[rec.at("id").get<std::string>()] = rec;
  std::vector<ErrorTriage> triages;
  std::size_t evaluated = 0;
  std::size_t mismatches = 0;
  for (const auto& rec : io::read_jsonl(dir / "ptt5_pairs.jsonl")) {
    ++evaluated;
    const auto id = rec.at("id").get<std::string>();
    const auto t = triage_generation(rec.at("target").get<std::string>(), rec.at("generated").get<std::string>(), {}, id);
    const auto it = expected.find(id);
    if (!t) {
      mismatches += it != expected.end();
      continue;
    }
    triages.push_back(*t);
    if (it == expected.end() || std::string(to_string(t->severity)) != it->second.at("severity").get<std::string>() ||
        names(t->reasons) != it->second.at("reasons").get<std::vector<std::string>>())
      ++mismatches;
  }
  CHECK(evaluated == 5794);
  CHECK(mismatches == 0);
  const auto summary = triage_summary(triages, evaluated);
  CHECK(summary.critical == 299);
  CHECK(summary.non_critical == 46);
  CHECK(*summary.error_percent() == doctest::Approx(345.0 * 100.0 / 5794.0));
  CHECK(*summary.error_percent() > 5.5);
  CHECK(*summary.error_percent() < 6.0);
}

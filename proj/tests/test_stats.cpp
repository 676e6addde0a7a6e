#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "finespan/error.hpp"
#include "finespan/io.hpp"
#include "finespan/stats.hpp"
#include "support.hpp"

using namespace finespan;
using namespace finespan::stats;
namespace ts = testing_support;

namespace {

bool close(double got, double want, double rel) {
  return std::abs(got - want) <= rel * std::max(1.0, std::abs(want)) || std::abs(got - want) <= 1e-300;
}

/// Exact two-sided p by enumerating every sign assignment of the ranks.
double wilcoxon_enumerated(const std::vector<double>& ranks) {
  const std::size_t n = ranks.size();
  double w_plus = 0.0;
  for (double r : ranks) w_plus += r;  // observed: all positive
  double total = 0.0;
  for (double r : ranks) total += r;
  const double observed = std::min(w_plus, total - w_plus);
  std::size_t extreme = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) w += ranks[i];
    extreme += std::min(w, total - w) <= observed + 1e-9;
  }
  return static_cast<double>(extreme) / static_cast<double>(std::size_t{1} << n);
}

ScoreMatrix perfect_ranking() {
  ScoreMatrix m;
  m.models = {"BERTimbau", "mBERT", "PTT5", "mT5"};
  for (int s = 0; s < 5; ++s) {
    m.subsets.push_back("fold-" + std::to_string(s + 1));
    m.values.push_back({0.99 - 0.001 * s, 0.98 - 0.001 * s, 0.97 - 0.001 * s, 0.96 - 0.001 * s});
  }
  return m;
}

}  // namespace

TEST_CASE("special functions agree with Boost.Math") {
  std::mt19937 rng(77);
  std::uniform_real_distribution<double> shape(0.2, 40.0);
  std::uniform_real_distribution<double> unit(0.001, 0.999);
  std::size_t ok = 0;
  const int trials = 400;
  for (int i = 0; i < trials; ++i) {
    const double a = shape(rng);
    const double b = shape(rng);
    const double x = shape(rng) * unit(rng) * 2.0;
    const double u = unit(rng);
    bool good = close(gamma_p(a, x), boost::math::gamma_p(a, x), 1e-10);
    good = good && close(gamma_q(a, x), boost::math::gamma_q(a, x), 1e-10);
    good = good && close(beta_inc(a, b, u), boost::math::ibeta(a, b, u), 1e-10);
    const double df = std::floor(shape(rng)) + 1.0;
    good = good && close(chi2_sf(x, df), cdf(complement(boost::math::chi_squared(df), x)), 1e-10);
    const double df2 = std::floor(shape(rng)) + 1.0;
    good = good && close(f_sf(x / 4.0, df, df2), cdf(complement(boost::math::fisher_f(df, df2), x / 4.0)), 1e-9);
    const double z = (u - 0.5) * 12.0;
    good = good && close(normal_cdf(z), cdf(boost::math::normal(), z), 1e-12);
    if (!good) MESSAGE("a=" << a << " b=" << b << " x=" << x << " u=" << u << " df=" << df << " df2=" << df2);
    ok += good;
  }
  CHECK(ok == trials);
}

TEST_CASE("studentized range") {
  // Two normals: the range is |Z1 - Z2|, so the CDF is 2 Phi(q / sqrt 2) - 1.
  for (double q : {0.1, 0.5, 1.0, 2.0, 2.772, 4.0}) {
    const double exact = 2.0 * cdf(boost::math::normal(), q / std::sqrt(2.0)) - 1.0;
    CHECK(studentized_range_cdf(q, 2) == doctest::Approx(exact).epsilon(1e-9));
  }
  // Published upper 5% points for infinite degrees of freedom.
  CHECK(studentized_range_quantile(0.95, 2) == doctest::Approx(2.772).epsilon(0.001));
  CHECK(studentized_range_quantile(0.95, 3) == doctest::Approx(3.314).epsilon(0.001));
  CHECK(std::abs(studentized_range_quantile(0.95, 4) - 3.633) <= 0.01);
  CHECK(studentized_range_quantile(0.95, 5) == doctest::Approx(3.858).epsilon(0.001));
  CHECK(studentized_range_quantile(0.95, 10) == doctest::Approx(4.474).epsilon(0.001));
}

TEST_CASE("Wilcoxon exact p matches sign-flip enumeration") {
  const std::vector<double> x = {0.9899, 0.9892, 0.9885, 0.9878, 0.9871};
  const std::vector<double> y = {0.9842, 0.9835, 0.9828, 0.9821, 0.9814};
  const auto r = wilcoxon(x, y);
  CHECK(r.n == 5);
  CHECK(r.p == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(r.p == doctest::Approx(wilcoxon_enumerated({1, 2, 3, 4, 5})).epsilon(1e-12));
  CHECK(r.p > 0.05);

  std::mt19937 rng(9);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t ok = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng() % 8;
    std::vector<double> a;
    std::vector<double> b;
    for (std::size_t i = 0; i < n; ++i) {
      a.push_back(noise(rng));
      b.push_back(noise(rng) + 0.3);
    }
    // Oracle for arbitrary sign patterns: flip the stored ranks' signs.
    std::vector<std::pair<double, double>> by_size;
    for (std::size_t i = 0; i < n; ++i) by_size.push_back({std::abs(a[i] - b[i]), a[i] - b[i]});
    std::sort(by_size.begin(), by_size.end());
    double w_plus = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += static_cast<double>(i + 1);
      if (by_size[i].second > 0) w_plus += static_cast<double>(i + 1);
    }
    const double observed = std::min(w_plus, total - w_plus);
    std::size_t extreme = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      double w = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (mask >> i & 1) w += static_cast<double>(i + 1);
      extreme += std::min(w, total - w) <= observed + 1e-9;
    }
    const double want = static_cast<double>(extreme) / static_cast<double>(std::size_t{1} << n);
    ok += std::abs(wilcoxon(a, b, WilcoxonMethod::exact).p - want) <= 1e-12;
  }
  CHECK(ok == 50);
}

TEST_CASE("Friedman on a perfect ranking") {
  const auto m = perfect_ranking();
  const auto r = friedman(m);
  // Closed form from the rank sums 5, 10, 15, 20.
  const double n = 5.0;
  const double k = 4.0;
  const double sums = 25.0 + 100.0 + 225.0 + 400.0;
  const double q = 12.0 / (n * k * (k + 1.0)) * sums - 3.0 * n * (k + 1.0);
  CHECK(q == doctest::Approx(15.0));
  CHECK(r.q == doctest::Approx(q).epsilon(1e-12));
  CHECK(std::isinf(r.f));
  CHECK(r.p_f == 0.0);
  CHECK(r.p_q == doctest::Approx(cdf(complement(boost::math::chi_squared(3.0), 15.0))).epsilon(1e-10));
  CHECK(r.reject);
  CHECK(r.mean_ranks == std::vector<double>{1.0, 2.0, 3.0, 4.0});
}

TEST_CASE("Nemenyi critical difference") {
  const auto r = nemenyi(perfect_ranking());
  CHECK(std::abs(r.q_critical - 3.633) <= 0.01);
  CHECK(r.standard_error == doctest::Approx(std::sqrt(4.0 * 5.0 / 30.0)));
  CHECK(r.critical_difference == doctest::Approx(r.q_critical / std::sqrt(2.0) * std::sqrt(20.0 / 30.0)));
  CHECK(r.critical_difference == doctest::Approx(2.098).epsilon(0.005));
  for (std::size_t i = 0; i < 4; ++i) CHECK(r.p_values[i][i] == 1.0);
  CHECK(r.p_values[0][3] == r.p_values[3][0]);
}

TEST_CASE("ranks share ties and respect direction") {
  CHECK(average_ranks(std::vector<double>{0.9, 0.8, 0.9, 0.7}, true) == std::vector<double>{1.5, 3.0, 1.5, 4.0});
  CHECK(average_ranks(std::vector<double>{0.9, 0.8, 0.9, 0.7}, false) == std::vector<double>{3.5, 2.0, 3.5, 1.0});
}

TEST_CASE("score CSV parsing") {
  const auto m = parse_score_csv(io::read_file(ts::data_dir() / "golden" / "scores.csv"));
  CHECK(m.k() == 4);
  CHECK(m.n() == 5);
  CHECK(m.models.front() == "BERTimbau");
  CHECK_THROWS_AS(parse_score_csv("subset,a,b\ns1,0.1\n"), DataError);
  CHECK_THROWS_AS(parse_score_csv("subset,a,b\ns1,0.1,x\n"), DataError);
  CHECK_THROWS_AS(parse_score_csv("subset,a\ns1,0.1\ns2,0.2\n"), DataError);
  CHECK_THROWS_AS(parse_score_csv("subset,a,b\ns1,0.1,0.2\n"), DataError);
}

TEST_CASE("combined comparison report") {
  const auto c = compare(perfect_ranking(), 0.05, "f1");
  CHECK(c.wilcoxon_pairs.size() == 6);
  for (const auto& p : c.wilcoxon_pairs) CHECK(p.wilcoxon.p == doctest::Approx(0.0625));
  const auto md = c.to_markdown();
  CHECK(md.find("Friedman") != std::string::npos);
  CHECK(md.find("Nemenyi") != std::string::npos);
}

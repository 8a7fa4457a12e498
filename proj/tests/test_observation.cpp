#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pooltrend/observation.hpp"
#include "pooltrend/rng.hpp"

#include <cmath>
#include <limits>

using namespace pooltrend;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> pvec(std::initializer_list<double> v) { return std::vector<double>(v); }

// independent binomial log-mass used as the test-side oracle
double oracle_binom_logmass(int k, int y, double prob) {
  double coef = std::lgamma(k + 1.0) - std::lgamma(y + 1.0) - std::lgamma(k - y + 1.0);
  return coef + y * std::log(prob) + (k - y) * std::log(1.0 - prob);
}

PooledObservations one_time_general(std::vector<Pool> pools) {
  GeneralLayout lay;
  lay.pools.push_back(std::move(pools));
  return PooledObservations::make(TimeGrid::from_times({0.0}), std::move(lay));
}

// random mixed-size configuration over a few times
PooledObservations random_general(Rng& rng, int max_k = 20) {
  int n_times = 1 + static_cast<int>(rng.below(4));
  std::vector<double> times;
  for (int i = 0; i < n_times; ++i) times.push_back(10.0 * i);
  GeneralLayout lay;
  for (int i = 0; i < n_times; ++i) {
    int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_k)));
    std::vector<Pool> pools;
    for (int j = 0; j < k; ++j)
      pools.push_back(Pool{1 + static_cast<int>(rng.below(8)), rng.uniform() < 0.35 ? 1 : 0});
    lay.pools.push_back(std::move(pools));
  }
  return PooledObservations::make(TimeGrid::from_times(times, times.back() + 1.0),
                                  std::move(lay));
}

std::vector<double> random_prevalence(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  for (auto& v : p) v = 0.001 + 0.998 * rng.uniform();
  return p;
}

}  // namespace

TEST_CASE("pool probability transform") {
  CHECK(pool_probability(0.0, 5) == 0.0);
  CHECK(pool_probability(0.37, 1) == doctest::Approx(0.37).epsilon(1e-15));
  CHECK(pool_probability(0.12, 3) == doctest::Approx(0.318528).epsilon(1e-12));
  CHECK(pool_probability(1.0, 4) == doctest::Approx(1.0));
  CHECK_THROWS_AS(pool_probability(-0.1, 3), std::domain_error);
  CHECK_THROWS_AS(pool_probability(1.1, 3), std::domain_error);
  CHECK_THROWS_AS(pool_probability(0.5, 0), std::domain_error);

  auto pt = make_prevalence_point(0.12, 3);
  CHECK(std::abs(pt.pi - (1.0 - std::pow(1.0 - pt.p, pt.m))) < 1e-12);
  CHECK(pt.p <= pt.pi);
}

TEST_CASE("invert pool probability") {
  CHECK(invert_pool_probability(0.0, 7) == 0.0);
  CHECK(invert_pool_probability(0.318528, 3) == doctest::Approx(0.12).epsilon(1e-10));
  CHECK(invert_pool_probability(0.42, 1) == doctest::Approx(0.42).epsilon(1e-15));
  CHECK_THROWS_AS(invert_pool_probability(1.5, 3), std::domain_error);
}

TEST_CASE("transform round trip over the p x m grid") {
  // The 1e-10 round trip holds wherever pi is representable away from 1;
  // once (1-p)^m falls below ~1e-16 the double pi rounds to exactly 1 and the
  // prevalence cannot be recovered from it at any precision. The feasible
  // region (complement comfortably above that cliff) must hit the tolerance.
  std::vector<double> ps = {0.0, 1e-6, 0.01, 0.1, 0.2, 0.3, 0.4, 0.5,
                            0.6, 0.7, 0.8, 0.9, 0.95, 0.99, 0.999};
  for (double p : ps)
    for (int m = 1; m <= 50; ++m) {
      double pi = pool_probability(p, m);
      double back = invert_pool_probability(pi, m);
      if (std::pow(1.0 - p, m - 1) >= 1e-6) CHECK(std::abs(back - p) < 1e-10);
      if (pi < 1.0) {
        // error stays within a few ulps of the representational bound
        // |dp/dpi| * ulp(pi)/2 = (1-p) / (m (1-p)^m) * 2^-53
        double qm = std::pow(1.0 - p, m);
        double bound = std::max(1e-10, 4.0 * (1.0 - p) * 0x1.0p-53 / (m * qm));
        CHECK(std::abs(back - p) <= bound);
      } else {
        CHECK(back == 1.0);  // pi rounded onto the boundary, p unrecoverable
      }
      CHECK(back >= 0.0);
      CHECK(back <= 1.0);
    }

  // away from saturation the inverse is exact to near machine precision
  Rng rng(29);
  for (int rep = 0; rep < 500; ++rep) {
    double p = rng.uniform() * 0.5;
    int m = 1 + static_cast<int>(rng.below(20));
    double pi = pool_probability(p, m);
    if (pi < 0.999) CHECK(std::abs(invert_pool_probability(pi, m) - p) < 1e-12);
  }
}

TEST_CASE("transform monotonicity") {
  Rng rng(7);
  // strict away from saturation, nondecreasing everywhere
  for (int i = 0; i < 200; ++i) {
    double p1 = 0.001 + 0.6 * rng.uniform();
    double p2 = p1 + 1e-4;
    int m = 1 + static_cast<int>(rng.below(20));
    CHECK(pool_probability(p2, m) > pool_probability(p1, m));
    if (m > 1) CHECK(pool_probability(p1, m) > pool_probability(p1, m - 1));
  }
  for (int i = 0; i < 200; ++i) {
    double p1 = 0.001 + 0.997 * rng.uniform();
    double p2 = p1 + 1e-4;
    int m = 1 + static_cast<int>(rng.below(49));
    CHECK(pool_probability(p2, m) >= pool_probability(p1, m));
    if (m > 1) CHECK(pool_probability(p1, m) >= pool_probability(p1, m - 1));
  }
}

TEST_CASE("general likelihood") {
  auto data = one_time_general({{3, 1}});
  CHECK(loglik_general(pvec({0.12}), data) ==
        doctest::Approx(std::log(0.318528)).epsilon(1e-12));

  // all negative results and vanishing prevalence: log-likelihood tends to 0
  auto neg = one_time_general({{3, 0}, {5, 0}, {2, 0}});
  CHECK(loglik_general(pvec({1e-12}), neg) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(loglik_general(pvec({0.0}), neg) == 0.0);

  // boundary conflicts return -inf, not exceptions
  CHECK(loglik_general(pvec({0.0}), data) == -kInf);
  auto negpool = one_time_general({{3, 0}});
  CHECK(loglik_general(pvec({1.0}), negpool) == -kInf);
}

TEST_CASE("ideal likelihood") {
  auto grid = TimeGrid::from_times({0.0});
  auto data = PooledObservations::make(grid, IdealLayout{{{2, 2, 1}}});
  CHECK(loglik_ideal(pvec({0.5}), data) == doctest::Approx(std::log(0.375)).epsilon(1e-12));

  auto zeros = PooledObservations::make(grid, IdealLayout{{{15, 3, 0}}});
  CHECK(loglik_ideal(pvec({0.0}), zeros) == 0.0);

  // matches the general Bernoulli product up to the binomial coefficient
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    int k = 1 + static_cast<int>(rng.below(10));
    int m = 1 + static_cast<int>(rng.below(6));
    int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(k) + 1));
    auto ideal = PooledObservations::make(grid, IdealLayout{{{k, m, y}}});
    auto gen = PooledObservations::make(grid, expand_to_general(ideal));
    double p = 0.01 + 0.98 * rng.uniform();
    double coef = std::lgamma(k + 1.0) - std::lgamma(y + 1.0) - std::lgamma(k - y + 1.0);
    CHECK(loglik_ideal(pvec({p}), ideal) ==
          doctest::Approx(loglik_general(pvec({p}), gen) + coef).epsilon(1e-12));
  }
}

TEST_CASE("ideal likelihood equals enumeration over pool orderings") {
  // brute force: P(count = y) = sum over all binary orderings with y positives
  auto grid = TimeGrid::from_times({0.0});
  Rng rng(13);
  for (int rep = 0; rep < 30; ++rep) {
    int k = 1 + static_cast<int>(rng.below(5));
    int m = 1 + static_cast<int>(rng.below(5));
    int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(k) + 1));
    double p = 0.02 + 0.9 * rng.uniform();
    double pi = 1.0 - std::pow(1.0 - p, m);
    double total = 0.0;
    for (int mask = 0; mask < (1 << k); ++mask) {
      int pos = __builtin_popcount(static_cast<unsigned>(mask));
      if (pos != y) continue;
      total += std::pow(pi, pos) * std::pow(1.0 - pi, k - pos);
    }
    auto data = PooledObservations::make(grid, IdealLayout{{{k, m, y}}});
    CHECK(std::exp(loglik_ideal(pvec({p}), data)) == doctest::Approx(total).epsilon(1e-9));
  }
}

TEST_CASE("efficient-general likelihood") {
  auto grid = TimeGrid::from_times({0.0});

  // n=17, m*=3: 5 pools of size 3 and 1 of size 2
  auto data = PooledObservations::make(grid, EfficientGeneralLayout{{{6, 3, 2, 2, 1}}});
  CHECK(data.n_per_time == std::vector<int>{17});
  double p = 0.12;
  double pi3 = pool_probability(p, 3);
  double pi2 = pool_probability(p, 2);
  double expected = oracle_binom_logmass(5, 2, pi3) + std::log(pi2);
  CHECK(loglik_efficient_general(pvec({p}), data) == doctest::Approx(expected).epsilon(1e-12));

  // n=2 < m*=3: the binomial block contributes exactly zero
  auto degenerate = PooledObservations::make(grid, EfficientGeneralLayout{{{1, 3, 0, 2, 0}}});
  double lone_pool = std::log(1.0 - pool_probability(p, 2));
  CHECK(loglik_efficient_general(pvec({p}), degenerate) ==
        doctest::Approx(lone_pool).epsilon(1e-12));

  // m* | n: remainder pool absent, Bernoulli term contributes exactly zero
  auto exact = PooledObservations::make(grid, EfficientGeneralLayout{{{6, 3, 2, 0, 0}}});
  CHECK(loglik_efficient_general(pvec({p}), exact) ==
        doctest::Approx(oracle_binom_logmass(5, 2, pi3)).epsilon(1e-12));
}

TEST_CASE("likelihood-difference equivalence across representations") {
  // posterior kernels must agree: differences of log-likelihood at two
  // prevalence vectors are representation-independent
  Rng rng(17);
  for (int rep = 0; rep < 300; ++rep) {
    auto gen = random_general(rng);
    auto p1 = random_prevalence(rng, gen.grid.size());
    auto p2 = random_prevalence(rng, gen.grid.size());
    double d_gen = loglik_general(p1, gen) - loglik_general(p2, gen);

    auto eff_layout = try_efficient(std::get<GeneralLayout>(gen.layout));
    if (eff_layout) {
      auto eff = PooledObservations::make(gen.grid, *eff_layout);
      double d_eff =
          loglik_efficient_general(p1, eff) - loglik_efficient_general(p2, eff);
      CHECK(std::abs(d_eff - d_gen) < 1e-10);
    }
    auto ideal_layout = try_ideal(std::get<GeneralLayout>(gen.layout));
    if (ideal_layout) {
      auto ideal = PooledObservations::make(gen.grid, *ideal_layout);
      double d_ideal = loglik_ideal(p1, ideal) - loglik_ideal(p2, ideal);
      CHECK(std::abs(d_ideal - d_gen) < 1e-10);
    }
  }
}

TEST_CASE("individual likelihood") {
  auto grid = TimeGrid::from_times({0.0});
  IndividualObservations data{grid, {{45, 4}}};
  CHECK(loglik_individual(pvec({0.1}), data) ==
        doctest::Approx(oracle_binom_logmass(45, 4, 0.1)).epsilon(1e-12));

  IndividualObservations zeros{grid, {{45, 0}}};
  CHECK(loglik_individual(pvec({0.0}), zeros) == 0.0);

  // individual testing is the m=1 special case of the ideal model
  Rng rng(19);
  for (int rep = 0; rep < 50; ++rep) {
    int k = 1 + static_cast<int>(rng.below(100));
    int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(k) + 1));
    double p = 0.01 + 0.98 * rng.uniform();
    IndividualObservations ind{grid, {{k, y}}};
    auto ideal = PooledObservations::make(grid, IdealLayout{{{k, 1, y}}});
    CHECK(loglik_individual(pvec({p}), ind) ==
          doctest::Approx(loglik_ideal(pvec({p}), ideal)).epsilon(1e-12));
  }
}

TEST_CASE("likelihoods stay finite inside the open interval") {
  Rng rng(23);
  auto gen = random_general(rng);
  auto eff = try_efficient(std::get<GeneralLayout>(gen.layout));
  for (int rep = 0; rep < 100; ++rep) {
    auto p = random_prevalence(rng, gen.grid.size());
    CHECK(std::isfinite(loglik_general(p, gen)));
    if (eff)
      CHECK(std::isfinite(
          loglik_efficient_general(p, PooledObservations::make(gen.grid, *eff))));
  }

  // single-pool masses exponentiate into [0, 1]
  for (int rep = 0; rep < 100; ++rep) {
    double p = rng.uniform();
    int m = 1 + static_cast<int>(rng.below(20));
    auto pos = one_time_general({{m, 1}});
    auto neg = one_time_general({{m, 0}});
    double mp = std::exp(loglik_general(pvec({p}), pos));
    double mn = std::exp(loglik_general(pvec({p}), neg));
    CHECK(mp >= 0.0);
    CHECK(mp <= 1.0);
    CHECK(mn >= 0.0);
    CHECK(mn <= 1.0);
    CHECK(mp + mn == doctest::Approx(1.0).epsilon(1e-12));
  }
}

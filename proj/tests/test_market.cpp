#include <cmath>
#include <numeric>

#include "doctest.h"
#include "subprice/market.hpp"
#include "subprice/random.hpp"

using namespace subprice;

TEST_CASE("arrival pmf") {
  const auto f = arrival_pmf(5.0, 12);
  CHECK(f.size() == 12);
  CHECK(f[0] == doctest::Approx(5.0 / 16.0));
  for (int n = 1; n < 12; ++n) CHECK(f[n] == doctest::Approx(1.0 / 16.0));
  CHECK(std::accumulate(f.begin(), f.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  for (double p : arrival_pmf(1.0, 12)) CHECK(p == doctest::Approx(1.0 / 12.0));
  CHECK_THROWS(arrival_pmf(0.0, 12));
}

TEST_CASE("population pmfs and value density") {
  Population pop;
  double s = 0.0;
  for (const Atom& a : pop.decay_pmf()) s += a.prob;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  s = 0.0;
  for (const Atom& a : pop.engagement_pmf()) s += a.prob;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(pop.value_mean(0.5) == 25.0);
  CHECK(pop.value_mean(0.9) == 25.0);
  Population corr = pop;
  corr.x_c = 1.0;
  CHECK(corr.value_mean(0.9) == doctest::Approx(2.5));

  const TruncatedNormal law = corr.value_density(0.9);
  CHECK(law.mass(0.0, 50.0) == doctest::Approx(1.0).epsilon(1e-12));
  // Simpson on the density itself.
  const int n = 20001;
  const double h = 50.0 / (n - 1);
  double integral = 0.0, moment = 0.0;
  for (int j = 0; j < n; ++j) {
    const double w = (j == 0 || j == n - 1) ? 1.0 : (j % 2 ? 4.0 : 2.0);
    integral += w * law.pdf(j * h);
    moment += w * j * h * law.pdf(j * h);
  }
  CHECK(integral * h / 3 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(law.first_moment(0.0, 50.0) == doctest::Approx(moment * h / 3).epsilon(1e-9));
  CHECK(law.mass(10.0, 20.0) + law.mass(20.0, 50.0) + law.mass(0.0, 10.0) ==
        doctest::Approx(1.0).epsilon(1e-12));

  Population bad = pop;
  bad.sigma = 0.0;
  CHECK_THROWS(bad.validate());
  bad = pop;
  bad.x_c = 1.5;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("cells cover the population") {
  ProductConfig cfg;
  Population pop;
  const TypeDistribution cells = pop.cells(cfg);
  CHECK(cells.size() == 2 * 3 * 12);
  double s = 0.0;
  for (const TypeCell& c : cells) s += c.weight;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  pop.x_gamma = 1.0;
  CHECK(pop.cells(cfg).size() == 2 * 12);
}

TEST_CASE("expected revenue trivial cases") {
  ProductConfig cfg;
  Population pop;
  const MarketReport r = expected_revenue(pop, PriceMenu::nothing_offered(), cfg);
  CHECK(r.revenue == 0.0);
  CHECK(r.user_welfare == 0.0);
  CHECK(r.overall_welfare == 0.0);
}

TEST_CASE("single atom revenue equals that user's payment") {
  ProductConfig cfg;
  const PriceMenu p{45.82, 21.8, 18.06, 12.0};
  for (const UserType t : {UserType{1, 0.5, 0.9, 31.0}, UserType{7, 0.9, 0.95, 12.0}}) {
    const TypeDistribution atom{{t.arrival, t.engagement, t.decay, 1.0, PointMass{t.value}}};
    const MarketReport r = expected_revenue(atom, p, cfg);
    const StrategyEval e = best_response(t, p, cfg);
    CHECK(r.revenue == e.payment);
    CHECK(r.user_welfare == e.utility);
    CHECK(r.class_share[static_cast<std::size_t>(index_of(e.cls))] == 1.0);
  }
}

TEST_CASE("envelope and simpson agree") {
  ProductConfig cfg;
  Population pop;
  IntegrationConfig simpson;
  simpson.method = VMethod::Simpson;
  auto rng = stream_rng(12, 0);
  for (int i = 0; i < 6; ++i) {
    const PriceMenu p{uniform(rng, 20, 120), uniform(rng, 10, 60), uniform(rng, 5, 50),
                      uniform(rng, 5, 25)};
    const MarketReport a = expected_revenue(pop, p, cfg);
    const MarketReport b = expected_revenue(pop, p, cfg, simpson);
    CHECK(a.revenue == doctest::Approx(b.revenue).epsilon(1e-3));
    CHECK(a.user_welfare == doctest::Approx(b.user_welfare).epsilon(1e-3));
  }
}

TEST_CASE("simpson grid doubling") {
  ProductConfig cfg;
  Population pop;
  const PriceMenu p{96.98, 35.19, 47.96, 17.71};
  IntegrationConfig ic;
  ic.method = VMethod::Simpson;
  const double base = expected_revenue(pop, p, cfg, ic).revenue;
  ic.v_nodes = 4001;
  CHECK(std::abs(expected_revenue(pop, p, cfg, ic).revenue - base) < 1e-3 * base);

  ic.v_nodes = 5;
  ic.refinement = 1e-9;
  CHECK_THROWS_AS(expected_revenue(pop, p, cfg, ic), NonConvergence);
  ic.v_nodes = 4;
  CHECK_THROWS_AS(expected_revenue(pop, p, cfg, ic), std::invalid_argument);
}

TEST_CASE("report invariants") {
  ProductConfig cfg;
  Population pop;
  auto rng = stream_rng(13, 0);
  for (int i = 0; i < 30; ++i) {
    const auto draw = [&](double hi) -> Price {
      const double x = uniform(rng, 0.0, hi);
      return uniform01(rng) < 0.75 ? Price(x) : std::nullopt;
    };
    const PriceMenu p{draw(150), draw(80), draw(60), draw(40)};
    const MarketReport r = expected_revenue(pop, p, cfg);
    CHECK(r.revenue >= 0.0);
    CHECK(r.user_welfare >= 0.0);
    CHECK(r.overall_welfare == r.revenue + r.user_welfare);
    CHECK(std::accumulate(r.class_share.begin(), r.class_share.end(), 0.0) ==
          doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t a = 0; a < r.arrival_class_share.size(); ++a) {
      CHECK(std::accumulate(r.arrival_class_share[a].begin(), r.arrival_class_share[a].end(), 0.0) ==
            doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("threads do not change the report") {
  ProductConfig cfg;
  Population pop;
  const PriceMenu p{96.98, 35.19, 47.96, 17.71};
  IntegrationConfig one, four;
  four.threads = 4;
  const MarketReport a = expected_revenue(pop, p, cfg, one);
  const MarketReport b = expected_revenue(pop, p, cfg, four);
  CHECK(a.revenue == b.revenue);
  CHECK(a.user_welfare == b.user_welfare);
  CHECK(a.class_share == b.class_share);
}

TEST_CASE("base case at reference buy-only prices") {
  ProductConfig cfg;
  Population pop;
  const MarketReport r = expected_revenue(pop, PriceMenu{45.82, 21.8, 18.06, std::nullopt}, cfg);
  CHECK(r.revenue == doctest::Approx(31.42).epsilon(0.05));
  CHECK(r.user_welfare == doctest::Approx(33.23).epsilon(0.07));
}

TEST_CASE("sub-only improvement") {
  ProductConfig cfg;
  SUBCASE("zero-value users leave the menu unchanged") {
    TypeDistribution dist;
    for (int n = 1; n <= cfg.n_max; ++n) dist.push_back({n, 0.5, 0.9, 1.0 / cfg.n_max, PointMass{0.0}});
    const PriceMenu p{std::nullopt, std::nullopt, std::nullopt, 10.0};
    CHECK(construct_sub_improvement(dist, p, cfg) == p);
  }
  SUBCASE("rejects menus with buy options") {
    Population pop;
    CHECK_THROWS(construct_sub_improvement(pop, PriceMenu{10.0, 10.0, 1.0, 5.0}, cfg));
  }
  SUBCASE("reference sub-only price") {
    Population pop;
    const PriceMenu p{std::nullopt, std::nullopt, std::nullopt, 14.66};
    const PriceMenu better = construct_sub_improvement(pop, p, cfg);
    REQUIRE(better.base_pre);
    CHECK(*better.base_pre == *better.base_post);
    CHECK(*better.upgrade == 0.0);
    CHECK(better.subscription == p.subscription);
    const double rho_max = max_post_release_payment(pop.cells(cfg), p, cfg);
    CHECK(*better.base_pre == doctest::Approx(rho_max * (1 + 1e-6)));
    const double before = expected_revenue(pop, p, cfg).revenue;
    const double after = expected_revenue(pop, better, cfg).revenue;
    CHECK(after > before);
    CHECK(after > 33.54);
  }
}

#include <cmath>

#include "doctest.h"
#include "oracle_sums.hpp"
#include "subprice/equilibrium.hpp"
#include "subprice/oracles.hpp"
#include "subprice/random.hpp"

using namespace subprice;

TEST_CASE("rho_sub") {
  CHECK(rho_sub(4, 4, 0.5, 10.0) == 0.0);
  CHECK(rho_sub(1, 3, 0.5, 10.0) == doctest::Approx(15.0));
  CHECK(rho_sub(1, 6, 1e-9, 10.0) == doctest::Approx(10.0));
  CHECK_THROWS(rho_sub(3, 2, 0.5, 1.0));
  for (int k = 0; k <= 10; ++k)
    CHECK(rho_sub(2, 2 + k, 0.37, 7.5) ==
          doctest::Approx(oracle_sums::rho_sub_paths(k, 0.37, 7.5)).epsilon(1e-12));
}

TEST_CASE("kappa") {
  CHECK(kappa(3, 3, 0.4) == 1.0);
  CHECK(kappa(1, 3, 0.5) == doctest::Approx(0.625));
  CHECK(kappa(1, 6, 0.999) > 0.999);
  for (int k = 0; k <= 10; ++k)
    CHECK(kappa(1, 1 + k, 0.71) == doctest::Approx(oracle_sums::kappa_paths(k, 0.71)).epsilon(1e-12));
}

TEST_CASE("w_pre") {
  ProductConfig cfg;
  cfg.m = 3;
  const UserType t{1, 0.5, 0.9, 10.0};
  CHECK(w_pre(1, 1, false, t, cfg) == 0.0);
  CHECK(w_pre(1, 1, true, t, cfg) == doctest::Approx(1.45));
  CHECK(w_pre(1, 3, false, t, cfg) == doctest::Approx(1.45));
}

TEST_CASE("w_post") {
  ProductConfig cfg;
  const UserType t{6, 0.5, 0.9, 10.0};
  CHECK(w_post(6, 6, {false, false}, t, cfg) == 0.0);
  const double x = 0.45;
  CHECK(w_post(6, 6, {true, true}, t, cfg) ==
        doctest::Approx((std::pow(0.9, 5) + 0.5) / (1 - x)).epsilon(1e-12));
  // The ownership tail only counts for users whose demand survived the
  // subscription period.
  const double with_survival = w_post(6, 9, {true, false}, t, cfg);
  CHECK(with_survival == doctest::Approx(oracle_sums::w_post_sum(6, 9, {true, false}, t, cfg)).epsilon(1e-12));
  const double literal = (std::pow(0.9, 5) + 0.5) * (1 - std::pow(x, 3)) / (1 - x) +
                         std::pow(0.9, 8) / (1 - x);
  CHECK(std::abs(with_survival - literal) > 0.1);
}

TEST_CASE("closed forms match direct summation on random inputs") {
  ProductConfig cfg;
  auto rng = stream_rng(11, 0);
  for (int i = 0; i < 500; ++i) {
    const UserType t{uniform_int(rng, 1, 12), uniform(rng, 0.05, 0.95), uniform(rng, 0.7, 0.99), 1.0};
    if (t.arrival < cfg.m) {
      const int to = uniform_int(rng, t.arrival, cfg.m);
      for (bool own : {false, true})
        CHECK(w_pre(t.arrival, to, own, t, cfg) ==
              doctest::Approx(oracle_sums::w_pre_sum(t.arrival, to, own, t, cfg)).epsilon(1e-12));
    }
    const int from = std::max(t.arrival, cfg.m);
    const int to = from + uniform_int(rng, 0, 15);
    for (Ownership o : {Ownership{false, false}, Ownership{true, false}, Ownership{true, true}})
      CHECK(w_post(from, to, o, t, cfg) ==
            doctest::Approx(oracle_sums::w_post_sum(from, to, o, t, cfg)).epsilon(1e-11));
  }
}

TEST_CASE("threshold n2") {
  ProductConfig cfg;
  const UserType t{1, 0.5, 0.9, 20.0};
  const PriceMenu p{std::nullopt, std::nullopt, std::nullopt, 5.0};
  CHECK(threshold_n2({true, false}, t, p, cfg) == 13);
  const PriceMenu dear{std::nullopt, std::nullopt, std::nullopt, 1000.0};
  CHECK(threshold_n2({false, false}, t, dear, cfg) == 6);
  CHECK(threshold_n2({false, false}, t, PriceMenu{}, cfg) == 6);
  int prev = 0;
  for (double v = 0.0; v <= 50.0; v += 2.5) {
    const UserType tv{3, 0.5, 0.9, v};
    const int n2 = threshold_n2({false, false}, tv, p, cfg);
    CHECK(n2 >= prev);
    prev = n2;
  }
}

TEST_CASE("threshold n3") {
  ProductConfig cfg;
  const PriceMenu p{40.0, 20.0, 10.0, 12.0};
  CHECK(threshold_n3(UserType{2, 0.5, 0.9, 0.0}, p, cfg) == 6);
  int prev = 0;
  for (double v = 0.0; v <= 50.0; v += 2.5) {
    const int n3 = threshold_n3(UserType{8, 0.5, 0.9, v}, p, cfg);
    CHECK(n3 >= 8);
    CHECK(n3 >= prev);
    prev = n3;
  }
  // Right side nonpositive: never stops on its own, so the cap applies.
  const PriceMenu cheap_sub{40.0, 30.0, 10.0, 5.0};
  const UserType t{2, 0.5, 0.9, 30.0};
  CHECK(threshold_n3(t, cheap_sub, cfg) == threshold_cap(6, 0.5));
}

TEST_CASE("threshold n1") {
  ProductConfig cfg;
  const UserType t{2, 0.5, 0.9, 30.0};
  const PriceMenu dear{std::nullopt, std::nullopt, std::nullopt, 1000.0};
  const Continuation c = continuation(StrategyClass::SubSub, t, dear, cfg);
  CHECK(threshold_n1(t, dear, cfg, c) == 2);
  const PriceMenu free_sub{std::nullopt, std::nullopt, std::nullopt, 0.0};
  const Continuation cf = continuation(StrategyClass::SubSub, t, free_sub, cfg);
  CHECK(threshold_n1(t, free_sub, cfg, cf) == 6);
}

TEST_CASE("strategy values") {
  ProductConfig cfg;
  const PriceMenu p{45.0, 25.0, 18.0, 12.0};
  SUBCASE("zero value buys nothing") {
    const UserType t{1, 0.5, 0.9, 0.0};
    const StrategyEval e = best_response(t, p, cfg);
    CHECK(e.cls == StrategyClass::SubSub);
    CHECK(e.utility == 0.0);
    CHECK(e.payment == 0.0);
  }
  SUBCASE("nothing offered") {
    const UserType t{3, 0.5, 0.9, 40.0};
    const StrategyEval e = best_response(t, PriceMenu::nothing_offered(), cfg);
    CHECK(e.cls == StrategyClass::SubSub);
    CHECK(e.utility == 0.0);
    CHECK(e.payment == 0.0);
  }
  SUBCASE("infeasible classes") {
    const UserType t{3, 0.5, 0.9, 40.0};
    const PriceMenu sub_only{std::nullopt, std::nullopt, std::nullopt, 10.0};
    CHECK_FALSE(strategy_value(StrategyClass::BuyBuy, t, sub_only, cfg).feasible);
    CHECK_FALSE(strategy_value(StrategyClass::SubBuyBase, t, sub_only, cfg).feasible);
    CHECK(strategy_value(StrategyClass::SubSub, t, sub_only, cfg).feasible);
  }
  SUBCASE("invariants") {
    auto rng = stream_rng(5, 0);
    for (int i = 0; i < 300; ++i) {
      const UserType t{uniform_int(rng, 1, 12), uniform(rng, 0.2, 0.95), uniform(rng, 0.8, 0.97),
                       uniform(rng, 0, 50)};
      for (StrategyClass c : kAllClasses) {
        const StrategyEval e = strategy_value(c, t, p, cfg);
        if (!e.feasible) continue;
        CHECK(e.reward >= 0.0);
        CHECK(e.payment >= 0.0);
        CHECK(e.utility == t.value * e.reward - e.payment);
        CHECK(e.n1 >= t.arrival);
        if (t.arrival < cfg.m) CHECK(e.n1 <= cfg.m);
        CHECK(e.n2 >= std::max(t.arrival, cfg.m));
        CHECK(e.n3 >= std::max(t.arrival, cfg.m));
      }
      CHECK(best_response(t, p, cfg).utility >= 0.0);
    }
  }
}

TEST_CASE("tie-breaking prefers the earlier class") {
  // Free everything: BB, SB and the subscriptions all reach the same utility
  // once the thresholds hit the cap; BB must win.
  ProductConfig cfg;
  const UserType t{6, 0.5, 0.9, 10.0};
  const PriceMenu free_buy{0.0, 0.0, 0.0, std::nullopt};
  const StrategyEval e = best_response(t, free_buy, cfg);
  CHECK(e.cls == StrategyClass::BuyBuy);
  CHECK(strategy_value(StrategyClass::SubBuy, t, free_buy, cfg).utility == e.utility);
}

TEST_CASE("best response monotonicity and scaling") {
  ProductConfig cfg;
  auto rng = stream_rng(17, 0);
  for (int i = 0; i < 200; ++i) {
    const UserType t{uniform_int(rng, 1, 12), uniform(rng, 0.2, 0.95), uniform(rng, 0.8, 0.97),
                     uniform(rng, 0, 45)};
    const PriceMenu p{uniform(rng, 0, 100), uniform(rng, 0, 60), uniform(rng, 0, 40),
                      uniform(rng, 0, 25)};
    const StrategyEval e = best_response(t, p, cfg);
    UserType richer = t;
    richer.value += 5.0;
    CHECK(best_response(richer, p, cfg).utility >= e.utility - 1e-9);
    PriceMenu dearer = p;
    *dearer.subscription += 1.0;
    CHECK(best_response(t, dearer, cfg).utility <= e.utility + 1e-9);
    dearer = p;
    *dearer.base_post += 1.0;
    CHECK(best_response(t, dearer, cfg).utility <= e.utility + 1e-9);

    const double c = 2.5;
    UserType ts = t;
    ts.value *= c;
    const PriceMenu ps{*p.base_pre * c, *p.base_post * c, *p.upgrade * c, *p.subscription * c};
    const StrategyEval es = best_response(ts, ps, cfg);
    CHECK(es.cls == e.cls);
    CHECK(es.payment == doctest::Approx(c * e.payment).epsilon(1e-12));
  }
}

TEST_CASE("continuation equals strategy value at the release") {
  ProductConfig cfg;
  const PriceMenu p{45.0, 25.0, 18.0, 12.0};
  const UserType t{2, 0.6, 0.9, 30.0};
  UserType at_m = t;
  at_m.arrival = cfg.m;
  for (StrategyClass c : {StrategyClass::SubSub, StrategyClass::SubBuy, StrategyClass::SubBuyBase}) {
    const Continuation k = continuation(c, t, p, cfg);
    const StrategyEval e = strategy_value(c, at_m, p, cfg);
    CHECK(k.reward == doctest::Approx(e.reward));
    CHECK(k.payment == doctest::Approx(e.payment));
  }
}

#include "subprice/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace subprice {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double geometric_partial(double ratio, int terms) {
  // sum_{j<terms} ratio^j
  if (terms <= 0) return 0.0;
  return (1.0 - std::pow(ratio, terms)) / (1.0 - ratio);
}

double base_quality(const UserType& t, int n, const ProductConfig& cfg) {
  return cfg.q1 * std::pow(t.decay, n - cfg.base_release);
}

double upgrade_quality(const UserType& t, int n, const ProductConfig& cfg) {
  return cfg.q2 * std::pow(t.decay, n - cfg.m);
}

/// Smallest n in [start, cap] with lhs(n) < rhs, where lhs(n) = lhs(start) * decay^(n-start).
/// Returns cap when the condition never holds.
template <typename Lhs>
int first_below(Lhs lhs, double decay, double rhs, int start, int cap) {
  const double lhs0 = lhs(start);
  if (lhs0 < rhs) return start;
  if (rhs <= 0.0) return cap;
  double k = std::floor(std::log(rhs / lhs0) / std::log(decay)) + 1.0;
  k = std::clamp(k, 1.0, static_cast<double>(cap - start));
  int n = start + static_cast<int>(k);
  // The log estimate can be off by one ulp-driven step; settle it exactly.
  while (n > start && lhs(n - 1) < rhs) --n;
  while (n < cap && !(lhs(n) < rhs)) ++n;
  return n;
}

/// Values of one user type that several classes share.
struct Context {
  const UserType& t;
  const PriceMenu& p;
  const ProductConfig& cfg;
  int start;  // first post-release timestep the user is present
  bool arrives_before_release;

  Context(const UserType& type, const PriceMenu& menu, const ProductConfig& config)
      : t(type), p(menu), cfg(config), start(std::max(type.arrival, config.m)),
        arrives_before_release(type.arrival < config.m) {}

  int n2_none = -1;
  int n2_base = -1;
  int n3 = -1;

  int sub_until(Ownership owned) {
    int& cached = owned.base ? n2_base : n2_none;
    if (cached < 0) cached = threshold_n2(owned, t, p, cfg);
    return cached;
  }
  int buy_base_at() {
    if (n3 < 0) n3 = threshold_n3(t, p, cfg);
    return n3;
  }
  double sub_price() const { return p.subscription.value_or(0.0); }
};

/// Post-release (reward, payment) of a non-owner in demand at ctx.start.
Continuation post_plan(StrategyClass cls, Context& ctx) {
  const UserType& t = ctx.t;
  const PriceMenu& p = ctx.p;
  const ProductConfig& cfg = ctx.cfg;
  const int s = ctx.start;
  const double delta = t.engagement;
  Continuation c;
  switch (cls) {
    case StrategyClass::SubSub: {
      const int n2 = ctx.sub_until({false, false});
      c.reward = w_post(s, n2, {false, false}, t, cfg);
      c.payment = rho_sub(s, n2, delta, ctx.sub_price());
      c.threshold = n2;
      c.feasible = true;
      break;
    }
    case StrategyClass::SubBuy:
    case StrategyClass::BuyBuy: {
      if (!p.base_post || !p.upgrade) return c;
      c.reward = w_post(s, s, {true, true}, t, cfg);
      c.payment = *p.base_post + *p.upgrade;
      c.threshold = s;
      c.feasible = true;
      break;
    }
    case StrategyClass::SubBuyBase: {
      if (!p.base_post) return c;
      const int n3 = ctx.buy_base_at();
      c.reward = w_post(s, n3, {true, false}, t, cfg);
      c.payment = rho_sub(s, n3, delta, ctx.sub_price()) + std::pow(delta, n3 - s) * *p.base_post;
      c.threshold = n3;
      c.feasible = true;
      break;
    }
    case StrategyClass::BuySub:
      throw std::invalid_argument("BuySub has no non-owner continuation");
  }
  return c;
}

StrategyEval evaluate(StrategyClass cls, Context& ctx) {
  const UserType& t = ctx.t;
  const PriceMenu& p = ctx.p;
  const ProductConfig& cfg = ctx.cfg;
  const int na = t.arrival;
  const int m = cfg.m;
  const int s = ctx.start;
  const double delta = t.engagement;

  StrategyEval e;
  e.cls = cls;
  e.n1 = na;
  e.n2 = s;
  e.n3 = s;
  e.utility = kNegInf;

  const bool buys_first = cls == StrategyClass::BuyBuy || cls == StrategyClass::BuySub;

  if (buys_first) {
    const Price first_price = p.base_at(na, cfg);
    if (!first_price) return e;
    if (cls == StrategyClass::BuyBuy && !p.upgrade) return e;
    // Demand at the release for an owner who used the product on [n_a, m).
    const double k_own = ctx.arrives_before_release ? kappa(na, m, delta) : 1.0;
    const double w_before = ctx.arrives_before_release ? w_pre(na, na, true, t, cfg) : 0.0;
    if (cls == StrategyClass::BuyBuy) {
      e.reward = w_before + k_own * w_post(s, s, {true, true}, t, cfg);
      e.payment = *first_price + k_own * *p.upgrade;
    } else {
      e.n2 = ctx.sub_until({true, false});
      e.reward = w_before + k_own * w_post(s, e.n2, {true, false}, t, cfg);
      e.payment = *first_price + k_own * rho_sub(s, e.n2, delta, ctx.sub_price());
    }
  } else {
    const Continuation cont = post_plan(cls, ctx);
    if (!cont.feasible) return e;
    if (cls == StrategyClass::SubSub) e.n2 = cont.threshold;
    if (cls == StrategyClass::SubBuyBase) e.n3 = cont.threshold;
    if (ctx.arrives_before_release) {
      e.n1 = threshold_n1(t, p, cfg, cont);
      const double k = kappa(na, e.n1, delta);
      e.reward = w_pre(na, e.n1, false, t, cfg) + k * cont.reward;
      e.payment = rho_sub(na, e.n1, delta, ctx.sub_price()) + k * cont.payment;
    } else {
      e.reward = cont.reward;
      e.payment = cont.payment;
    }
  }
  e.feasible = true;
  e.utility = t.value * e.reward - e.payment;
  return e;
}

}  // namespace

std::string_view to_string(StrategyClass c) {
  switch (c) {
    case StrategyClass::BuyBuy: return "BB";
    case StrategyClass::BuySub: return "BS";
    case StrategyClass::SubSub: return "SS";
    case StrategyClass::SubBuy: return "SB";
    case StrategyClass::SubBuyBase: return "SBb";
  }
  return "?";
}

StrategyClass strategy_class_from_string(std::string_view s) {
  for (StrategyClass c : kAllClasses)
    if (to_string(c) == s) return c;
  throw std::invalid_argument("unknown strategy class");
}

int threshold_cap(int start, double engagement) {
  const double steps = std::ceil(std::log(1e-16) / std::log(engagement));
  return start + static_cast<int>(std::min(steps, 5.0e7));
}

double rho_sub(int from, int to, double engagement, double sub_price) {
  if (to < from) throw std::invalid_argument("rho_sub: interval end before start");
  if (to == from) return 0.0;
  return sub_price * geometric_partial(engagement, to - from);
}

double kappa(int from, int to, double engagement) {
  const double kept = std::pow(engagement, to - from);
  return kept + engagement * (1.0 - kept);
}

double w_pre(int from, int to, bool own_base, const UserType& t, const ProductConfig& cfg) {
  if (to < from || to > cfg.m) throw std::invalid_argument("w_pre: need n' <= n'' <= m");
  const double x = t.decay * t.engagement;
  double w = base_quality(t, from, cfg) * geometric_partial(x, to - from);
  if (own_base && to < cfg.m) {
    w += std::pow(t.engagement, to - from) * base_quality(t, to, cfg) *
         geometric_partial(x, cfg.m - to);
  }
  return w;
}

double w_post(int from, int to, Ownership owned, const UserType& t, const ProductConfig& cfg) {
  if (from < cfg.m || to < from) throw std::invalid_argument("w_post: need m <= n' <= n''");
  const double x = t.decay * t.engagement;
  const double full = base_quality(t, from, cfg) + upgrade_quality(t, from, cfg);
  double w = full * geometric_partial(x, to - from);
  if (owned.base || owned.upgrade) {
    const double kept = std::pow(t.engagement, to - from);
    if (kept > 0.0) {
      double q = 0.0;
      if (owned.base) q += base_quality(t, to, cfg);
      if (owned.upgrade) q += upgrade_quality(t, to, cfg);
      w += kept * q / (1.0 - x);
    }
  }
  return w;
}

int threshold_n2(Ownership owned, const UserType& t, const PriceMenu& p, const ProductConfig& cfg) {
  const int start = std::max(t.arrival, cfg.m);
  if (!p.subscription) return start;
  const Ownership missing{!owned.base, !owned.upgrade};
  const auto lhs = [&](int n) { return t.value * quality(missing, t.decay, n, cfg); };
  return first_below(lhs, t.decay, *p.subscription, start, threshold_cap(start, t.engagement));
}

int threshold_n3(const UserType& t, const PriceMenu& p, const ProductConfig& cfg) {
  const int start = std::max(t.arrival, cfg.m);
  if (!p.subscription) return start;
  if (!p.base_post) throw std::invalid_argument("threshold_n3: base product not offered");
  const double rhs = *p.subscription - (1.0 - t.engagement) * *p.base_post;
  const auto lhs = [&](int n) { return t.value * upgrade_quality(t, n, cfg); };
  return first_below(lhs, t.decay, rhs, start, threshold_cap(start, t.engagement));
}

int threshold_n1(const UserType& t, const PriceMenu& p, const ProductConfig& cfg,
                 const Continuation& cont) {
  if (t.arrival >= cfg.m) throw std::invalid_argument("threshold_n1: arrival at or after m");
  if (!p.subscription) return t.arrival;
  const double lost = (1.0 - t.engagement) * (1.0 - t.engagement);
  const double forgone = lost * cont.utility(t.value);
  for (int n = t.arrival; n < cfg.m; ++n) {
    const double marginal = t.value * base_quality(t, n, cfg) - *p.subscription - forgone;
    if (marginal < 0.0) return n;
  }
  return cfg.m;
}

Continuation continuation(StrategyClass cls, const UserType& t, const PriceMenu& p,
                          const ProductConfig& cfg) {
  UserType at_release = t;
  at_release.arrival = cfg.m;
  Context ctx(at_release, p, cfg);
  return post_plan(cls, ctx);
}

StrategyEval strategy_value(StrategyClass cls, const UserType& t, const PriceMenu& p,
                            const ProductConfig& cfg) {
  Context ctx(t, p, cfg);
  return evaluate(cls, ctx);
}

StrategyEval best_response(const UserType& t, const PriceMenu& p, const ProductConfig& cfg) {
  Context ctx(t, p, cfg);
  StrategyEval best;
  best.utility = kNegInf;
  // Utilities within round-off of each other count as tied, so the fixed
  // order decides and the choice survives rescaling of v and prices.
  for (StrategyClass cls : kTieBreakOrder) {
    StrategyEval e = evaluate(cls, ctx);
    if (!e.feasible) continue;
    const double tol = 1e-12 * std::max(std::abs(e.utility), std::abs(best.utility));
    if (!best.feasible || e.utility > best.utility + tol) best = e;
  }
  return best;
}

}  // namespace subprice

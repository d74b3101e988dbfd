#include "subprice/model.hpp"

#include <cmath>
#include <cstdio>

namespace subprice {

void ProductConfig::validate() const {
  if (!(q1 > 0.0) || !std::isfinite(q1)) throw std::invalid_argument("q1 must be positive");
  if (!(q2 >= 0.0) || !std::isfinite(q2)) throw std::invalid_argument("q2 must be nonnegative");
  if (m < 1) throw std::invalid_argument("m must be at least 1");
  if (n_max < 1) throw std::invalid_argument("n_max must be at least 1");
  if (base_release > 1) throw std::invalid_argument("base_release must be <= 1");
}

void UserType::validate(const ProductConfig& cfg) const {
  if (arrival < 1 || arrival > cfg.n_max)
    throw std::invalid_argument("arrival timestep outside 1..n_max");
  if (!(engagement > 0.0 && engagement < 1.0))
    throw std::invalid_argument("engagement must lie in (0,1)");
  if (!(decay > 0.0 && decay < 1.0)) throw std::invalid_argument("decay must lie in (0,1)");
  if (!(value >= 0.0) || !std::isfinite(value))
    throw std::invalid_argument("value must be finite and nonnegative");
}

void PriceMenu::validate() const {
  for (const Price* p : {&base_pre, &base_post, &upgrade, &subscription}) {
    if (p->has_value() && (!std::isfinite(**p) || **p < 0.0))
      throw std::invalid_argument("offered prices must be finite and nonnegative");
  }
}

double quality(Ownership o, double decay, int n, const ProductConfig& cfg) {
  if (n < 1) throw std::invalid_argument("timestep must be >= 1");
  if (o.upgrade && n < cfg.m)
    throw std::invalid_argument("upgrade access requested before its release");
  double q = 0.0;
  if (o.base) q += cfg.q1 * std::pow(decay, n - cfg.base_release);
  if (o.upgrade) q += cfg.q2 * std::pow(decay, n - cfg.m);
  return q;
}

Ownership subscription_access(int n, const ProductConfig& cfg) {
  if (n < 1) throw std::invalid_argument("timestep must be >= 1");
  return {true, n >= cfg.m};
}

void check_legal(const Action& a, const PriceMenu& p, int n, const ProductConfig& cfg) {
  if (a.subscribe && !p.subscription) throw IllegalAction("subscription is not offered");
  if (a.buy_base && !p.base_at(n, cfg)) throw IllegalAction("base product is not offered");
  if (a.buy_upgrade) {
    if (n < cfg.m) throw IllegalAction("upgrade bought before its release");
    if (!p.upgrade) throw IllegalAction("upgrade is not offered");
  }
}

Ownership access_after(const Action& a, const UserState& s, int n, const ProductConfig& cfg) {
  if (a.buy_upgrade && n < cfg.m) throw IllegalAction("upgrade bought before its release");
  if (a.subscribe) return subscription_access(n, cfg);
  return componentwise_max(s.owned, {a.buy_base, a.buy_upgrade});
}

double immediate_reward(const Action& a, const UserType& t, const UserState& s, int n,
                        const ProductConfig& cfg) {
  if (!s.demand) {
    if (a.buy_upgrade && n < cfg.m) throw IllegalAction("upgrade bought before its release");
    return 0.0;
  }
  return quality(access_after(a, s, n, cfg), t.decay, n, cfg);
}

double immediate_payment(const Action& a, const PriceMenu& p, int n, const ProductConfig& cfg) {
  check_legal(a, p, n, cfg);
  double pay = 0.0;
  if (a.subscribe) pay += *p.subscription;
  if (a.buy_base) pay += *p.base_at(n, cfg);
  if (a.buy_upgrade) pay += *p.upgrade;
  return pay;
}

std::string format_price(const Price& p) {
  if (!p) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", *p);
  return buf;
}

}  // namespace subprice

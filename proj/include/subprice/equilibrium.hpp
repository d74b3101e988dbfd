#pragma once

#include <array>
#include <string_view>

#include "subprice/model.hpp"

namespace subprice {

/// The five strategy classes that can be optimal for a user. The first
/// letter is the plan before the upgrade release (Buy at arrival or
/// Subscribe while in demand), the rest is the plan from the release on.
enum class StrategyClass {
  BuyBuy,      // BB: buy base at arrival, buy the upgrade at release
  BuySub,      // BS: buy base, subscribe for upgrade access until n2
  SubSub,      // SS: subscribe until n1, then from the release until n2
  SubBuy,      // SB: subscribe until n1, buy everything at the release
  SubBuyBase,  // SBb: subscribe until n1, subscribe from the release until n3, buy base at n3
};

inline constexpr std::array<StrategyClass, 5> kAllClasses = {
    StrategyClass::BuyBuy, StrategyClass::BuySub, StrategyClass::SubSub,
    StrategyClass::SubBuy, StrategyClass::SubBuyBase};

/// Order used to break exact utility ties in best_response.
inline constexpr std::array<StrategyClass, 5> kTieBreakOrder = {
    StrategyClass::BuyBuy, StrategyClass::SubBuy, StrategyClass::BuySub,
    StrategyClass::SubBuyBase, StrategyClass::SubSub};

std::string_view to_string(StrategyClass c);
StrategyClass strategy_class_from_string(std::string_view s);
inline int index_of(StrategyClass c) { return static_cast<int>(c); }

/// Expected outcome of playing one strategy class.
struct StrategyEval {
  StrategyClass cls = StrategyClass::SubSub;
  double reward = 0.0;   // w, in quality units
  double payment = 0.0;  // rho, money
  double utility = 0.0;  // v * w - rho
  int n1 = 0;            // first pre-release timestep without subscribing
  int n2 = 0;            // first post-release timestep without subscribing (BS, SS)
  int n3 = 0;            // post-release buy timestep (SBb)
  bool feasible = false;
};

/// Reward and payment from the upgrade release on, for a user who arrived
/// exactly at the release and owns nothing.
struct Continuation {
  double reward = 0.0;
  double payment = 0.0;
  int threshold = 0;  // n2 or n3 of the post-release plan, when it has one
  bool feasible = false;

  double utility(double value) const { return value * reward - payment; }
};

/// Last timestep a threshold scan may return. Beyond it the probability of
/// still having demand is below 1e-16, so nothing after it matters.
int threshold_cap(int start, double engagement);

/// Expected subscription payments over [n', n'') with per-use survival delta.
double rho_sub(int from, int to, double engagement, double sub_price);

/// Probability of demand at the release after using the product on [n', n'').
double kappa(int from, int to, double engagement);

/// Expected normalized reward before the release for a user arriving at n'
/// who subscribes on [n', n'') and then owns the base (own_base) or nothing.
double w_pre(int from, int to, bool own_base, const UserType& t, const ProductConfig& cfg);

/// Expected normalized reward from n' on for a user in demand at n' who
/// subscribes on [n', n'') and then keeps using what `owned` covers.
double w_post(int from, int to, Ownership owned, const UserType& t, const ProductConfig& cfg);

int threshold_n2(Ownership owned, const UserType& t, const PriceMenu& p, const ProductConfig& cfg);
int threshold_n3(const UserType& t, const PriceMenu& p, const ProductConfig& cfg);
int threshold_n1(const UserType& t, const PriceMenu& p, const ProductConfig& cfg,
                 const Continuation& cont);

/// Post-release plan of `cls` valued for a user arriving at the release.
/// Only meaningful for SubSub, SubBuy and SubBuyBase.
Continuation continuation(StrategyClass cls, const UserType& t, const PriceMenu& p,
                          const ProductConfig& cfg);

StrategyEval strategy_value(StrategyClass cls, const UserType& t, const PriceMenu& p,
                            const ProductConfig& cfg);

/// Utility-maximizing strategy class with its thresholds.
StrategyEval best_response(const UserType& t, const PriceMenu& p, const ProductConfig& cfg);

}  // namespace subprice

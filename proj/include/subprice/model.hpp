#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace subprice {

/// Product constants: base quality, upgrade increment, upgrade release
/// timestep and the arrival window. Timesteps are 1-based.
struct ProductConfig {
  double q1 = 1.0;
  double q2 = 0.5;
  int m = 6;
  int n_max = 12;
  // Timestep at which the base product's perceived quality equals q1.
  int base_release = 1;

  void validate() const;
};

/// (n_a, delta, gamma, v).
struct UserType {
  int arrival = 1;
  double engagement = 0.5;  // per-usage probability of keeping demand
  double decay = 0.9;       // per-timestep quality decay
  double value = 25.0;      // value per unit quality while in demand

  void validate(const ProductConfig& cfg) const;
};

/// Ownership (or access) vector o = (o1, o2).
struct Ownership {
  bool base = false;
  bool upgrade = false;

  friend bool operator==(const Ownership&, const Ownership&) = default;
};

inline Ownership componentwise_max(Ownership a, Ownership b) {
  return {a.base || b.base, a.upgrade || b.upgrade};
}

struct UserState {
  bool demand = true;
  Ownership owned;
};

/// A menu price; std::nullopt means the option is not offered at all.
using Price = std::optional<double>;

struct PriceMenu {
  Price base_pre;   // base product before the upgrade release
  Price base_post;  // base product from the upgrade release on
  Price upgrade;
  Price subscription;  // per timestep

  /// Price of the base product at timestep n.
  Price base_at(int n, const ProductConfig& cfg) const {
    return n < cfg.m ? base_pre : base_post;
  }

  void validate() const;

  static PriceMenu nothing_offered() { return {}; }
  friend bool operator==(const PriceMenu&, const PriceMenu&) = default;
};

struct Action {
  bool subscribe = false;
  bool buy_base = false;
  bool buy_upgrade = false;
};

/// Raised when an action is not available under the menu or timestep.
class IllegalAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Realized quality of access vector `o` at timestep n.
double quality(Ownership o, double decay, int n, const ProductConfig& cfg);

/// Everything a subscriber can access at timestep n.
Ownership subscription_access(int n, const ProductConfig& cfg);

/// Throws IllegalAction when `a` cannot be taken at n under `p`.
void check_legal(const Action& a, const PriceMenu& p, int n, const ProductConfig& cfg);

/// Normalized immediate reward (before multiplying by the user's value).
double immediate_reward(const Action& a, const UserType& t, const UserState& s, int n,
                        const ProductConfig& cfg);

double immediate_payment(const Action& a, const PriceMenu& p, int n, const ProductConfig& cfg);

inline double immediate_utility(const Action& a, const UserType& t, const UserState& s,
                                const PriceMenu& p, int n, const ProductConfig& cfg) {
  return t.value * immediate_reward(a, t, s, n, cfg) - immediate_payment(a, p, n, cfg);
}

/// Access actually enjoyed this timestep after taking `a` in state `s`.
Ownership access_after(const Action& a, const UserState& s, int n, const ProductConfig& cfg);

std::string format_price(const Price& p);

}  // namespace subprice

#pragma once

#include <array>
#include <stdexcept>
#include <vector>

#include "subprice/equilibrium.hpp"
#include "subprice/model.hpp"
#include "subprice/population.hpp"

namespace subprice {

/// How the integral over the user's value v is computed within each cell.
enum class VMethod {
  // Locates every strategy breakpoint and integrates each linear piece in
  // closed form against the truncated normal. Exact up to round-off.
  Envelope,
  // Composite Simpson on v_nodes uniform nodes, checked against the grid
  // with twice the resolution.
  Simpson,
};

struct IntegrationConfig {
  VMethod method = VMethod::Envelope;
  int v_nodes = 2001;        // Simpson only; odd and >= 3
  double refinement = 1e-3;  // Simpson only; max relative change under grid doubling
  unsigned threads = 1;

  void validate() const;
};

class NonConvergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MarketReport {
  double revenue = 0.0;       // expected payment per user
  double user_welfare = 0.0;  // expected v * w - rho per user
  double overall_welfare = 0.0;
  std::array<double, 5> class_share{};  // indexed by index_of(StrategyClass)
  // arrival_class_share[n - 1] are the class shares among users arriving at n.
  std::vector<std::array<double, 5>> arrival_class_share;
  std::vector<double> arrival_mass;
};

MarketReport expected_revenue(const TypeDistribution& dist, const PriceMenu& p,
                              const ProductConfig& cfg, const IntegrationConfig& ic = {});

MarketReport expected_revenue(const Population& pop, const PriceMenu& p, const ProductConfig& cfg,
                              const IntegrationConfig& ic = {});

/// Largest expected payment from the release on, over every type in the
/// grid, when only the subscription is offered at p_sub_only's price.
double max_post_release_payment(const TypeDistribution& dist, const PriceMenu& p_sub_only,
                                const ProductConfig& cfg);

/// Adds both buy options at rho_max + eps (eps = 1e-6 rho_max) and a free
/// upgrade to a subscription-only menu. Returns the input when rho_max is 0.
/// Revenue rises when p_sub_only is revenue-optimal among subscription-only
/// menus; at an arbitrary subscription price it can fall, because buying at
/// arrival also skips the pre-release subscription payments.
PriceMenu construct_sub_improvement(const TypeDistribution& dist, const PriceMenu& p_sub_only,
                                    const ProductConfig& cfg);

PriceMenu construct_sub_improvement(const Population& pop, const PriceMenu& p_sub_only,
                                    const ProductConfig& cfg);

}  // namespace subprice

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "subprice/market.hpp"

namespace subprice {

struct DEConfig {
  int population_per_dim = 15;
  double F = 0.8;
  double CR = 0.9;
  int generations = 300;
  int restarts = 15;
  int stagnation_generations = 60;  // stop a restart after this many without progress
  double stagnation_tol = 1e-6;     // relative improvement that counts as progress
  std::uint64_t seed = 1;
  unsigned threads = 1;

  void validate() const;
};

struct DEResult {
  Eigen::VectorXd argmax;
  double value = 0.0;
  std::vector<double> restart_best;
  std::size_t evaluations = 0;
  std::size_t discarded = 0;  // non-finite objective values
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// rand/1/bin differential evolution, maximizing over the box [lo, hi].
/// Restart r draws from stream_rng(de.seed, r). Trial vectors are generated
/// before any of them is evaluated, so the result does not depend on
/// de.threads.
DEResult differential_evolution(const Objective& f, const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi, const DEConfig& de);

enum class RegimeKind { BuyOnly, SubOnly, Both, BothGivenBuy };

std::string_view to_string(RegimeKind k);
RegimeKind regime_from_string(std::string_view s);

struct PriceBounds {
  double base_lo = 0.0, base_hi = 200.0;
  double upgrade_lo = 0.0, upgrade_hi = 200.0;
  double sub_lo = 0.0, sub_hi = 60.0;
};

struct PricingRegime {
  RegimeKind kind = RegimeKind::Both;
  PriceMenu frozen;  // buy prices held fixed under BothGivenBuy

  static PricingRegime buy_only() { return {RegimeKind::BuyOnly, {}}; }
  static PricingRegime sub_only() { return {RegimeKind::SubOnly, {}}; }
  static PricingRegime both() { return {RegimeKind::Both, {}}; }
  static PricingRegime both_given_buy(const PriceMenu& buy) {
    return {RegimeKind::BothGivenBuy, {buy.base_pre, buy.base_post, buy.upgrade, std::nullopt}};
  }

  int dim() const;
  void bounds(const PriceBounds& b, Eigen::VectorXd& lo, Eigen::VectorXd& hi) const;
  /// Menu for free-price vector x (p1_pre, p1_post, p2, pS order, skipping fixed ones).
  PriceMenu menu(const Eigen::VectorXd& x) const;
};

struct OptResult {
  PriceMenu best;
  MarketReport report;
  std::vector<double> restart_best;
  std::size_t evaluations = 0;
  // BothGivenBuy only: no subscription price beat the frozen buy-only menu.
  bool subscription_disabled = false;
};

OptResult optimize(const PricingRegime& regime, const TypeDistribution& dist,
                   const ProductConfig& cfg, const IntegrationConfig& ic, const DEConfig& de,
                   const PriceBounds& bounds = {});

OptResult optimize(const PricingRegime& regime, const Population& pop, const ProductConfig& cfg,
                   const IntegrationConfig& ic, const DEConfig& de, const PriceBounds& bounds = {});

}  // namespace subprice

#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "subprice/equilibrium.hpp"
#include "subprice/model.hpp"
#include "subprice/population.hpp"

namespace subprice {

struct OracleConfig {
  int horizon = 0;            // truncation timestep; 0 picks one from tail_tol
  double tail_tol = 1e-9;     // bound on the utility beyond the horizon
  double value_bound = 50.0;  // v_max used in the tail bound
  std::size_t mc_samples = 100000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Smallest horizon whose discarded tail is provably below oc.tail_tol.
int oracle_horizon(const UserType& t, const ProductConfig& cfg, const OracleConfig& oc);

struct MdpValue {
  double utility = 0.0;
  double reward = 0.0;
  double payment = 0.0;
};

/// Exact optimum of the horizon-truncated user MDP over every action sequence.
/// States are (timestep, demand, ownership); the upgrade may only be owned
/// together with the base product.
MdpValue mdp_best_utility(const UserType& t, const PriceMenu& p, const ProductConfig& cfg,
                          const OracleConfig& oc);

struct SimStep {
  int n = 0;
  UserState state;  // before acting
  Action action;
  double reward = 0.0;
  double payment = 0.0;
};

struct SimTrace {
  std::vector<SimStep> steps;
  double total_reward = 0.0;
  double total_payment = 0.0;
};

/// Action the strategy prescribes at timestep n in state s.
Action strategy_action(const StrategyEval& plan, const UserType& t, const UserState& s, int n,
                       const ProductConfig& cfg);

/// Plays `plan` through one realization of the demand process.
SimTrace simulate_user(const StrategyEval& plan, const UserType& t, const PriceMenu& p,
                       const ProductConfig& cfg, std::mt19937_64& rng, bool record_steps = true);

struct PopulationSimulation {
  double mean_revenue = 0.0;
  double revenue_std_error = 0.0;
  double mean_utility = 0.0;
  double utility_std_error = 0.0;
  std::array<double, 5> class_share{};
  std::size_t samples = 0;
};

/// Samples oc.mc_samples users (user i draws from stream_rng(oc.seed, i)),
/// plays each one's best response and averages realized payments and
/// utilities. Deterministic for a given seed regardless of oc.threads.
PopulationSimulation simulate_population(const TypeDistribution& dist, const PriceMenu& p,
                                         const ProductConfig& cfg, const OracleConfig& oc);

PopulationSimulation simulate_population(const Population& pop, const PriceMenu& p,
                                         const ProductConfig& cfg, const OracleConfig& oc);

}  // namespace subprice

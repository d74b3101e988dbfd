#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "subprice/market.hpp"
#include "subprice/optimizer.hpp"
#include "subprice/oracles.hpp"

namespace subprice {

inline constexpr const char* kVersion = "0.3.0";

/// Invalid or unknown configuration entry; what() names the key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VerifyConfig {
  int oracle_instances = 1000;
  int mc_pairs = 30;
  int mc_required = 28;  // pairs that must land inside the band
  double oracle_tol = 1e-6;
  double mc_band = 3.0;  // standard errors
};

struct ExperimentConfig {
  ProductConfig product;
  Population population;
  std::vector<RegimeKind> regimes = {RegimeKind::BuyOnly, RegimeKind::SubOnly, RegimeKind::Both,
                                     RegimeKind::BothGivenBuy};
  std::string sweep_param;
  std::vector<double> sweep_values;
  IntegrationConfig integration;
  DEConfig de;
  PriceBounds bounds;
  OracleConfig oracle;
  VerifyConfig verify;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::string out_dir = "out";

  void validate() const;
  /// Every key is optional; absent keys keep the defaults above.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  /// FNV-1a 64 of the canonical JSON dump.
  std::uint64_t hash() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

/// Parameters run_sweep accepts: x_delta, x_gamma, sigma, x_a, x_c.
void set_population_param(Population& pop, const std::string& name, double value);

struct SweepRow {
  std::string sweep_param;
  double sweep_value = 0.0;  // NaN for the base case
  RegimeKind regime = RegimeKind::BuyOnly;
  double revenue = 0.0;
  double user_welfare = 0.0;
  double overall_welfare = 0.0;
  PriceMenu prices;
  double relative_revenue = 0.0;
  std::size_t evaluations = 0;
};

struct RunOutput {
  std::vector<SweepRow> rows;
  std::size_t evaluations = 0;
  double runtime_seconds = 0.0;
};

/// Optimizes every configured regime at the config's population. BuyOnly is
/// always optimized since it normalizes relative_revenue and seeds
/// BothGivenBuy; its row is emitted only when requested.
std::vector<SweepRow> run_regimes(const ExperimentConfig& config, const std::string& param,
                                  double value);

RunOutput run_base_case(const ExperimentConfig& config);
RunOutput run_sweep(const ExperimentConfig& config);

void write_csv(std::ostream& os, const std::vector<SweepRow>& rows, const ExperimentConfig& config);
/// Writes <stem>.csv and a <stem>.meta.json sidecar (runtime, evaluation
/// counts) into config.out_dir; returns the CSV path.
std::filesystem::path write_run(const RunOutput& run, const ExperimentConfig& config,
                                const std::string& stem);

using ResponseFn =
    std::function<StrategyEval(const UserType&, const PriceMenu&, const ProductConfig&)>;

struct VerifyReport {
  int oracle_instances = 0;
  int oracle_failures = 0;
  double oracle_max_deviation = 0.0;
  int mc_pairs = 0;
  int mc_within = 0;
  double mc_max_z = 0.0;  // largest |analytic - simulated| in standard errors
  bool oracle_pass = false;
  bool mc_pass = false;
  bool pass() const { return oracle_pass && mc_pass; }
};

/// Random user type and menu spanning the experiment ranges.
UserType random_type(std::mt19937_64& rng, const ProductConfig& cfg);
PriceMenu random_menu(std::mt19937_64& rng);
Population random_population(std::mt19937_64& rng);

/// Compares `response` against the MDP oracle on random instances.
void verify_oracle(const ExperimentConfig& config, VerifyReport& report,
                   const ResponseFn& response = best_response);
/// Compares analytic revenue against Monte Carlo on random (population, menu) pairs.
void verify_monte_carlo(const ExperimentConfig& config, VerifyReport& report);

VerifyReport run_verify(const ExperimentConfig& config, const ResponseFn& response = best_response);

}  // namespace subprice

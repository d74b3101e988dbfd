#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "subprice/experiments.hpp"

using namespace subprice;
using nlohmann::json;

namespace {

ExperimentConfig quick_config() {
  ExperimentConfig c;
  c.de.population_per_dim = 4;
  c.de.generations = 8;
  c.de.restarts = 2;
  c.de.stagnation_generations = 5;
  return c;
}

std::string csv_of(const RunOutput& run, const ExperimentConfig& c) {
  std::ostringstream os;
  write_csv(os, run.rows, c);
  return os.str();
}

// Best response computed with the post-release ownership tail missing its
// survival factor, the way the formula is printed.
StrategyEval corrupted_response(const UserType& t, const PriceMenu& p, const ProductConfig& cfg) {
  StrategyEval best;
  best.utility = -INFINITY;
  const double x = t.decay * t.engagement;
  const int s = std::max(t.arrival, cfg.m);
  for (StrategyClass c : kTieBreakOrder) {
    StrategyEval e = strategy_value(c, t, p, cfg);
    if (!e.feasible) continue;
    int until = -1;
    double k = 1.0;
    if (c == StrategyClass::BuySub) {
      until = e.n2;
      if (t.arrival < cfg.m) k = kappa(t.arrival, cfg.m, t.engagement);
    } else if (c == StrategyClass::SubBuyBase) {
      until = e.n3;
      if (t.arrival < cfg.m) k = kappa(t.arrival, e.n1, t.engagement);
    }
    if (until >= 0) {
      const double q = quality({true, false}, t.decay, until, cfg);
      e.reward += k * (1.0 - std::pow(t.engagement, until - s)) * q / (1.0 - x);
      e.utility = t.value * e.reward - e.payment;
    }
    if (e.utility > best.utility) best = e;
  }
  return best;
}

}  // namespace

TEST_CASE("config defaults and parsing") {
  const ExperimentConfig d = ExperimentConfig::from_json(json::object());
  CHECK(d.population.x_a == 5.0);
  CHECK(d.population.x_gamma == 0.8);
  CHECK(d.population.x_delta == 0.5);
  CHECK(d.population.sigma == 10.0);
  CHECK(d.product.q1 == 1.0);
  CHECK(d.product.q2 == 0.5);
  CHECK(d.product.m == 6);
  CHECK(d.product.n_max == 12);
  CHECK(d.regimes.size() == 4);

  const json j = {{"population", {{"x_delta", 0.7}}},
                  {"regimes", {"SubOnly"}},
                  {"sweep", {{"param", "x_c"}, {"values", {0.0, 1.0}}}},
                  {"integration", {{"method", "simpson"}, {"v_nodes", 1001}}},
                  {"seed", 9}};
  const ExperimentConfig c = ExperimentConfig::from_json(j);
  CHECK(c.population.x_delta == 0.7);
  CHECK(c.regimes == std::vector<RegimeKind>{RegimeKind::SubOnly});
  CHECK(c.sweep_values.size() == 2);
  CHECK(c.integration.method == VMethod::Simpson);
  CHECK(c.seed == 9);
  CHECK(ExperimentConfig::from_json(c.to_json()).hash() == c.hash());
  CHECK(c.hash() != d.hash());
}

TEST_CASE("config errors name the key") {
  const auto message = [](const json& j) {
    try {
      ExperimentConfig::from_json(j);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message({{"population", {{"x_delta", "high"}}}}).find("population.x_delta") != std::string::npos);
  CHECK(message({{"populaton", json::object()}}).find("populaton") != std::string::npos);
  CHECK(message({{"population", {{"sigma", -1.0}}}}).find("population") != std::string::npos);
  CHECK(message({{"sweep", {{"param", "mu2"}}}}).find("sweep.param") != std::string::npos);
  CHECK(message({{"regimes", {"Rent"}}}).find("Rent") != std::string::npos);
  CHECK(message({{"integration", {{"v_nodes", 10}}}}).find("integration") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("sweep parameters") {
  Population p;
  set_population_param(p, "x_delta", 0.3);
  set_population_param(p, "x_gamma", 0.2);
  set_population_param(p, "sigma", 7.0);
  set_population_param(p, "x_a", 2.0);
  set_population_param(p, "x_c", 0.4);
  CHECK(p.x_delta == 0.3);
  CHECK(p.x_gamma == 0.2);
  CHECK(p.sigma == 7.0);
  CHECK(p.x_a == 2.0);
  CHECK(p.x_c == 0.4);
  CHECK_THROWS(set_population_param(p, "mu", 1.0));
}

TEST_CASE("base case rows and csv") {
  ExperimentConfig c = quick_config();
  const RunOutput run = run_base_case(c);
  REQUIRE(run.rows.size() == 4);
  CHECK(run.rows[0].regime == RegimeKind::BuyOnly);
  CHECK(run.rows[0].relative_revenue == 1.0);
  for (const SweepRow& r : run.rows) CHECK(r.overall_welfare == r.revenue + r.user_welfare);

  const std::string csv = csv_of(run, c);
  std::istringstream lines(csv);
  std::string first, header, row;
  std::getline(lines, first);
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(first.rfind("# subprice ", 0) == 0);
  CHECK(first.find("config_hash=") != std::string::npos);
  CHECK(first.find("seed=1") != std::string::npos);
  CHECK(header ==
        "sweep_param,sweep_value,regime,revenue,user_welfare,overall_welfare,p1_pre,p1_post,p2,p_s,"
        "relative_revenue");
  CHECK(row.rfind("base,NA,BuyOnly,", 0) == 0);
  CHECK(row.find(",NA,1.000000") != std::string::npos);  // p_s unavailable, relative 1

  c.regimes = {RegimeKind::SubOnly};
  CHECK(run_base_case(c).rows.size() == 1);
}

TEST_CASE("csv is byte-identical across runs and thread counts") {
  ExperimentConfig c = quick_config();
  c.sweep_param = "x_delta";
  c.sweep_values = {0.4, 0.8};
  c.regimes = {RegimeKind::BuyOnly, RegimeKind::Both};
  const std::string a = csv_of(run_sweep(c), c);
  const std::string b = csv_of(run_sweep(c), c);
  c.threads = 3;
  const std::string t = csv_of(run_sweep(c), c);
  CHECK(a == b);
  CHECK(a == t);
  c.threads = 1;
  c.seed = 2;
  CHECK(csv_of(run_sweep(c), c) != a);
}

TEST_CASE("single-value sweep") {
  ExperimentConfig c = quick_config();
  c.sweep_param = "x_c";
  c.sweep_values = {1.0};
  const RunOutput run = run_sweep(c);
  CHECK(run.rows.size() == 4);
  for (const SweepRow& r : run.rows) {
    CHECK(r.sweep_param == "x_c");
    CHECK(r.sweep_value == 1.0);
  }
  c.sweep_values.clear();
  CHECK_THROWS_AS(run_sweep(c), ConfigError);
}

TEST_CASE("write_run writes csv and sidecar") {
  ExperimentConfig c = quick_config();
  c.regimes = {RegimeKind::SubOnly};
  c.out_dir = (std::filesystem::temp_directory_path() / "subprice_test_out").string();
  std::filesystem::remove_all(c.out_dir);
  const auto path = write_run(run_base_case(c), c, "base_case");
  CHECK(std::filesystem::exists(path));
  std::ifstream meta(std::filesystem::path(c.out_dir) / "base_case.meta.json");
  const json m = json::parse(meta);
  CHECK(m.contains("runtime_seconds"));
  CHECK(m["seed"] == 1);
}

TEST_CASE("verify passes on a small grid and catches a corrupted formula") {
  ExperimentConfig c;
  c.verify.oracle_instances = 200;
  c.verify.mc_pairs = 2;
  c.verify.mc_required = 2;
  c.oracle.mc_samples = 20000;
  const VerifyReport good = run_verify(c);
  CHECK(good.oracle_pass);
  CHECK(good.oracle_max_deviation < 1e-6);
  CHECK(good.mc_pass);

  VerifyReport bad;
  verify_oracle(c, bad, corrupted_response);
  CHECK_FALSE(bad.oracle_pass);
  CHECK(bad.oracle_failures > 0);
}

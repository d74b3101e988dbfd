// subprice: optimize and evaluate buy/subscription price menus.
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subprice/experiments.hpp"

using namespace subprice;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kVerify = 3, kNonConvergence = 4 };

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::string regimes;
  std::optional<unsigned> threads;
};

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

double parse_number(const std::string& s, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(std::string(what) + ": '" + s + "' is not a number");
  }
}

ExperimentConfig build_config(const Common& c) {
  ExperimentConfig cfg = c.config_path.empty() ? ExperimentConfig{} : load_config(c.config_path);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out_dir = *c.out;
  if (c.threads) cfg.threads = *c.threads;
  if (!c.regimes.empty()) {
    cfg.regimes.clear();
    for (const auto& name : split(c.regimes)) {
      try {
        cfg.regimes.push_back(regime_from_string(name));
      } catch (const std::invalid_argument&) {
        throw ConfigError("--regimes: unknown regime '" + name + "'");
      }
    }
  }
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "JSON config file (all keys optional)");
  app->add_option("--seed", c.seed, "Random seed");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--regimes", c.regimes, "Comma list of BuyOnly,SubOnly,Both,BothGivenBuy");
  app->add_option("--threads", c.threads, "Worker threads (results do not depend on it)");
}

void print_rows(const RunOutput& run) {
  for (const auto& r : run.rows) {
    std::printf("%-13s revenue %9.4f  user welfare %9.4f  overall %9.4f  relative %.4f\n",
                std::string(to_string(r.regime)).c_str(), r.revenue, r.user_welfare,
                r.overall_welfare, r.relative_revenue);
    std::printf("              prices p1_pre=%s p1_post=%s p2=%s p_s=%s\n",
                format_price(r.prices.base_pre).c_str(), format_price(r.prices.base_post).c_str(),
                format_price(r.prices.upgrade).c_str(), format_price(r.prices.subscription).c_str());
  }
  std::printf("%zu evaluations in %.1fs\n", run.evaluations, run.runtime_seconds);
}

PriceMenu parse_prices(const std::string& s) {
  const auto parts = split(s);
  if (parts.size() != 4) throw ConfigError("--prices needs four values: p1_pre,p1_post,p2,p_s");
  Price p[4];
  for (int i = 0; i < 4; ++i)
    if (parts[i] != "NA") p[i] = parse_number(parts[i], "--prices");
  PriceMenu menu{p[0], p[1], p[2], p[3]};
  try {
    menu.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("--prices: ") + e.what());
  }
  return menu;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Buy/subscription pricing engine"};
  app.require_subcommand(1);

  Common base_opts, sweep_opts, verify_opts, opt_opts, eval_opts;
  auto* base = app.add_subcommand("base-case", "Optimize every regime on the base population");
  add_common(base, base_opts);

  auto* sweep = app.add_subcommand("sweep", "Optimize every regime across one population parameter");
  add_common(sweep, sweep_opts);
  std::string param, values;
  sweep->add_option("--param", param, "x_delta, x_gamma, sigma, x_a or x_c");
  sweep->add_option("--values", values, "Comma list of parameter values");

  auto* verify = app.add_subcommand("verify", "Check closed forms against the MDP and Monte Carlo oracles");
  add_common(verify, verify_opts);
  std::optional<int> instances, pairs;
  verify->add_option("--instances", instances, "Random oracle instances");
  verify->add_option("--mc-pairs", pairs, "Random (population, menu) Monte Carlo pairs");

  auto* opt = app.add_subcommand("optimize", "Optimize the selected regimes");
  add_common(opt, opt_opts);

  auto* eval = app.add_subcommand("evaluate", "Expected revenue and welfare of one menu");
  add_common(eval, eval_opts);
  std::string prices;
  eval->add_option("--prices", prices, "p1_pre,p1_post,p2,p_s with NA for unavailable")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (base->parsed()) {
      const ExperimentConfig cfg = build_config(base_opts);
      const RunOutput run = run_base_case(cfg);
      print_rows(run);
      std::printf("wrote %s\n", write_run(run, cfg, "base_case").string().c_str());
    } else if (sweep->parsed()) {
      ExperimentConfig cfg = build_config(sweep_opts);
      if (!param.empty()) cfg.sweep_param = param;
      if (!values.empty()) {
        cfg.sweep_values.clear();
        for (const auto& v : split(values)) cfg.sweep_values.push_back(parse_number(v, "--values"));
      }
      cfg.validate();
      const RunOutput run = run_sweep(cfg);
      print_rows(run);
      std::printf("wrote %s\n", write_run(run, cfg, "sweep_" + cfg.sweep_param).string().c_str());
    } else if (verify->parsed()) {
      ExperimentConfig cfg = build_config(verify_opts);
      if (instances) cfg.verify.oracle_instances = *instances;
      if (pairs) {
        cfg.verify.mc_pairs = *pairs;
        cfg.verify.mc_required = std::min(cfg.verify.mc_required, *pairs);
      }
      cfg.validate();
      const VerifyReport r = run_verify(cfg);
      std::printf("oracle:      %d instances, %d failures, max relative deviation %.3g  %s\n",
                  r.oracle_instances, r.oracle_failures, r.oracle_max_deviation,
                  r.oracle_pass ? "PASS" : "FAIL");
      std::printf("monte carlo: %d/%d pairs within %.1f standard errors (worst %.2f)  %s\n",
                  r.mc_within, r.mc_pairs, cfg.verify.mc_band, r.mc_max_z,
                  r.mc_pass ? "PASS" : "FAIL");
      if (!r.pass()) return kVerify;
    } else if (opt->parsed()) {
      const ExperimentConfig cfg = build_config(opt_opts);
      const RunOutput run = run_base_case(cfg);
      print_rows(run);
      std::printf("wrote %s\n", write_run(run, cfg, "optimize").string().c_str());
    } else if (eval->parsed()) {
      const ExperimentConfig cfg = build_config(eval_opts);
      const PriceMenu menu = parse_prices(prices);
      IntegrationConfig ic = cfg.integration;
      ic.threads = cfg.threads;
      const MarketReport r = expected_revenue(cfg.population, menu, cfg.product, ic);
      nlohmann::json shares;
      for (StrategyClass c : kAllClasses)
        shares[std::string(to_string(c))] = r.class_share[static_cast<std::size_t>(index_of(c))];
      const nlohmann::json out = {{"revenue", r.revenue},
                                  {"user_welfare", r.user_welfare},
                                  {"overall_welfare", r.overall_welfare},
                                  {"class_share", shares}};
      std::cout << out.dump(2) << '\n';
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const NonConvergence& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kNonConvergence;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}

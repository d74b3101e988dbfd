#include "subprice/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>

#include "subprice/parallel.hpp"
#include "subprice/random.hpp"

namespace subprice {

using nlohmann::json;

namespace {

// Reads j[key] into out when present, reporting the full key path on failure.
template <typename T>
void read(const json& j, const char* key, T& out, const std::string& path) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + path + key + "' has the wrong type");
  }
}

void reject_unknown(const json& j, std::initializer_list<const char*> known,
                    const std::string& path) {
  if (!j.is_object()) throw ConfigError("config key '" + path + "' must be an object");
  for (const auto& [k, _] : j.items()) {
    bool ok = false;
    for (const char* name : known) ok = ok || k == name;
    if (!ok) throw ConfigError("unknown config key '" + path + k + "'");
  }
}

const char* method_name(VMethod m) { return m == VMethod::Envelope ? "envelope" : "simpson"; }

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

}  // namespace

void ExperimentConfig::validate() const {
  const auto wrap = [](const char* key, auto&& check) {
    try {
      check();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string(key) + ": " + e.what());
    }
  };
  wrap("product", [&] { product.validate(); });
  wrap("population", [&] { population.validate(); });
  wrap("integration", [&] { integration.validate(); });
  wrap("de", [&] { de.validate(); });
  if (regimes.empty()) throw ConfigError("regimes: at least one regime is required");
  if (!sweep_param.empty()) {
    Population probe = population;
    try {
      set_population_param(probe, sweep_param, population.x_delta);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("sweep.param: ") + e.what());
    }
    for (double v : sweep_values) {
      Population p = population;
      wrap("sweep.values", [&] {
        set_population_param(p, sweep_param, v);
        p.validate();
      });
    }
  }
  const auto ordered = [](double lo, double hi) { return std::isfinite(lo) && std::isfinite(hi) && lo <= hi; };
  if (!ordered(bounds.base_lo, bounds.base_hi) || !ordered(bounds.upgrade_lo, bounds.upgrade_hi) ||
      !ordered(bounds.sub_lo, bounds.sub_hi))
    throw ConfigError("bounds: must be finite and ordered");
  if (bounds.base_lo < 0.0 || bounds.upgrade_lo < 0.0 || bounds.sub_lo < 0.0)
    throw ConfigError("bounds: prices must be nonnegative");
  if (!(oracle.tail_tol > 0.0)) throw ConfigError("oracle.tail_tol must be positive");
  if (oracle.mc_samples < 2) throw ConfigError("oracle.mc_samples must be >= 2");
  if (verify.oracle_instances < 0 || verify.mc_pairs < 0)
    throw ConfigError("verify: counts must be nonnegative");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  reject_unknown(j,
                 {"product", "population", "regimes", "sweep", "integration", "de", "bounds",
                  "oracle", "verify", "seed", "threads", "out_dir"},
                 "");
  if (j.contains("product")) {
    const json& p = j["product"];
    reject_unknown(p, {"q1", "q2", "m", "n_max", "base_release"}, "product.");
    read(p, "q1", c.product.q1, "product.");
    read(p, "q2", c.product.q2, "product.");
    read(p, "m", c.product.m, "product.");
    read(p, "n_max", c.product.n_max, "product.");
    read(p, "base_release", c.product.base_release, "product.");
  }
  if (j.contains("population")) {
    const json& p = j["population"];
    reject_unknown(p, {"x_a", "x_gamma", "x_delta", "mu", "sigma", "v_max", "x_c"}, "population.");
    read(p, "x_a", c.population.x_a, "population.");
    read(p, "x_gamma", c.population.x_gamma, "population.");
    read(p, "x_delta", c.population.x_delta, "population.");
    read(p, "mu", c.population.mu, "population.");
    read(p, "sigma", c.population.sigma, "population.");
    read(p, "v_max", c.population.v_max, "population.");
    read(p, "x_c", c.population.x_c, "population.");
  }
  if (j.contains("regimes")) {
    std::vector<std::string> names;
    read(j, "regimes", names, "");
    c.regimes.clear();
    for (const auto& n : names) {
      try {
        c.regimes.push_back(regime_from_string(n));
      } catch (const std::invalid_argument&) {
        throw ConfigError("config key 'regimes': unknown regime '" + n + "'");
      }
    }
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    reject_unknown(s, {"param", "values"}, "sweep.");
    read(s, "param", c.sweep_param, "sweep.");
    read(s, "values", c.sweep_values, "sweep.");
  }
  if (j.contains("integration")) {
    const json& s = j["integration"];
    reject_unknown(s, {"method", "v_nodes", "refinement"}, "integration.");
    std::string method = method_name(c.integration.method);
    read(s, "method", method, "integration.");
    if (method == "envelope") {
      c.integration.method = VMethod::Envelope;
    } else if (method == "simpson") {
      c.integration.method = VMethod::Simpson;
    } else {
      throw ConfigError("config key 'integration.method' must be envelope or simpson");
    }
    read(s, "v_nodes", c.integration.v_nodes, "integration.");
    read(s, "refinement", c.integration.refinement, "integration.");
  }
  if (j.contains("de")) {
    const json& s = j["de"];
    reject_unknown(s,
                   {"population_per_dim", "F", "CR", "generations", "restarts",
                    "stagnation_generations", "stagnation_tol"},
                   "de.");
    read(s, "population_per_dim", c.de.population_per_dim, "de.");
    read(s, "F", c.de.F, "de.");
    read(s, "CR", c.de.CR, "de.");
    read(s, "generations", c.de.generations, "de.");
    read(s, "restarts", c.de.restarts, "de.");
    read(s, "stagnation_generations", c.de.stagnation_generations, "de.");
    read(s, "stagnation_tol", c.de.stagnation_tol, "de.");
  }
  if (j.contains("bounds")) {
    const json& s = j["bounds"];
    reject_unknown(s, {"base", "upgrade", "subscription"}, "bounds.");
    const auto pair = [&](const char* key, double& lo, double& hi) {
      std::vector<double> v{lo, hi};
      read(s, key, v, "bounds.");
      if (v.size() != 2) throw ConfigError(std::string("config key 'bounds.") + key + "' needs [lo, hi]");
      lo = v[0];
      hi = v[1];
    };
    pair("base", c.bounds.base_lo, c.bounds.base_hi);
    pair("upgrade", c.bounds.upgrade_lo, c.bounds.upgrade_hi);
    pair("subscription", c.bounds.sub_lo, c.bounds.sub_hi);
  }
  if (j.contains("oracle")) {
    const json& s = j["oracle"];
    reject_unknown(s, {"horizon", "tail_tol", "mc_samples"}, "oracle.");
    read(s, "horizon", c.oracle.horizon, "oracle.");
    read(s, "tail_tol", c.oracle.tail_tol, "oracle.");
    read(s, "mc_samples", c.oracle.mc_samples, "oracle.");
  }
  if (j.contains("verify")) {
    const json& s = j["verify"];
    reject_unknown(s, {"oracle_instances", "mc_pairs", "mc_required", "oracle_tol", "mc_band"},
                   "verify.");
    read(s, "oracle_instances", c.verify.oracle_instances, "verify.");
    read(s, "mc_pairs", c.verify.mc_pairs, "verify.");
    read(s, "mc_required", c.verify.mc_required, "verify.");
    read(s, "oracle_tol", c.verify.oracle_tol, "verify.");
    read(s, "mc_band", c.verify.mc_band, "verify.");
  }
  read(j, "seed", c.seed, "");
  read(j, "threads", c.threads, "");
  read(j, "out_dir", c.out_dir, "");
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json regime_names = json::array();
  for (RegimeKind k : regimes) regime_names.push_back(std::string(to_string(k)));
  // Thread count and output directory do not change results, so they stay
  // out of the canonical form that feeds the hash.
  return {
      {"product",
       {{"q1", product.q1},
        {"q2", product.q2},
        {"m", product.m},
        {"n_max", product.n_max},
        {"base_release", product.base_release}}},
      {"population",
       {{"x_a", population.x_a},
        {"x_gamma", population.x_gamma},
        {"x_delta", population.x_delta},
        {"mu", population.mu},
        {"sigma", population.sigma},
        {"v_max", population.v_max},
        {"x_c", population.x_c}}},
      {"regimes", regime_names},
      {"sweep", {{"param", sweep_param}, {"values", sweep_values}}},
      {"integration",
       {{"method", method_name(integration.method)},
        {"v_nodes", integration.v_nodes},
        {"refinement", integration.refinement}}},
      {"de",
       {{"population_per_dim", de.population_per_dim},
        {"F", de.F},
        {"CR", de.CR},
        {"generations", de.generations},
        {"restarts", de.restarts},
        {"stagnation_generations", de.stagnation_generations},
        {"stagnation_tol", de.stagnation_tol}}},
      {"bounds",
       {{"base", {bounds.base_lo, bounds.base_hi}},
        {"upgrade", {bounds.upgrade_lo, bounds.upgrade_hi}},
        {"subscription", {bounds.sub_lo, bounds.sub_hi}}}},
      {"oracle",
       {{"horizon", oracle.horizon},
        {"tail_tol", oracle.tail_tol},
        {"mc_samples", oracle.mc_samples}}},
      {"verify",
       {{"oracle_instances", verify.oracle_instances},
        {"mc_pairs", verify.mc_pairs},
        {"mc_required", verify.mc_required},
        {"oracle_tol", verify.oracle_tol},
        {"mc_band", verify.mc_band}}},
      {"seed", seed},
  };
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return ExperimentConfig::from_json(j);
}

void set_population_param(Population& pop, const std::string& name, double value) {
  if (name == "x_delta") {
    pop.x_delta = value;
  } else if (name == "x_gamma") {
    pop.x_gamma = value;
  } else if (name == "sigma") {
    pop.sigma = value;
  } else if (name == "x_a") {
    pop.x_a = value;
  } else if (name == "x_c") {
    pop.x_c = value;
  } else {
    throw std::invalid_argument("unknown sweep parameter '" + name +
                                "' (expected x_delta, x_gamma, sigma, x_a or x_c)");
  }
}

std::vector<SweepRow> run_regimes(const ExperimentConfig& config, const std::string& param,
                                  double value) {
  Population pop = config.population;
  if (!param.empty() && param != "base") set_population_param(pop, param, value);
  const TypeDistribution dist = pop.cells(config.product);
  DEConfig de = config.de;
  de.seed = config.seed;
  const auto wanted = [&](RegimeKind k) {
    return std::find(config.regimes.begin(), config.regimes.end(), k) != config.regimes.end();
  };

  const OptResult buy =
      optimize(PricingRegime::buy_only(), dist, config.product, config.integration, de, config.bounds);
  std::vector<std::pair<RegimeKind, OptResult>> results;
  for (RegimeKind k :
       {RegimeKind::BuyOnly, RegimeKind::SubOnly, RegimeKind::Both, RegimeKind::BothGivenBuy}) {
    if (!wanted(k)) continue;
    if (k == RegimeKind::BuyOnly) {
      results.emplace_back(k, buy);
      continue;
    }
    const PricingRegime regime = k == RegimeKind::SubOnly ? PricingRegime::sub_only()
                                 : k == RegimeKind::Both  ? PricingRegime::both()
                                                          : PricingRegime::both_given_buy(buy.best);
    results.emplace_back(k, optimize(regime, dist, config.product, config.integration, de,
                                     config.bounds));
  }

  std::vector<SweepRow> rows;
  for (const auto& [k, r] : results) {
    SweepRow row;
    row.sweep_param = param;
    row.sweep_value = value;
    row.regime = k;
    row.revenue = r.report.revenue;
    row.user_welfare = r.report.user_welfare;
    row.overall_welfare = r.report.overall_welfare;
    row.prices = r.best;
    row.relative_revenue = k == RegimeKind::BuyOnly ? 1.0 : r.report.revenue / buy.report.revenue;
    row.evaluations = r.evaluations;
    rows.push_back(row);
  }
  return rows;
}

RunOutput run_base_case(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  RunOutput out;
  ExperimentConfig c = config;
  c.de.threads = config.threads;
  out.rows = run_regimes(c, "base", std::numeric_limits<double>::quiet_NaN());
  for (const auto& r : out.rows) out.evaluations += r.evaluations;
  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

RunOutput run_sweep(const ExperimentConfig& config) {
  config.validate();
  if (config.sweep_param.empty()) throw ConfigError("sweep.param is required for a sweep");
  if (config.sweep_values.empty()) throw ConfigError("sweep.values must not be empty");
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = config.sweep_values.size();
  // Points run side by side; each point's optimizer then stays single-threaded.
  ExperimentConfig c = config;
  c.de.threads = n > 1 ? 1 : config.threads;
  std::vector<std::vector<SweepRow>> per_point(n);
  parallel_for(n, config.threads, [&](std::size_t i) {
    per_point[i] = run_regimes(c, c.sweep_param, c.sweep_values[i]);
  });
  RunOutput out;
  for (auto& rows : per_point)
    for (auto& r : rows) {
      out.evaluations += r.evaluations;
      out.rows.push_back(std::move(r));
    }
  out.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

void write_csv(std::ostream& os, const std::vector<SweepRow>& rows, const ExperimentConfig& config) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config.hash()));
  os << "# subprice " << kVersion << " config_hash=" << hash << " seed=" << config.seed << '\n';
  os << "sweep_param,sweep_value,regime,revenue,user_welfare,overall_welfare,p1_pre,p1_post,p2,"
        "p_s,relative_revenue\n";
  for (const SweepRow& r : rows) {
    os << r.sweep_param << ',' << (std::isnan(r.sweep_value) ? "NA" : fmt("%.6g", r.sweep_value))
       << ',' << to_string(r.regime) << ',' << fmt("%.6f", r.revenue) << ','
       << fmt("%.6f", r.user_welfare) << ',' << fmt("%.6f", r.overall_welfare) << ','
       << format_price(r.prices.base_pre) << ',' << format_price(r.prices.base_post) << ','
       << format_price(r.prices.upgrade) << ',' << format_price(r.prices.subscription) << ','
       << fmt("%.6f", r.relative_revenue) << '\n';
  }
}

std::filesystem::path write_run(const RunOutput& run, const ExperimentConfig& config,
                                const std::string& stem) {
  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  const auto csv = dir / (stem + ".csv");
  {
    std::ofstream os(csv, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + csv.string());
    write_csv(os, run.rows, config);
  }
  json evals = json::array();
  for (const auto& r : run.rows)
    evals.push_back({{"regime", std::string(to_string(r.regime))},
                     {"sweep_value", std::isnan(r.sweep_value) ? json(nullptr) : json(r.sweep_value)},
                     {"evaluations", r.evaluations}});
  const json meta = {{"version", kVersion},
                     {"seed", config.seed},
                     {"config", config.to_json()},
                     {"threads", config.threads},
                     {"runtime_seconds", run.runtime_seconds},
                     {"evaluations", run.evaluations},
                     {"rows", evals}};
  std::ofstream ms(dir / (stem + ".meta.json"));
  ms << meta.dump(2) << '\n';
  return csv;
}

UserType random_type(std::mt19937_64& rng, const ProductConfig& cfg) {
  UserType t;
  t.arrival = uniform_int(rng, 1, cfg.n_max);
  t.engagement = uniform(rng, 0.2, 0.95);
  t.decay = uniform(rng, 0.8, 0.97);
  t.value = uniform(rng, 0.0, 50.0);
  return t;
}

PriceMenu random_menu(std::mt19937_64& rng) {
  const auto draw = [&](double hi) -> Price {
    const double x = uniform(rng, 0.0, hi);
    return uniform01(rng) < 0.8 ? Price(x) : std::nullopt;
  };
  PriceMenu p;
  p.base_pre = draw(120.0);
  p.base_post = draw(80.0);
  p.upgrade = draw(60.0);
  p.subscription = draw(30.0);
  return p;
}

Population random_population(std::mt19937_64& rng) {
  Population pop;
  pop.x_a = uniform(rng, 1.0, 10.0);
  pop.x_gamma = uniform(rng, 0.0, 1.0);
  pop.x_delta = uniform(rng, 0.2, 0.85);
  pop.sigma = uniform(rng, 5.0, 20.0);
  pop.x_c = uniform(rng, 0.0, 1.0);
  return pop;
}

void verify_oracle(const ExperimentConfig& config, VerifyReport& report,
                   const ResponseFn& response) {
  const int n = config.verify.oracle_instances;
  std::vector<double> dev(static_cast<std::size_t>(n));
  parallel_for(dev.size(), config.threads, [&](std::size_t i) {
    auto rng = stream_rng(config.seed, i);
    const UserType t = random_type(rng, config.product);
    const PriceMenu p = random_menu(rng);
    const double analytic = response(t, p, config.product).utility;
    const double exact = mdp_best_utility(t, p, config.product, config.oracle).utility;
    dev[i] = std::abs(analytic - exact) / std::max(1.0, std::abs(exact));
    if (!std::isfinite(dev[i])) dev[i] = std::numeric_limits<double>::infinity();
  });
  report.oracle_instances = n;
  report.oracle_failures = 0;
  report.oracle_max_deviation = 0.0;
  for (double d : dev) {
    report.oracle_max_deviation = std::max(report.oracle_max_deviation, d);
    if (!(d <= config.verify.oracle_tol)) ++report.oracle_failures;
  }
  report.oracle_pass = report.oracle_failures == 0;
}

void verify_monte_carlo(const ExperimentConfig& config, VerifyReport& report) {
  const int n = config.verify.mc_pairs;
  report.mc_pairs = n;
  report.mc_within = 0;
  report.mc_max_z = 0.0;
  for (int i = 0; i < n; ++i) {
    // Separate stream family from the oracle instances.
    auto rng = stream_rng(splitmix64(config.seed) + 1, static_cast<std::uint64_t>(i));
    const Population pop = random_population(rng);
    const PriceMenu p = random_menu(rng);
    const TypeDistribution dist = pop.cells(config.product);
    IntegrationConfig ic = config.integration;
    ic.threads = config.threads;
    const double analytic = expected_revenue(dist, p, config.product, ic).revenue;
    OracleConfig oc = config.oracle;
    oc.seed = rng();
    oc.threads = config.threads;
    const PopulationSimulation sim = simulate_population(dist, p, config.product, oc);
    const double diff = std::abs(analytic - sim.mean_revenue);
    const double z = sim.revenue_std_error > 0.0 ? diff / sim.revenue_std_error
                                                 : (diff > 1e-9 ? 1e300 : 0.0);
    report.mc_max_z = std::max(report.mc_max_z, z);
    if (z <= config.verify.mc_band) ++report.mc_within;
  }
  report.mc_pass = report.mc_within >= std::min(config.verify.mc_required, n);
}

VerifyReport run_verify(const ExperimentConfig& config, const ResponseFn& response) {
  config.validate();
  VerifyReport report;
  verify_oracle(config, report, response);
  verify_monte_carlo(config, report);
  return report;
}

}  // namespace subprice

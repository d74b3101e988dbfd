#include "subprice/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "subprice/parallel.hpp"
#include "subprice/random.hpp"

namespace subprice {

int oracle_horizon(const UserType& t, const ProductConfig& cfg, const OracleConfig& oc) {
  const int start = std::max(t.arrival, cfg.m);
  if (oc.horizon > 0) {
    if (oc.horizon < cfg.m + 1) throw std::invalid_argument("oracle horizon must be >= m + 1");
    return std::max(oc.horizon, start + 1);
  }
  // Reward after H is at most v (q1 + q2) (gamma delta)^(H + 1 - start) / (1 - gamma delta).
  const double x = t.decay * t.engagement;
  const double scale = std::max(oc.value_bound, t.value) * (cfg.q1 + cfg.q2) / (1.0 - x);
  int h = start + 1;
  double tail = scale * std::pow(x, h + 1 - start);
  while (!(tail < oc.tail_tol)) {
    ++h;
    tail *= x;
  }
  return h;
}

namespace {

struct StateValue {
  double utility = 0.0;
  double reward = 0.0;
  double payment = 0.0;
};

// Ownership index: 0 = nothing, 1 = base, 2 = base + upgrade.
constexpr Ownership kOwnership[3] = {{false, false}, {true, false}, {true, true}};

int ownership_index(Ownership o) { return o.upgrade ? 2 : (o.base ? 1 : 0); }

}  // namespace

MdpValue mdp_best_utility(const UserType& t, const PriceMenu& p, const ProductConfig& cfg,
                          const OracleConfig& oc) {
  t.validate(cfg);
  p.validate();
  const int horizon = oracle_horizon(t, cfg, oc);
  const double delta = t.engagement;

  // next[d][o] holds the value of entering timestep n + 1 in that state.
  StateValue next[2][3] = {};
  StateValue cur[2][3];

  for (int n = horizon; n >= t.arrival; --n) {
    for (int d = 0; d < 2; ++d) {
      for (int oi = 0; oi < 3; ++oi) {
        const Ownership owned = kOwnership[oi];
        StateValue best{-std::numeric_limits<double>::infinity(), 0.0, 0.0};
        if (owned.upgrade && n < cfg.m) {
          cur[d][oi] = best;
          continue;
        }
        const UserState state{d == 1, owned};
        for (int a = 0; a < 8; ++a) {
          const Action act{(a & 1) != 0, (a & 2) != 0, (a & 4) != 0};
          if (act.subscribe && !p.subscription) continue;
          if (act.buy_base && (owned.base || !p.base_at(n, cfg))) continue;
          if (act.buy_upgrade &&
              (owned.upgrade || n < cfg.m || !p.upgrade || !(owned.base || act.buy_base)))
            continue;
          const Ownership after = componentwise_max(owned, {act.buy_base, act.buy_upgrade});
          const int ai = ownership_index(after);
          const Ownership access = access_after(act, state, n, cfg);
          const double r = immediate_reward(act, t, state, n, cfg);
          const double pay = immediate_payment(act, p, n, cfg);
          const bool uses = d == 1 && (access.base || access.upgrade);
          StateValue cont;
          if (uses) {
            const StateValue& keep = next[1][ai];
            const StateValue& lose = next[0][ai];
            cont = {delta * keep.utility + (1 - delta) * lose.utility,
                    delta * keep.reward + (1 - delta) * lose.reward,
                    delta * keep.payment + (1 - delta) * lose.payment};
          } else {
            cont = next[d][ai];
          }
          const double u = t.value * r - pay + cont.utility;
          if (u > best.utility) best = {u, r + cont.reward, pay + cont.payment};
        }
        cur[d][oi] = best;
      }
    }
    // A lapsed user regains demand with probability delta when the upgrade releases.
    if (n == cfg.m && t.arrival < cfg.m) {
      for (int oi = 0; oi < 3; ++oi) {
        const StateValue& on = cur[1][oi];
        StateValue& off = cur[0][oi];
        off = {delta * on.utility + (1 - delta) * off.utility,
               delta * on.reward + (1 - delta) * off.reward,
               delta * on.payment + (1 - delta) * off.payment};
      }
    }
    std::copy(&cur[0][0], &cur[0][0] + 6, &next[0][0]);
  }
  const StateValue& v = next[1][0];
  return {v.utility, v.reward, v.payment};
}

Action strategy_action(const StrategyEval& plan, const UserType& t, const UserState& s, int n,
                       const ProductConfig& cfg) {
  Action a;
  const int start = std::max(t.arrival, cfg.m);
  const bool buys_first = plan.cls == StrategyClass::BuyBuy || plan.cls == StrategyClass::BuySub;
  if (!s.demand) return a;
  if (n < cfg.m) {
    if (buys_first) {
      a.buy_base = n == t.arrival;
    } else {
      a.subscribe = n < plan.n1;
    }
    return a;
  }
  switch (plan.cls) {
    case StrategyClass::BuyBuy:
    case StrategyClass::SubBuy:
      if (n == start) {
        a.buy_base = !s.owned.base;
        a.buy_upgrade = true;
      }
      break;
    case StrategyClass::BuySub:
      a.buy_base = n == start && !s.owned.base;
      a.subscribe = n < plan.n2;
      break;
    case StrategyClass::SubSub:
      a.subscribe = n < plan.n2;
      break;
    case StrategyClass::SubBuyBase:
      a.subscribe = n < plan.n3;
      a.buy_base = n == plan.n3;
      break;
  }
  return a;
}

SimTrace simulate_user(const StrategyEval& plan, const UserType& t, const PriceMenu& p,
                       const ProductConfig& cfg, std::mt19937_64& rng, bool record_steps) {
  SimTrace trace;
  UserState s{true, {}};
  const int start = std::max(t.arrival, cfg.m);
  const int last = threshold_cap(start, t.engagement) + 1;
  for (int n = t.arrival; n <= last; ++n) {
    if (n == cfg.m && t.arrival < cfg.m && !s.demand) s.demand = uniform01(rng) < t.engagement;
    if (!s.demand) {
      if (n >= cfg.m) break;
      n = cfg.m - 1;  // nothing happens until the release
      continue;
    }
    const Action a = strategy_action(plan, t, s, n, cfg);
    const double r = immediate_reward(a, t, s, n, cfg);
    const double pay = immediate_payment(a, p, n, cfg);
    if (record_steps) trace.steps.push_back({n, s, a, r, pay});
    trace.total_reward += r;
    trace.total_payment += pay;
    const Ownership access = access_after(a, s, n, cfg);
    s.owned = componentwise_max(s.owned, {a.buy_base, a.buy_upgrade});
    if (access.base || access.upgrade) s.demand = uniform01(rng) < t.engagement;
  }
  return trace;
}

PopulationSimulation simulate_population(const TypeDistribution& dist, const PriceMenu& p,
                                         const ProductConfig& cfg, const OracleConfig& oc) {
  if (oc.mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
  const std::size_t n = oc.mc_samples;
  std::vector<double> pay(n), util(n);
  std::vector<int> cls(n);
  parallel_for(n, oc.threads, [&](std::size_t i) {
    auto rng = stream_rng(oc.seed, i);
    const UserType t = sample_type(dist, rng);
    const StrategyEval plan = best_response(t, p, cfg);
    const SimTrace tr = simulate_user(plan, t, p, cfg, rng, false);
    pay[i] = tr.total_payment;
    util[i] = t.value * tr.total_reward - tr.total_payment;
    cls[i] = index_of(plan.cls);
  });

  PopulationSimulation out;
  out.samples = n;
  const auto mean_and_se = [n](const std::vector<double>& xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
    return std::pair{mean, std::sqrt(var / static_cast<double>(n))};
  };
  std::tie(out.mean_revenue, out.revenue_std_error) = mean_and_se(pay);
  std::tie(out.mean_utility, out.utility_std_error) = mean_and_se(util);
  for (int c : cls) out.class_share[static_cast<std::size_t>(c)] += 1.0 / static_cast<double>(n);
  return out;
}

PopulationSimulation simulate_population(const Population& pop, const PriceMenu& p,
                                         const ProductConfig& cfg, const OracleConfig& oc) {
  return simulate_population(pop.cells(cfg), p, cfg, oc);
}

}  // namespace subprice

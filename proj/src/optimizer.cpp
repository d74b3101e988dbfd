#include "subprice/optimizer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "subprice/parallel.hpp"
#include "subprice/random.hpp"

namespace subprice {

void DEConfig::validate() const {
  if (population_per_dim < 1) throw std::invalid_argument("population_per_dim must be >= 1");
  if (!(F > 0.0 && F <= 2.0)) throw std::invalid_argument("F must be in (0, 2]");
  if (!(CR >= 0.0 && CR <= 1.0)) throw std::invalid_argument("CR must be in [0, 1]");
  if (generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  if (stagnation_generations < 1) throw std::invalid_argument("stagnation_generations must be >= 1");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Evaluator {
  const Objective& f;
  unsigned threads;
  std::size_t evaluations = 0;
  std::size_t discarded = 0;

  void operator()(const Eigen::MatrixXd& xs, Eigen::VectorXd& out) {
    const auto n = static_cast<std::size_t>(xs.cols());
    out.resize(xs.cols());
    parallel_for(n, threads, [&](std::size_t i) {
      out(static_cast<Eigen::Index>(i)) = f(xs.col(static_cast<Eigen::Index>(i)));
    });
    evaluations += n;
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      if (!std::isfinite(out(i))) {
        out(i) = kNegInf;
        ++discarded;
      }
    }
  }
};

}  // namespace

DEResult differential_evolution(const Objective& f, const Eigen::VectorXd& lo,
                                const Eigen::VectorXd& hi, const DEConfig& de) {
  de.validate();
  const Eigen::Index dim = lo.size();
  if (dim < 1 || hi.size() != dim) throw std::invalid_argument("DE: bad bounds dimension");
  for (Eigen::Index j = 0; j < dim; ++j)
    if (!std::isfinite(lo(j)) || !std::isfinite(hi(j)) || lo(j) > hi(j))
      throw std::invalid_argument("DE: bounds must be finite and ordered");

  const Eigen::Index np = std::max<Eigen::Index>(4, de.population_per_dim * dim);
  Evaluator eval{f, std::max(1u, de.threads)};
  DEResult result;
  result.value = kNegInf;

  for (int r = 0; r < de.restarts; ++r) {
    auto rng = stream_rng(de.seed, static_cast<std::uint64_t>(r));
    Eigen::MatrixXd pop(dim, np);
    for (Eigen::Index i = 0; i < np; ++i)
      for (Eigen::Index j = 0; j < dim; ++j) pop(j, i) = uniform(rng, lo(j), hi(j));
    Eigen::VectorXd fit;
    eval(pop, fit);

    Eigen::Index best_i = 0;
    fit.maxCoeff(&best_i);
    double best = fit(best_i);
    int stale = 0;
    Eigen::MatrixXd trials(dim, np);
    Eigen::VectorXd trial_fit;

    for (int g = 0; g < de.generations && stale < de.stagnation_generations; ++g) {
      for (Eigen::Index i = 0; i < np; ++i) {
        Eigen::Index a, b, c;
        do a = uniform_int(rng, 0, static_cast<int>(np - 1)); while (a == i);
        do b = uniform_int(rng, 0, static_cast<int>(np - 1)); while (b == i || b == a);
        do c = uniform_int(rng, 0, static_cast<int>(np - 1)); while (c == i || c == a || c == b);
        const auto jrand = static_cast<Eigen::Index>(uniform_int(rng, 0, static_cast<int>(dim - 1)));
        for (Eigen::Index j = 0; j < dim; ++j) {
          double x = pop(j, i);
          if (j == jrand || uniform01(rng) < de.CR) {
            x = pop(j, a) + de.F * (pop(j, b) - pop(j, c));
            // Out of bounds: move halfway from the target to the violated bound.
            if (x < lo(j)) x = 0.5 * (pop(j, i) + lo(j));
            if (x > hi(j)) x = 0.5 * (pop(j, i) + hi(j));
          }
          trials(j, i) = x;
        }
      }
      eval(trials, trial_fit);
      for (Eigen::Index i = 0; i < np; ++i) {
        if (trial_fit(i) >= fit(i)) {
          pop.col(i) = trials.col(i);
          fit(i) = trial_fit(i);
        }
      }
      // Greedy selection never lowers the population's best value.
      const double gbest = fit.maxCoeff(&best_i);
      const double scale = std::isfinite(best) ? std::max(std::abs(best), 1e-12) : 1.0;
      if (!std::isfinite(best) || gbest - best > de.stagnation_tol * scale) {
        stale = 0;
      } else {
        ++stale;
      }
      best = gbest;
    }
    result.restart_best.push_back(best);
    if (best > result.value) {
      result.value = best;
      result.argmax = pop.col(best_i);
    }
  }
  result.evaluations = eval.evaluations;
  result.discarded = eval.discarded;
  if (result.discarded > 0)
    std::fprintf(stderr, "warning: %zu candidate(s) with a non-finite objective were discarded\n",
                 result.discarded);
  if (result.argmax.size() == 0) throw std::runtime_error("DE: no finite objective value found");
  return result;
}

std::string_view to_string(RegimeKind k) {
  switch (k) {
    case RegimeKind::BuyOnly: return "BuyOnly";
    case RegimeKind::SubOnly: return "SubOnly";
    case RegimeKind::Both: return "Both";
    case RegimeKind::BothGivenBuy: return "BothGivenBuy";
  }
  return "?";
}

RegimeKind regime_from_string(std::string_view s) {
  for (RegimeKind k :
       {RegimeKind::BuyOnly, RegimeKind::SubOnly, RegimeKind::Both, RegimeKind::BothGivenBuy})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown regime");
}

int PricingRegime::dim() const {
  switch (kind) {
    case RegimeKind::BuyOnly: return 3;
    case RegimeKind::SubOnly: return 1;
    case RegimeKind::Both: return 4;
    case RegimeKind::BothGivenBuy: return 1;
  }
  return 0;
}

void PricingRegime::bounds(const PriceBounds& b, Eigen::VectorXd& lo, Eigen::VectorXd& hi) const {
  const Eigen::Vector4d all_lo(b.base_lo, b.base_lo, b.upgrade_lo, b.sub_lo);
  const Eigen::Vector4d all_hi(b.base_hi, b.base_hi, b.upgrade_hi, b.sub_hi);
  switch (kind) {
    case RegimeKind::BuyOnly:
      lo = all_lo.head<3>();
      hi = all_hi.head<3>();
      break;
    case RegimeKind::Both:
      lo = all_lo;
      hi = all_hi;
      break;
    case RegimeKind::SubOnly:
    case RegimeKind::BothGivenBuy:
      lo = all_lo.tail<1>();
      hi = all_hi.tail<1>();
      break;
  }
}

PriceMenu PricingRegime::menu(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("price vector has the wrong dimension");
  switch (kind) {
    case RegimeKind::BuyOnly: return {x(0), x(1), x(2), std::nullopt};
    case RegimeKind::SubOnly: return {std::nullopt, std::nullopt, std::nullopt, x(0)};
    case RegimeKind::Both: return {x(0), x(1), x(2), x(3)};
    case RegimeKind::BothGivenBuy: return {frozen.base_pre, frozen.base_post, frozen.upgrade, x(0)};
  }
  return {};
}

OptResult optimize(const PricingRegime& regime, const TypeDistribution& dist,
                   const ProductConfig& cfg, const IntegrationConfig& ic, const DEConfig& de,
                   const PriceBounds& bounds) {
  Eigen::VectorXd lo, hi;
  regime.bounds(bounds, lo, hi);
  IntegrationConfig inner = ic;
  if (de.threads > 1) inner.threads = 1;
  const Objective f = [&](const Eigen::VectorXd& x) {
    return expected_revenue(dist, regime.menu(x), cfg, inner).revenue;
  };
  const DEResult r = differential_evolution(f, lo, hi, de);

  OptResult out;
  out.best = regime.menu(r.argmax);
  out.restart_best = r.restart_best;
  out.evaluations = r.evaluations;
  out.report = expected_revenue(dist, out.best, cfg, ic);
  if (regime.kind == RegimeKind::BothGivenBuy) {
    const PriceMenu buy_only{regime.frozen.base_pre, regime.frozen.base_post, regime.frozen.upgrade,
                             std::nullopt};
    MarketReport without = expected_revenue(dist, buy_only, cfg, ic);
    ++out.evaluations;
    if (without.revenue > out.report.revenue) {
      out.best = buy_only;
      out.report = std::move(without);
      out.subscription_disabled = true;
    }
  }
  return out;
}

OptResult optimize(const PricingRegime& regime, const Population& pop, const ProductConfig& cfg,
                   const IntegrationConfig& ic, const DEConfig& de, const PriceBounds& bounds) {
  return optimize(regime, pop.cells(cfg), cfg, ic, de, bounds);
}

}  // namespace subprice

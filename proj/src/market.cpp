#include "subprice/market.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <type_traits>

#include "subprice/parallel.hpp"

namespace subprice {

void IntegrationConfig::validate() const {
  if (v_nodes < 3 || v_nodes % 2 == 0) throw std::invalid_argument("v_nodes must be odd and >= 3");
  if (!(refinement > 0.0)) throw std::invalid_argument("refinement must be positive");
}

namespace {

struct CellTotals {
  double revenue = 0.0;
  double welfare = 0.0;
  std::array<double, 5> share{};  // probability mass within the cell
};

struct Line {
  double w = 0.0;
  double rho = 0.0;
  int cls = 0;
  double at(double v) const { return v * w - rho; }
};

Line line_of(const StrategyEval& e) { return {e.reward, e.payment, index_of(e.cls)}; }

bool same_line(const Line& a, const Line& b) {
  const double tw = 1e-13 * std::max({1.0, std::abs(a.w), std::abs(b.w)});
  const double tr = 1e-11 * std::max({1.0, std::abs(a.rho), std::abs(b.rho)});
  return std::abs(a.w - b.w) <= tw && std::abs(a.rho - b.rho) <= tr;
}

class EnvelopeIntegrator {
 public:
  EnvelopeIntegrator(const TypeCell& cell, const TruncatedNormal& law, const PriceMenu& p,
                     const ProductConfig& cfg)
      : type_{cell.arrival, cell.engagement, cell.decay, 0.0}, law_(law), p_(p), cfg_(cfg) {}

  CellTotals run() {
    const double lo = law_.lo(), hi = law_.hi();
    segment(lo, at(lo), hi, at(hi), 0);
    return totals_;
  }

 private:
  Line at(double v) {
    type_.value = v;
    return line_of(best_response(type_, p_, cfg_));
  }

  void piece(double a, double b, const Line& l) {
    const double mass = law_.mass(a, b);
    if (mass <= 0.0) return;
    const double m1 = law_.first_moment(a, b);
    totals_.revenue += l.rho * mass;
    totals_.welfare += l.w * m1 - l.rho * mass;
    totals_.share[static_cast<std::size_t>(l.cls)] += mass;
  }

  // The best-response utility is the upper envelope of lines, hence convex.
  // Two endpoint lines that coincide therefore cover the whole segment.
  void segment(double a, const Line& la, double b, const Line& lb, int depth) {
    if (same_line(la, lb)) {
      piece(a, b, la);
      return;
    }
    double split = 0.5 * (a + b);
    bool crossing = false;
    const double dw = lb.w - la.w;
    if (dw > 0.0) {
      const double v = (lb.rho - la.rho) / dw;
      if (v > a && v < b) {
        split = v;
        crossing = true;
      }
    }
    if (depth > 80 || b - a <= 1e-12 * std::max(1.0, std::abs(b))) {
      piece(a, split, la);
      piece(split, b, lb);
      return;
    }
    const Line ls = at(split);
    // Nothing rises above the two end lines where they cross: single breakpoint.
    const double top = la.at(split);
    if (crossing && ls.at(split) <= top + 1e-12 * std::max(1.0, std::abs(top))) {
      piece(a, split, la);
      piece(split, b, lb);
      return;
    }
    segment(a, la, split, ls, depth + 1);
    segment(split, ls, b, lb, depth + 1);
  }

  UserType type_;
  const TruncatedNormal& law_;
  const PriceMenu& p_;
  const ProductConfig& cfg_;
  CellTotals totals_;
};

struct SimpsonSums {
  CellTotals coarse, fine;
};

// Integrates on the fine grid (2 v_nodes - 1 nodes) and on its every-other
// node subgrid in one pass.
SimpsonSums simpson_cell(const TypeCell& cell, const TruncatedNormal& law, const PriceMenu& p,
                         const ProductConfig& cfg, int v_nodes) {
  const int fine_nodes = 2 * v_nodes - 1;
  const double lo = law.lo(), hi = law.hi();
  const double h = (hi - lo) / (fine_nodes - 1);
  UserType t{cell.arrival, cell.engagement, cell.decay, 0.0};
  SimpsonSums out;
  for (int j = 0; j < fine_nodes; ++j) {
    t.value = lo + h * j;
    const StrategyEval e = best_response(t, p, cfg);
    const double f = law.pdf(t.value);
    const double rev = e.payment * f;
    const double wel = (t.value * e.reward - e.payment) * f;
    const auto cls = static_cast<std::size_t>(index_of(e.cls));

    const double wf = (j == 0 || j == fine_nodes - 1) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    out.fine.revenue += wf * rev;
    out.fine.welfare += wf * wel;
    out.fine.share[cls] += wf * f;
    if (j % 2 == 0) {
      const int k = j / 2;
      const double wc = (k == 0 || k == v_nodes - 1) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      out.coarse.revenue += wc * rev;
      out.coarse.welfare += wc * wel;
      out.coarse.share[cls] += wc * f;
    }
  }
  const auto scale = [](CellTotals& c, double s) {
    c.revenue *= s;
    c.welfare *= s;
    for (double& x : c.share) x *= s;
  };
  scale(out.fine, h / 3.0);
  scale(out.coarse, 2.0 * h / 3.0);
  return out;
}

CellTotals point_cell(const TypeCell& cell, double value, const PriceMenu& p,
                      const ProductConfig& cfg) {
  const UserType t{cell.arrival, cell.engagement, cell.decay, value};
  const StrategyEval e = best_response(t, p, cfg);
  CellTotals c;
  c.revenue = e.payment;
  c.welfare = e.utility;
  c.share[static_cast<std::size_t>(index_of(e.cls))] = 1.0;
  return c;
}

}  // namespace

MarketReport expected_revenue(const TypeDistribution& dist, const PriceMenu& p,
                              const ProductConfig& cfg, const IntegrationConfig& ic) {
  cfg.validate();
  p.validate();
  ic.validate();
  const std::size_t n = dist.size();
  std::vector<CellTotals> cells(n), check(n);
  parallel_for(n, ic.threads, [&](std::size_t i) {
    const TypeCell& cell = dist[i];
    std::visit(
        [&](const auto& law) {
          using L = std::decay_t<decltype(law)>;
          if constexpr (std::is_same_v<L, PointMass>) {
            cells[i] = check[i] = point_cell(cell, law.value, p, cfg);
          } else if (ic.method == VMethod::Envelope) {
            cells[i] = check[i] = EnvelopeIntegrator(cell, law, p, cfg).run();
          } else {
            const SimpsonSums s = simpson_cell(cell, law, p, cfg, ic.v_nodes);
            cells[i] = s.coarse;
            check[i] = s.fine;
          }
        },
        cell.value);
  });

  MarketReport r;
  r.arrival_class_share.assign(static_cast<std::size_t>(cfg.n_max), {});
  r.arrival_mass.assign(static_cast<std::size_t>(cfg.n_max), 0.0);
  double check_revenue = 0.0;
  double total_share = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wgt = dist[i].weight;
    r.revenue += wgt * cells[i].revenue;
    r.user_welfare += wgt * cells[i].welfare;
    check_revenue += wgt * check[i].revenue;
    const auto a = static_cast<std::size_t>(dist[i].arrival - 1);
    for (std::size_t c = 0; c < 5; ++c) {
      const double s = wgt * cells[i].share[c];
      r.class_share[c] += s;
      r.arrival_class_share.at(a)[c] += s;
      r.arrival_mass[a] += s;
      total_share += s;
    }
  }
  if (ic.method == VMethod::Simpson) {
    const double change = std::abs(check_revenue - r.revenue);
    if (change > ic.refinement * std::max(std::abs(r.revenue), 1e-12) && change > 1e-12) {
      char msg[160];
      std::snprintf(msg, sizeof msg,
                    "v-integration did not converge: revenue %.9g vs %.9g on the doubled grid",
                    r.revenue, check_revenue);
      throw NonConvergence(msg);
    }
  }
  // Quadrature leaves the shares a hair off 1; normalize them.
  if (total_share > 0.0)
    for (double& s : r.class_share) s /= total_share;
  for (std::size_t a = 0; a < r.arrival_mass.size(); ++a) {
    if (r.arrival_mass[a] <= 0.0) continue;
    for (double& s : r.arrival_class_share[a]) s /= r.arrival_mass[a];
  }
  r.overall_welfare = r.revenue + r.user_welfare;
  return r;
}

MarketReport expected_revenue(const Population& pop, const PriceMenu& p, const ProductConfig& cfg,
                              const IntegrationConfig& ic) {
  return expected_revenue(pop.cells(cfg), p, cfg, ic);
}

double max_post_release_payment(const TypeDistribution& dist, const PriceMenu& p_sub_only,
                                const ProductConfig& cfg) {
  if (!p_sub_only.subscription) return 0.0;
  double best = 0.0;
  for (const TypeCell& cell : dist) {
    const double v = std::visit(
        [](const auto& law) -> double {
          using L = std::decay_t<decltype(law)>;
          if constexpr (std::is_same_v<L, PointMass>) {
            return law.value;
          } else {
            return law.hi();
          }
        },
        cell.value);
    // A subscriber's post-release payment grows with v, so the top of the
    // support bounds the cell.
    const UserType t{std::max(cell.arrival, cfg.m), cell.engagement, cell.decay, v};
    const int n2 = threshold_n2({false, false}, t, p_sub_only, cfg);
    best = std::max(best, rho_sub(t.arrival, n2, t.engagement, *p_sub_only.subscription));
  }
  return best;
}

PriceMenu construct_sub_improvement(const TypeDistribution& dist, const PriceMenu& p_sub_only,
                                    const ProductConfig& cfg) {
  if (p_sub_only.base_pre || p_sub_only.base_post || p_sub_only.upgrade)
    throw std::invalid_argument("construct_sub_improvement: menu must offer only a subscription");
  const double rho_max = max_post_release_payment(dist, p_sub_only, cfg);
  if (!(rho_max > 0.0)) return p_sub_only;
  const double price = rho_max + 1e-6 * rho_max;
  return {price, price, 0.0, p_sub_only.subscription};
}

PriceMenu construct_sub_improvement(const Population& pop, const PriceMenu& p_sub_only,
                                    const ProductConfig& cfg) {
  return construct_sub_improvement(pop.cells(cfg), p_sub_only, cfg);
}

}  // namespace subprice

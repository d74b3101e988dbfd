#include "subprice/population.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "subprice/random.hpp"

namespace subprice {

namespace {

double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double big_phi(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace

TruncatedNormal::TruncatedNormal(double mean, double sd, double lo, double hi)
    : mean_(mean), sd_(sd), lo_(lo), hi_(hi) {
  if (!(sd > 0.0)) throw std::invalid_argument("truncated normal: sd must be positive");
  if (!(hi > lo)) throw std::invalid_argument("truncated normal: empty support");
  norm_ = std_cdf(hi) - std_cdf(lo);
  if (!(norm_ > 0.0)) throw std::invalid_argument("truncated normal: no mass on support");
  const double mode = std::clamp(mean, lo, hi);
  pdf_max_ = pdf(mode);
}

double TruncatedNormal::std_cdf(double v) const { return big_phi((v - mean_) / sd_); }

double TruncatedNormal::pdf(double v) const {
  if (v < lo_ || v > hi_) return 0.0;
  return phi((v - mean_) / sd_) / (sd_ * norm_);
}

double TruncatedNormal::mass(double a, double b) const {
  a = std::max(a, lo_);
  b = std::min(b, hi_);
  if (b <= a) return 0.0;
  // Use the upper tail when both ends sit above the mean to avoid cancellation.
  const double za = (a - mean_) / sd_;
  const double zb = (b - mean_) / sd_;
  const double diff = za > 0.0 ? big_phi(-za) - big_phi(-zb) : big_phi(zb) - big_phi(za);
  return diff / norm_;
}

double TruncatedNormal::first_moment(double a, double b) const {
  a = std::max(a, lo_);
  b = std::min(b, hi_);
  if (b <= a) return 0.0;
  const double za = (a - mean_) / sd_;
  const double zb = (b - mean_) / sd_;
  return mean_ * mass(a, b) + sd_ * (phi(za) - phi(zb)) / norm_;
}

double TruncatedNormal::sample(std::mt19937_64& rng) const {
  // Rejection from the uniform envelope on [lo, hi].
  for (;;) {
    const double v = uniform(rng, lo_, hi_);
    if (uniform01(rng) * pdf_max_ <= pdf(v)) return v;
  }
}

std::vector<double> arrival_pmf(double x_a, int n_max) {
  if (!(x_a > 0.0)) throw std::invalid_argument("x_a must be positive");
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  const double total = x_a + n_max - 1;
  std::vector<double> pmf(static_cast<std::size_t>(n_max), 1.0 / total);
  pmf[0] = x_a / total;
  return pmf;
}

void Population::validate() const {
  if (!(x_a > 0.0)) throw std::invalid_argument("x_a must be positive");
  if (!(x_gamma >= 0.0 && x_gamma <= 1.0)) throw std::invalid_argument("x_gamma must be in [0,1]");
  if (!(x_delta > 0.0 && x_delta < 1.0)) throw std::invalid_argument("x_delta must be in (0,1)");
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
  if (!(x_c >= 0.0 && x_c <= 1.0)) throw std::invalid_argument("x_c must be in [0,1]");
  if (!std::isfinite(mu)) throw std::invalid_argument("mu must be finite");
}

std::vector<Atom> Population::decay_pmf() const {
  return {{0.85, 0.5 * (1.0 - x_gamma)}, {0.9, x_gamma}, {0.95, 0.5 * (1.0 - x_gamma)}};
}

std::vector<Atom> Population::engagement_pmf() const { return {{x_delta, 0.8}, {0.9, 0.2}}; }

double Population::value_mean(double engagement) const {
  return mu * ((1.0 - x_c) + x_c * (1.0 - engagement));
}

TruncatedNormal Population::value_density(double engagement) const {
  return TruncatedNormal(value_mean(engagement), sigma, 0.0, v_max);
}

TypeDistribution Population::cells(const ProductConfig& cfg) const {
  validate();
  TypeDistribution out;
  const auto fa = arrival_pmf(x_a, cfg.n_max);
  for (const Atom& d : engagement_pmf()) {
    const TruncatedNormal law = value_density(d.value);
    for (const Atom& g : decay_pmf()) {
      if (g.prob <= 0.0) continue;
      for (int n = 1; n <= cfg.n_max; ++n) {
        out.push_back({n, d.value, g.value, fa[n - 1] * d.prob * g.prob, law});
      }
    }
  }
  return out;
}

UserType sample_type(const TypeDistribution& dist, std::mt19937_64& rng) {
  if (dist.empty()) throw std::invalid_argument("sample_type: empty distribution");
  double u = uniform01(rng);
  const TypeCell* cell = &dist.back();
  for (const TypeCell& c : dist) {
    if (u < c.weight) {
      cell = &c;
      break;
    }
    u -= c.weight;
  }
  UserType t{cell->arrival, cell->engagement, cell->decay, 0.0};
  t.value = std::visit(
      [&](const auto& law) -> double {
        using L = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<L, PointMass>) {
          return law.value;
        } else {
          return law.sample(rng);
        }
      },
      cell->value);
  return t;
}

}  // namespace subprice

#pragma once

#include <random>
#include <variant>
#include <vector>

#include "subprice/model.hpp"

namespace subprice {

/// Normal(mean, sd) restricted to [lo, hi] and renormalized.
class TruncatedNormal {
 public:
  TruncatedNormal(double mean, double sd, double lo, double hi);

  double mean_parameter() const { return mean_; }
  double sd() const { return sd_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double pdf(double v) const;
  /// Probability of [a, b] (clipped to the support).
  double mass(double a, double b) const;
  /// Integral of v * pdf(v) over [a, b] (clipped to the support).
  double first_moment(double a, double b) const;
  double sample(std::mt19937_64& rng) const;

 private:
  double std_cdf(double v) const;  // unnormalized Phi((v - mean) / sd)

  double mean_, sd_, lo_, hi_;
  double norm_;     // Phi(beta) - Phi(alpha)
  double pdf_max_;  // max of pdf on the support, for sampling
};

struct PointMass {
  double value = 0.0;
};

using ValueLaw = std::variant<TruncatedNormal, PointMass>;

/// One discrete (arrival, engagement, decay) combination with its weight and
/// the conditional law of the user's value.
struct TypeCell {
  int arrival = 1;
  double engagement = 0.5;
  double decay = 0.9;
  double weight = 0.0;
  ValueLaw value;
};

using TypeDistribution = std::vector<TypeCell>;

struct Atom {
  double value;
  double prob;
};

/// Arrival pmf over {1..n_max}: timestep 1 carries x_a times the mass of
/// every later timestep.
std::vector<double> arrival_pmf(double x_a, int n_max);

/// The parametric user population used throughout the experiments.
struct Population {
  double x_a = 5.0;      // arrival mass multiplier of timestep 1
  double x_gamma = 0.8;  // P(decay = 0.9); 0.85 and 0.95 share the rest
  double x_delta = 0.5;  // short-term engagement (P = 0.8); long-term is 0.9 (P = 0.2)
  double mu = 25.0;
  double sigma = 10.0;
  double v_max = 50.0;
  double x_c = 0.0;  // value-engagement dependence in [0, 1]

  void validate() const;

  std::vector<Atom> decay_pmf() const;
  std::vector<Atom> engagement_pmf() const;
  /// Mean parameter of the value law for users with this engagement.
  double value_mean(double engagement) const;
  TruncatedNormal value_density(double engagement) const;
  /// Product of the discrete marginals; cells with zero weight are dropped.
  TypeDistribution cells(const ProductConfig& cfg) const;
};

UserType sample_type(const TypeDistribution& dist, std::mt19937_64& rng);

}  // namespace subprice

#pragma once

#include "pooltrend/domain.hpp"

#include <span>
#include <vector>

namespace pooltrend {

// probability that a pool of m individuals tests positive at prevalence p
double pool_probability(double p, int m);

// prevalence implied by a pool positivity probability at pool size m
double invert_pool_probability(double pi, int m);

struct PrevalencePoint {
  double p = 0.0;
  double pi = 0.0;
  int m = 1;
};
PrevalencePoint make_prevalence_point(double p, int m);

// Per-time prevalence with both tails carried explicitly; q = 1 - p computed
// from the latent scale so neither tail loses precision.
struct PrevalenceCurve {
  std::vector<double> p;
  std::vector<double> q;

  static PrevalenceCurve from_p(std::span<const double> p);
  // p = phi(x), q = phi(-x) for latent x = W + mu
  static PrevalenceCurve from_latent(std::span<const double> x);
};

// Log-likelihoods of the sampling models. Boundary prevalence that conflicts
// with the data (p=0 with a positive pool, p=1 with a negative pool) yields
// -inf rather than an exception so samplers can treat it as a rejection.
//
// The general model is a Bernoulli product over pools; ideal and
// efficient-general are count models carrying explicit binomial coefficients,
// so they differ from the expanded general form by a constant that does not
// depend on prevalence.
double loglik_general(const PrevalenceCurve& prev, const PooledObservations& data);
double loglik_ideal(const PrevalenceCurve& prev, const PooledObservations& data);
double loglik_efficient_general(const PrevalenceCurve& prev, const PooledObservations& data);
double loglik_individual(const PrevalenceCurve& prev, const IndividualObservations& data);

double loglik_general(std::span<const double> p, const PooledObservations& data);
double loglik_ideal(std::span<const double> p, const PooledObservations& data);
double loglik_efficient_general(std::span<const double> p, const PooledObservations& data);
double loglik_individual(std::span<const double> p, const IndividualObservations& data);

// dispatch on the dataset's stored layout
double loglik(const PrevalenceCurve& prev, const Dataset& data);

}  // namespace pooltrend

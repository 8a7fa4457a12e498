#pragma once

#include "pooltrend/domain.hpp"
#include "pooltrend/gp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pooltrend {

struct SamplerConfig {
  int chains = 4;
  int warmup = 1000;
  int draws = 1000;
  std::uint64_t seed = 0;
  double target_accept = 0.3;
  double jitter_rel = 1e-8;  // diagonal jitter as a fraction of sigma^2
  int latent_updates = 1;    // elliptical slice sweeps per iteration
  int scalar_updates = 1;    // Metropolis sweeps on (mu, log sigma, log ell)
  bool sample_mu = true;
  bool sample_sigma = true;
  bool sample_ell = true;
  std::optional<double> init_mu;
  std::optional<GpHyperparams> init_theta;
  int threads = 0;  // 0 = hardware concurrency
};

struct ChainDraws {
  std::vector<double> mu, sigma, ell;
  Eigen::MatrixXd w;  // draws x N latent values at observation times
  Eigen::MatrixXd z;  // draws x N whitened coordinates (not serialized)
  double mh_accept_rate = 0.0;
  double ess_avg_proposals = 0.0;
};

struct PosteriorDraws {
  std::vector<ChainDraws> chains;
  std::vector<double> times;  // observation grid the latent values live on
  int warmup = 0;
  int draws_per_chain = 0;
  std::uint64_t seed = 0;

  int n_latent() const { return static_cast<int>(times.size()); }
  // draws pooled across chains, in chain order
  std::vector<double> flat_scalar(const std::string& name) const;
  std::vector<double> flat_latent(int coord) const;
};

// Joint log density of (mu, theta, z) under the hierarchy: parameter priors,
// standard-normal density of the whitened coordinates, and the data
// log-likelihood at p = phi(L(theta) z + mu).
double log_posterior(double mu, const GpHyperparams& theta, const Eigen::VectorXd& z,
                     const Dataset& data, const Priors& priors, double jitter = -1.0);

// Gibbs-style sampler: elliptical slice updates of the whitened latent field
// alternate with an adaptive random-walk Metropolis step on
// (mu, log sigma, log ell). Chains run independently (optionally in
// parallel) and the result is fully determined by (seed, config, data).
PosteriorDraws run_mcmc(const Dataset& data, const SamplerConfig& config, const Priors& priors);

}  // namespace pooltrend

#pragma once

#include "pooltrend/domain.hpp"
#include "pooltrend/rng.hpp"

#include <Eigen/Dense>

#include <optional>

namespace pooltrend {

// Exponentiated-quadratic kernel hyperparameters: amplitude sigma (latent
// scale) and lengthscale ell (days). Both strictly positive.
struct GpHyperparams {
  double sigma = 1.0;
  double ell = 1.0;
  bool valid() const { return sigma > 0.0 && ell > 0.0; }
};

// sigma^2 exp(-(t - t')^2 / (2 ell^2))
double covariance(double t, double t_prime, const GpHyperparams& theta);

// Dense covariance over a grid with jitter on the diagonal and a cached
// Cholesky factor.
class CovarianceMatrix {
 public:
  const Eigen::MatrixXd& dense() const { return c_; }
  const Eigen::MatrixXd& chol_lower() const { return l_; }
  double jitter() const { return jitter_; }
  Eigen::Index size() const { return c_.rows(); }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

 private:
  friend CovarianceMatrix build_covariance(const TimeGrid&, const GpHyperparams&, double);
  Eigen::MatrixXd c_;
  Eigen::MatrixXd l_;
  double jitter_ = 0.0;
};

// Builds the covariance matrix and factors it. A negative jitter requests the
// default 1e-8 * sigma^2. If factorization fails the jitter is doubled, up to
// 8 retries, before giving up with an error suggesting a larger value.
CovarianceMatrix build_covariance(const TimeGrid& grid, const GpHyperparams& theta,
                                  double jitter = -1.0);

// cross-covariance between two grids, no jitter
Eigen::MatrixXd covariance_cross(const TimeGrid& a, const TimeGrid& b,
                                 const GpHyperparams& theta);

// zero-mean draw W = L z with z standard normal
Eigen::VectorXd sample_prior(const TimeGrid& grid, const GpHyperparams& theta, Rng& rng,
                             double jitter = -1.0);

struct ConditionalGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Gaussian conditional of the GP at grid_new given W_obs on grid_obs. With no
// observations this degenerates to the prior (zero mean, full covariance).
ConditionalGaussian predict_conditional(const TimeGrid& grid_obs, const Eigen::VectorXd& w_obs,
                                        const TimeGrid& grid_new, const GpHyperparams& theta,
                                        double jitter = -1.0);

// draw from a ConditionalGaussian; adds a small diagonal ridge if needed
Eigen::VectorXd sample_gaussian(const ConditionalGaussian& cond, Rng& rng);

// Inverse-gamma prior on the lengthscale pinched between the shortest
// observation gap (low) and the total observation interval (high), with
// tail_prob mass below low and above high.
struct LengthscalePrior {
  double shape = 0.0;
  double rate = 0.0;
  double low = 0.0;
  double high = 0.0;
};

LengthscalePrior fit_lengthscale_prior(const TimeGrid& grid, double tail_prob = 0.01);

struct PriorConfig {
  double mu_sd = 2.0;
  double sigma_sd = 1.0;
  double ell_tail_prob = 0.01;
  std::optional<double> ell_shape;  // explicit override of the fit
  std::optional<double> ell_rate;
};

struct Priors {
  double mu_sd = 2.0;
  double sigma_sd = 1.0;
  double ell_shape = 2.0;
  double ell_rate = 2.0;
};

// Fills in the lengthscale prior from the grid unless explicitly overridden.
Priors resolve_priors(const PriorConfig& config, const TimeGrid& grid);

// Normal(mu | 0, mu_sd^2) + HalfNormal(sigma | sigma_sd) +
// InvGamma(ell | ell_shape, ell_rate); -inf outside the support.
double log_prior(double mu, const GpHyperparams& theta, const Priors& priors);

}  // namespace pooltrend

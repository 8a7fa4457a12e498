#include "pooltrend/gp.hpp"

#include "pooltrend/special.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace pooltrend {

double covariance(double t, double t_prime, const GpHyperparams& theta) {
  if (!theta.valid()) throw std::domain_error("covariance: hyperparameters must be positive");
  double d = (t - t_prime) / theta.ell;
  return theta.sigma * theta.sigma * std::exp(-0.5 * d * d);
}

Eigen::VectorXd CovarianceMatrix::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.triangularView<Eigen::Lower>().transpose().solve(y);
}

Eigen::MatrixXd CovarianceMatrix::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd y = l_.triangularView<Eigen::Lower>().solve(b);
  return l_.triangularView<Eigen::Lower>().transpose().solve(y);
}

CovarianceMatrix build_covariance(const TimeGrid& grid, const GpHyperparams& theta,
                                  double jitter) {
  if (!theta.valid())
    throw std::domain_error("build_covariance: hyperparameters must be positive");
  const auto n = static_cast<Eigen::Index>(grid.size());
  const double s2 = theta.sigma * theta.sigma;
  if (jitter < 0.0) jitter = 1e-8 * s2;

  Eigen::MatrixXd base(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    base(i, i) = s2;
    for (Eigen::Index j = 0; j < i; ++j) {
      double v = covariance(grid.times[i], grid.times[j], theta);
      base(i, j) = v;
      base(j, i) = v;
    }
  }

  double j = jitter;
  for (int attempt = 0; attempt <= 8; ++attempt) {
    CovarianceMatrix out;
    out.c_ = base;
    out.c_.diagonal().array() += j;
    Eigen::LLT<Eigen::MatrixXd> llt(out.c_);
    if (llt.info() == Eigen::Success) {
      out.l_ = llt.matrixL();
      out.jitter_ = j;
      return out;
    }
    j = (j == 0.0) ? 1e-8 * s2 : 2.0 * j;
  }
  std::ostringstream os;
  os << "build_covariance: Cholesky factorization failed after 8 jitter retries "
     << "(last jitter " << j << "); pass a larger jitter";
  throw std::runtime_error(os.str());
}

Eigen::MatrixXd covariance_cross(const TimeGrid& a, const TimeGrid& b,
                                 const GpHyperparams& theta) {
  Eigen::MatrixXd out(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          covariance(a.times[i], b.times[j], theta);
  return out;
}

Eigen::VectorXd sample_prior(const TimeGrid& grid, const GpHyperparams& theta, Rng& rng,
                             double jitter) {
  auto cov = build_covariance(grid, theta, jitter);
  Eigen::VectorXd z(cov.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return cov.chol_lower() * z;
}

ConditionalGaussian predict_conditional(const TimeGrid& grid_obs, const Eigen::VectorXd& w_obs,
                                        const TimeGrid& grid_new, const GpHyperparams& theta,
                                        double jitter) {
  if (static_cast<std::size_t>(w_obs.size()) != grid_obs.size())
    throw std::invalid_argument("predict_conditional: W length does not match grid_obs");
  ConditionalGaussian out;
  const auto n_new = static_cast<Eigen::Index>(grid_new.size());
  if (grid_obs.size() == 0) {
    out.mean = Eigen::VectorXd::Zero(n_new);
    out.cov = covariance_cross(grid_new, grid_new, theta);
    return out;
  }
  auto c_obs = build_covariance(grid_obs, theta, jitter);
  Eigen::MatrixXd cross = covariance_cross(grid_obs, grid_new, theta);
  Eigen::MatrixXd solved = c_obs.solve(cross);  // C^{-1} C_*
  out.mean = solved.transpose() * w_obs;
  out.cov = covariance_cross(grid_new, grid_new, theta) - cross.transpose() * solved;
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

Eigen::VectorXd sample_gaussian(const ConditionalGaussian& cond, Rng& rng) {
  const auto n = cond.mean.size();
  double scale = std::max(cond.cov.diagonal().maxCoeff(), 0.0);
  double ridge = (scale > 0.0 ? scale : 1.0) * 1e-12;
  for (int attempt = 0; attempt <= 8; ++attempt) {
    Eigen::MatrixXd c = cond.cov;
    c.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd z(n);
      for (Eigen::Index i = 0; i < n; ++i) z(i) = rng.normal();
      return cond.mean + Eigen::MatrixXd(llt.matrixL()) * z;
    }
    ridge *= 10.0;
  }
  throw std::runtime_error("sample_gaussian: covariance not positive definite");
}

LengthscalePrior fit_lengthscale_prior(const TimeGrid& grid, double tail_prob) {
  if (grid.size() < 2)
    throw std::invalid_argument("fit_lengthscale_prior: need at least 2 observation times");
  if (!(tail_prob > 0.0 && tail_prob < 0.5))
    throw std::invalid_argument("fit_lengthscale_prior: tail_prob must be in (0, 0.5)");

  double low = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    low = std::min(low, grid.times[i + 1] - grid.times[i]);
  double high = grid.interval_span;
  if (!(low > 0.0 && low < high))
    throw std::invalid_argument("fit_lengthscale_prior: need 0 < shortest gap < interval span");

  // With ell ~ InvGamma(a, b): P(ell < low) = Q(a, b/low) and
  // P(ell > high) = 1 - Q(a, b/high). Imposing both tail conditions pins
  //   b/low  = gamma_q_inv(a, tail)        (the large root z_lo)
  //   b/high = gamma_q_inv(a, 1 - tail)    (the small root z_hi)
  // so a must satisfy z_lo(a) / z_hi(a) = high / low; the ratio decreases
  // monotonically in a, giving a clean bisection target.
  const double target = std::log(high / low);
  auto gap = [&](double a) {
    return std::log(gamma_q_inv(a, tail_prob)) - std::log(gamma_q_inv(a, 1.0 - tail_prob)) -
           target;
  };

  double a_lo = 1e-3, a_hi = 1.0;
  while (gap(a_hi) > 0.0) {
    a_lo = a_hi;
    a_hi *= 2.0;
    if (a_hi > 1e6)
      throw std::runtime_error("fit_lengthscale_prior: failed to bracket shape (span ratio " +
                               std::to_string(high / low) + ", tail " +
                               std::to_string(tail_prob) + ")");
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (a_lo + a_hi);
    if (gap(mid) > 0.0)
      a_lo = mid;
    else
      a_hi = mid;
    if (a_hi - a_lo < 1e-13 * a_hi) break;
  }
  double shape = 0.5 * (a_lo + a_hi);
  double rate = std::sqrt(low * gamma_q_inv(shape, tail_prob) * high *
                          gamma_q_inv(shape, 1.0 - tail_prob));

  LengthscalePrior out{shape, rate, low, high};
  double at_low = invgamma_cdf(low, shape, rate);
  double above_high = 1.0 - invgamma_cdf(high, shape, rate);
  if (std::abs(at_low - tail_prob) > 1e-4 || std::abs(above_high - tail_prob) > 1e-4) {
    std::ostringstream os;
    os << "fit_lengthscale_prior: tail conditions not met (P(ell<low)=" << at_low
       << ", P(ell>high)=" << above_high << ", target " << tail_prob << ")";
    throw std::runtime_error(os.str());
  }
  return out;
}

Priors resolve_priors(const PriorConfig& config, const TimeGrid& grid) {
  Priors out;
  out.mu_sd = config.mu_sd;
  out.sigma_sd = config.sigma_sd;
  if (config.ell_shape && config.ell_rate) {
    out.ell_shape = *config.ell_shape;
    out.ell_rate = *config.ell_rate;
  } else if (config.ell_shape || config.ell_rate) {
    throw std::invalid_argument("resolve_priors: ell_shape and ell_rate must be set together");
  } else {
    auto fit = fit_lengthscale_prior(grid, config.ell_tail_prob);
    out.ell_shape = fit.shape;
    out.ell_rate = fit.rate;
  }
  return out;
}

double log_prior(double mu, const GpHyperparams& theta, const Priors& priors) {
  if (!(theta.sigma > 0.0) || !(theta.ell > 0.0))
    return -std::numeric_limits<double>::infinity();
  double lp = normal_logpdf(mu / priors.mu_sd) - std::log(priors.mu_sd);
  // half-normal on sigma
  lp += std::log(2.0) + normal_logpdf(theta.sigma / priors.sigma_sd) -
        std::log(priors.sigma_sd);
  lp += invgamma_logpdf(theta.ell, priors.ell_shape, priors.ell_rate);
  return lp;
}

}  // namespace pooltrend

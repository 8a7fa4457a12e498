#include "pooltrend/special.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <stdexcept>

namespace pooltrend {

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

double normal_cdf_c(double x) { return 0.5 * std::erfc(x * 0.7071067811865475244); }

double normal_logpdf(double x) {
  return -0.5 * x * x - 0.91893853320467274178032973640562;  // log sqrt(2 pi)
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");
  static const boost::math::normal_distribution<double> std_normal(0.0, 1.0);
  return boost::math::quantile(std_normal, p);
}

double log_binom_coef(int k, int y) {
  if (y < 0 || y > k) throw std::domain_error("log_binom_coef: need 0 <= y <= k");
  return std::lgamma(k + 1.0) - std::lgamma(y + 1.0) - std::lgamma(k - y + 1.0);
}

double gamma_q(double a, double z) { return boost::math::gamma_q(a, z); }

double gamma_q_inv(double a, double q) { return boost::math::gamma_q_inv(a, q); }

double invgamma_cdf(double x, double shape, double rate) {
  if (x <= 0.0) return 0.0;
  // X ~ InvGamma(a, b)  =>  1/X ~ Gamma(a, rate b), so P(X < x) = Q(a, b/x)
  return gamma_q(shape, rate / x);
}

double invgamma_logpdf(double x, double shape, double rate) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - rate / x;
}

double invgamma_median(double shape, double rate) {
  return rate / gamma_q_inv(shape, 0.5);
}

}  // namespace pooltrend

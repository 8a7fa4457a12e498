#pragma once

// Scalar special functions shared across modules: the probit link and its
// inverse, log binomial coefficients, and gamma-family CDF machinery used by
// the lengthscale prior.

namespace pooltrend {

// standard normal CDF (the probit link)
double normal_cdf(double x);

// 1 - normal_cdf(x), accurate in the upper tail
double normal_cdf_c(double x);

double normal_logpdf(double x);

// inverse standard normal CDF; p must lie in (0,1)
double normal_quantile(double p);

// log C(k, y) via lgamma; requires 0 <= y <= k
double log_binom_coef(int k, int y);

// regularized incomplete gamma Q(a, z) = Gamma(a, z) / Gamma(a)
double gamma_q(double a, double z);

// inverse of gamma_q in z for fixed a
double gamma_q_inv(double a, double q);

// CDF of an inverse-gamma(shape, rate) variate
double invgamma_cdf(double x, double shape, double rate);

double invgamma_logpdf(double x, double shape, double rate);

// median of an inverse-gamma(shape, rate) distribution
double invgamma_median(double shape, double rate);

}  // namespace pooltrend

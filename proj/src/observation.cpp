#include "pooltrend/observation.hpp"

#include "pooltrend/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pooltrend {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_p(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0))
    throw std::domain_error(std::string(what) + ": probability outside [0,1]");
}

void check_m(int m) {
  if (m < 1) throw std::domain_error("pool size must be >= 1");
}

// log pi and log(1-pi) for a pool of size m, from log q = log(1-p)
inline double log_pool_pos(double log_q, int m) {
  double t = m * log_q;
  if (t == 0.0) return kNegInf;  // p = 0
  return std::log(-std::expm1(t));
}

inline double log_pool_neg(double log_q, int m) { return m * log_q; }

inline double binom_logmass(int n, int y, double log_pos, double log_neg) {
  double v = log_binom_coef(n, y);
  if (y > 0) v += y * log_pos;
  if (n - y > 0) v += (n - y) * log_neg;
  return v;
}

void check_curve(const PrevalenceCurve& prev, std::size_t n_times) {
  if (prev.p.size() != n_times || prev.q.size() != n_times)
    throw std::invalid_argument("prevalence vector length does not match grid");
  for (double v : prev.p) check_p(v, "loglik");
}

}  // namespace

double pool_probability(double p, int m) {
  check_p(p, "pool_probability");
  check_m(m);
  // 1 - (1-p)^m, evaluated as -expm1(m log1p(-p)) to hold precision at small p
  return -std::expm1(static_cast<double>(m) * std::log1p(-p));
}

double invert_pool_probability(double pi, int m) {
  check_p(pi, "invert_pool_probability");
  check_m(m);
  return -std::expm1(std::log1p(-pi) / static_cast<double>(m));
}

PrevalencePoint make_prevalence_point(double p, int m) {
  return PrevalencePoint{p, pool_probability(p, m), m};
}

PrevalenceCurve PrevalenceCurve::from_p(std::span<const double> p) {
  PrevalenceCurve out;
  out.p.assign(p.begin(), p.end());
  out.q.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    check_p(p[i], "PrevalenceCurve");
    out.q[i] = 1.0 - p[i];
  }
  return out;
}

PrevalenceCurve PrevalenceCurve::from_latent(std::span<const double> x) {
  PrevalenceCurve out;
  out.p.resize(x.size());
  out.q.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.p[i] = normal_cdf(x[i]);
    out.q[i] = normal_cdf_c(x[i]);
  }
  return out;
}

double loglik_general(const PrevalenceCurve& prev, const PooledObservations& data) {
  const auto* lay = std::get_if<GeneralLayout>(&data.layout);
  if (!lay) throw std::invalid_argument("loglik_general: dataset is not in general layout");
  check_curve(prev, data.grid.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lay->pools.size(); ++i) {
    double log_q = std::log(prev.q[i]);
    for (const auto& pool : lay->pools[i])
      total += pool.result ? log_pool_pos(log_q, pool.size) : log_pool_neg(log_q, pool.size);
  }
  return total;
}

double loglik_ideal(const PrevalenceCurve& prev, const PooledObservations& data) {
  const auto* lay = std::get_if<IdealLayout>(&data.layout);
  if (!lay) throw std::invalid_argument("loglik_ideal: dataset is not in ideal layout");
  check_curve(prev, data.grid.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lay->rows.size(); ++i) {
    const auto& r = lay->rows[i];
    double log_q = std::log(prev.q[i]);
    total += binom_logmass(r.k, r.y, log_pool_pos(log_q, r.m), log_pool_neg(log_q, r.m));
  }
  return total;
}

double loglik_efficient_general(const PrevalenceCurve& prev, const PooledObservations& data) {
  const auto* lay = std::get_if<EfficientGeneralLayout>(&data.layout);
  if (!lay)
    throw std::invalid_argument(
        "loglik_efficient_general: dataset is not in efficient-general layout");
  check_curve(prev, data.grid.size());
  double total = 0.0;
  for (std::size_t i = 0; i < lay->rows.size(); ++i) {
    const auto& r = lay->rows[i];
    double log_q = std::log(prev.q[i]);
    // Binomial(0, .) and a size-0 remainder pool both contribute exactly 0
    if (r.k > 1)
      total += binom_logmass(r.k - 1, r.y1, log_pool_pos(log_q, r.m_star),
                             log_pool_neg(log_q, r.m_star));
    if (r.m_rem > 0)
      total += r.y2 ? log_pool_pos(log_q, r.m_rem) : log_pool_neg(log_q, r.m_rem);
  }
  return total;
}

double loglik_individual(const PrevalenceCurve& prev, const IndividualObservations& data) {
  check_curve(prev, data.grid.size());
  double total = 0.0;
  for (std::size_t i = 0; i < data.counts.size(); ++i) {
    const auto& c = data.counts[i];
    total += binom_logmass(c.k, c.y, std::log(prev.p[i]), std::log(prev.q[i]));
  }
  return total;
}

double loglik_general(std::span<const double> p, const PooledObservations& data) {
  return loglik_general(PrevalenceCurve::from_p(p), data);
}
double loglik_ideal(std::span<const double> p, const PooledObservations& data) {
  return loglik_ideal(PrevalenceCurve::from_p(p), data);
}
double loglik_efficient_general(std::span<const double> p, const PooledObservations& data) {
  return loglik_efficient_general(PrevalenceCurve::from_p(p), data);
}
double loglik_individual(std::span<const double> p, const IndividualObservations& data) {
  return loglik_individual(PrevalenceCurve::from_p(p), data);
}

double loglik(const PrevalenceCurve& prev, const Dataset& data) {
  if (const auto* ind = std::get_if<IndividualObservations>(&data))
    return loglik_individual(prev, *ind);
  const auto& pooled = std::get<PooledObservations>(data);
  if (std::holds_alternative<IdealLayout>(pooled.layout)) return loglik_ideal(prev, pooled);
  if (std::holds_alternative<EfficientGeneralLayout>(pooled.layout))
    return loglik_efficient_general(prev, pooled);
  return loglik_general(prev, pooled);
}

}  // namespace pooltrend

#include "pooltrend/summary.hpp"

#include "pooltrend/special.hpp"
#include "pooltrend/stats.hpp"

#include <stdexcept>

namespace pooltrend {

TimeGrid prediction_grid(const TimeGrid& grid_obs, int points) {
  if (points < 2) throw std::invalid_argument("prediction_grid: need >= 2 points");
  if (grid_obs.size() < 1) throw std::invalid_argument("prediction_grid: empty observation grid");
  double lo = grid_obs.times.front();
  double hi = grid_obs.times.back();
  std::vector<double> times(points);
  for (int i = 0; i < points; ++i)
    times[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  return TimeGrid::from_times(std::move(times), grid_obs.interval_span);
}

CurveSummary summarize_curve(const PosteriorDraws& draws, const TimeGrid& grid_obs,
                             const TimeGrid& grid_pred, std::uint64_t seed, double jitter_rel) {
  if (grid_obs.times != draws.times)
    throw std::invalid_argument("summarize_curve: grid_obs does not match the draws' grid");
  const auto n_pred = grid_pred.size();
  const bool at_obs = grid_pred.times == grid_obs.times;

  std::size_t total_draws = 0;
  for (const auto& c : draws.chains) total_draws += c.mu.size();
  if (total_draws == 0) throw std::invalid_argument("summarize_curve: no draws");

  // p samples per prediction time
  std::vector<std::vector<double>> samples(n_pred);
  for (auto& s : samples) s.reserve(total_draws);

  std::size_t global = 0;
  for (const auto& chain : draws.chains) {
    for (std::size_t d = 0; d < chain.mu.size(); ++d, ++global) {
      const double mu = chain.mu[d];
      if (at_obs) {
        for (std::size_t j = 0; j < n_pred; ++j)
          samples[j].push_back(normal_cdf(chain.w(d, static_cast<Eigen::Index>(j)) + mu));
        continue;
      }
      GpHyperparams theta{chain.sigma[d], chain.ell[d]};
      Eigen::VectorXd w_obs = chain.w.row(static_cast<Eigen::Index>(d)).transpose();
      auto cond = predict_conditional(grid_obs, w_obs, grid_pred, theta,
                                      jitter_rel * theta.sigma * theta.sigma);
      Rng rng(derive_seed(seed, global));
      Eigen::VectorXd w_pred = sample_gaussian(cond, rng);
      for (std::size_t j = 0; j < n_pred; ++j)
        samples[j].push_back(normal_cdf(w_pred(static_cast<Eigen::Index>(j)) + mu));
    }
  }

  CurveSummary out;
  out.times = grid_pred.times;
  out.median.resize(n_pred);
  out.lo95.resize(n_pred);
  out.hi95.resize(n_pred);
  for (std::size_t j = 0; j < n_pred; ++j) {
    out.median[j] = percentile(samples[j], 0.5);
    out.lo95[j] = percentile(samples[j], 0.025);
    out.hi95[j] = percentile(samples[j], 0.975);
  }
  return out;
}

}  // namespace pooltrend

#pragma once

#include "pooltrend/mcmc.hpp"

#include <cstdint>
#include <vector>

namespace pooltrend {

// Posterior prevalence curve: per-time median and central 95% credible band.
struct CurveSummary {
  std::vector<double> times;
  std::vector<double> median;
  std::vector<double> lo95;
  std::vector<double> hi95;
};

// Pushes every posterior draw through the GP conditional at grid_pred (with
// fresh conditional noise, so bands include interpolation uncertainty) and
// maps to prevalence via phi(. + mu). When grid_pred equals the observation
// grid the latent draws are used directly.
CurveSummary summarize_curve(const PosteriorDraws& draws, const TimeGrid& grid_obs,
                             const TimeGrid& grid_pred, std::uint64_t seed,
                             double jitter_rel = 1e-8);

// evenly spaced prediction grid spanning the observation interval
TimeGrid prediction_grid(const TimeGrid& grid_obs, int points);

}  // namespace pooltrend

#pragma once

#include "pooltrend/diagnostics.hpp"
#include "pooltrend/mcmc.hpp"
#include "pooltrend/studygen.hpp"
#include "pooltrend/summary.hpp"

#include <string>

namespace pooltrend {

// columns: chain,draw,mu,sigma,ell,W_1..W_N
void write_draws_csv(const std::string& path, const PosteriorDraws& draws);
// whitened coordinates and sampler meta are not serialized; times left empty
PosteriorDraws read_draws_csv(const std::string& path);

// columns: time,median,lo95,hi95
void write_summary_csv(const std::string& path, const CurveSummary& summary);
CurveSummary read_summary_csv(const std::string& path);

void write_diagnostics_json(const std::string& path, const Diagnostics& diag);

// columns: time,W,p
void write_truth_csv(const std::string& path, const SyntheticTruth& truth);
struct TruthCurve {
  std::vector<double> times;
  std::vector<double> w;
  std::vector<double> p;
};
TruthCurve read_truth_csv(const std::string& path);

void write_plan_json(const std::string& path, const PoolingPlan& plan, const TimeGrid& grid);

}  // namespace pooltrend

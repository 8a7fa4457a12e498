#pragma once

#include "pooltrend/mcmc.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pooltrend {

struct ParamDiag {
  double rhat = 0.0;
  double ess_bulk = 0.0;
  bool flagged = false;
  bool degenerate = false;  // a chain with (numerically) zero variance
};

struct Diagnostics {
  std::vector<std::pair<std::string, ParamDiag>> params;  // mu, sigma, ell, W_1..W_N
  std::vector<double> mh_accept_rates;                    // per chain
  std::vector<double> ess_avg_proposals;

  bool any_flagged() const;
  const ParamDiag* find(const std::string& name) const;
};

// Split R-hat and bulk effective sample size from rank-normalized split
// chains. Parameters with R-hat > 1.05, ESS < 100, or degenerate variance
// are flagged. Requires >= 2 chains with >= 100 post-warmup draws each.
Diagnostics diagnose(const PosteriorDraws& draws);

// rank-normalized split-chain estimators on raw per-chain draw sequences,
// exposed for direct testing
double split_rhat(const std::vector<std::vector<double>>& chains);
double ess_bulk(const std::vector<std::vector<double>>& chains);

}  // namespace pooltrend

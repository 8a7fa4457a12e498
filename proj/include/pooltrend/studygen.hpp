#pragma once

#include "pooltrend/domain.hpp"
#include "pooltrend/gp.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

namespace pooltrend {

// Individual-level results with identities retained, as needed for pool
// construction and budget-matched subsampling.
struct IndividualSamples {
  TimeGrid grid;
  std::vector<std::vector<std::uint8_t>> results;  // per time, one entry per individual

  IndividualObservations counts() const;
  std::vector<int> n_per_time() const;
};

// Greedy windowed aggregation of raw records, anchored at each group's first
// date: a record joins the open group at its site when its date falls
// strictly within window_days of the group's first date. Groups whose first
// dates coincide collapse to a single time point across sites.
IndividualObservations aggregate_by_window(const std::vector<IndividualRecord>& records,
                                           int window_days = 10);
IndividualSamples aggregate_by_window_samples(const std::vector<IndividualRecord>& records,
                                              int window_days = 10);

// Random pool assignment: per time, indices are shuffled and cut into
// ceil(n / m_star) pools, all of size m_star except at most one remainder of
// size n mod m_star placed last. A pool is positive iff any member is.
struct PoolingPlan {
  int m_star = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::vector<int>>> assignment;  // time -> pool -> indices
};

std::pair<PoolingPlan, PooledObservations> make_pools(const IndividualSamples& individuals,
                                                      int m_star, std::uint64_t seed,
                                                      bool as_general = false);

// tests consumed by pooling at each time: ceil(n / m_star)
std::vector<int> pool_test_counts(const IndividualSamples& individuals, int m_star);

// uniform subsample without replacement of budget_per_time[i] individuals
IndividualSamples subsample_budget(const IndividualSamples& individuals,
                                   const std::vector<int>& budget_per_time, std::uint64_t seed);

struct SyntheticStudyConfig {
  TimeGrid grid;
  GpHyperparams true_theta;
  double true_mu = 0.0;
  int n_per_time = 0;
  int m = 1;
};

// 25 evenly spaced times over 1000 days, n=45, m=3, ell=100, sigma=0.5, mu=-2
SyntheticStudyConfig study1_preset();
// 150 daily times, n=500, m=10, ell=25, sigma=0.25, mu=-2.33
SyntheticStudyConfig study2_preset();

struct SyntheticTruth {
  TimeGrid grid;
  GpHyperparams theta;
  double mu = 0.0;
  Eigen::VectorXd w;
  std::vector<double> p;
};

struct SyntheticStudy {
  SyntheticTruth truth;
  IndividualSamples samples;
  PoolingPlan plan;
  PooledObservations pooled;
};

SyntheticStudy generate_synthetic(const SyntheticStudyConfig& config, std::uint64_t seed);

struct ResampleReplicate {
  PoolingPlan plan;
  PooledObservations pooled;
  IndividualSamples subsample;
};

// replicate pooling plans plus budget-matched subsamples, seeds derived per
// replicate from the master seed
std::vector<ResampleReplicate> resample_study(const IndividualSamples& individuals, int m_star,
                                              int replicates, std::uint64_t seed);

}  // namespace pooltrend

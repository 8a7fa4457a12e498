#include "pooltrend/studygen.hpp"

#include "pooltrend/special.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

namespace pooltrend {

IndividualObservations IndividualSamples::counts() const {
  IndividualObservations out;
  out.grid = grid;
  out.counts.reserve(results.size());
  for (const auto& r : results) {
    IndividualTime c;
    c.k = static_cast<int>(r.size());
    c.y = static_cast<int>(std::count(r.begin(), r.end(), std::uint8_t{1}));
    out.counts.push_back(c);
  }
  return out;
}

std::vector<int> IndividualSamples::n_per_time() const {
  std::vector<int> out;
  out.reserve(results.size());
  for (const auto& r : results) out.push_back(static_cast<int>(r.size()));
  return out;
}

namespace {

// site-grouped, date-anchored grouping shared by both aggregation entry points
std::map<int, std::vector<std::uint8_t>> group_records(
    const std::vector<IndividualRecord>& records, int window_days) {
  if (window_days < 1) throw std::invalid_argument("aggregate_by_window: window_days must be >= 1");
  std::vector<const IndividualRecord*> sorted;
  sorted.reserve(records.size());
  for (const auto& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    if (a->site != b->site) return a->site < b->site;
    return a->day < b->day;
  });

  // group-first-date -> pooled results from all sites whose group starts there
  std::map<int, std::vector<std::uint8_t>> groups;
  const std::string* cur_site = nullptr;
  int group_start = 0;
  for (const auto* rec : sorted) {
    if (rec->result != 0 && rec->result != 1)
      throw std::invalid_argument("aggregate_by_window: result must be 0 or 1");
    bool new_group = !cur_site || *cur_site != rec->site || rec->day >= group_start + window_days;
    if (new_group) {
      cur_site = &rec->site;
      group_start = rec->day;
    }
    groups[group_start].push_back(static_cast<std::uint8_t>(rec->result));
  }
  return groups;
}

IndividualSamples samples_from_groups(const std::map<int, std::vector<std::uint8_t>>& groups) {
  IndividualSamples out;
  if (groups.empty()) {
    out.grid = TimeGrid::from_times({});
    return out;
  }
  const int origin = groups.begin()->first;
  std::vector<double> times;
  for (const auto& [day, results] : groups) {
    times.push_back(static_cast<double>(day - origin));
    out.results.push_back(results);
  }
  out.grid = TimeGrid::from_times(std::move(times));
  return out;
}

}  // namespace

IndividualSamples aggregate_by_window_samples(const std::vector<IndividualRecord>& records,
                                              int window_days) {
  return samples_from_groups(group_records(records, window_days));
}

IndividualObservations aggregate_by_window(const std::vector<IndividualRecord>& records,
                                           int window_days) {
  return aggregate_by_window_samples(records, window_days).counts();
}

std::pair<PoolingPlan, PooledObservations> make_pools(const IndividualSamples& individuals,
                                                      int m_star, std::uint64_t seed,
                                                      bool as_general) {
  if (m_star < 2) throw std::invalid_argument("make_pools: m_star must be >= 2");
  Rng rng(seed);
  PoolingPlan plan;
  plan.m_star = m_star;
  plan.seed = seed;
  plan.assignment.reserve(individuals.results.size());

  EfficientGeneralLayout eff;
  GeneralLayout gen;
  for (const auto& results : individuals.results) {
    const int n = static_cast<int>(results.size());
    if (n < 1) throw std::invalid_argument("make_pools: every time needs at least one individual");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    const int full = n / m_star;
    const int rem = n % m_star;
    std::vector<std::vector<int>> pools;
    EfficientTime row;
    row.m_star = m_star;
    row.k = full + 1;
    row.m_rem = rem;
    int at = 0;
    for (int j = 0; j < full; ++j) {
      std::vector<int> members(order.begin() + at, order.begin() + at + m_star);
      at += m_star;
      int pos = 0;
      for (int idx : members) pos |= results[idx];
      row.y1 += pos;
      pools.push_back(std::move(members));
    }
    if (rem > 0) {
      std::vector<int> members(order.begin() + at, order.end());
      int pos = 0;
      for (int idx : members) pos |= results[idx];
      row.y2 = pos;
      pools.push_back(std::move(members));
    }
    if (as_general) {
      std::vector<Pool> pl;
      for (const auto& members : pools) {
        int pos = 0;
        for (int idx : members) pos |= results[idx];
        pl.push_back(Pool{static_cast<int>(members.size()), pos});
      }
      gen.pools.push_back(std::move(pl));
    }
    eff.rows.push_back(row);
    plan.assignment.push_back(std::move(pools));
  }

  PooledObservations data = as_general
                                ? PooledObservations::make(individuals.grid, std::move(gen))
                                : PooledObservations::make(individuals.grid, std::move(eff));
  return {std::move(plan), std::move(data)};
}

std::vector<int> pool_test_counts(const IndividualSamples& individuals, int m_star) {
  if (m_star < 1) throw std::invalid_argument("pool_test_counts: m_star must be >= 1");
  std::vector<int> out;
  out.reserve(individuals.results.size());
  for (const auto& r : individuals.results) {
    int n = static_cast<int>(r.size());
    out.push_back((n + m_star - 1) / m_star);
  }
  return out;
}

IndividualSamples subsample_budget(const IndividualSamples& individuals,
                                   const std::vector<int>& budget_per_time, std::uint64_t seed) {
  if (budget_per_time.size() != individuals.results.size())
    throw std::invalid_argument("subsample_budget: budget vector length mismatch");
  Rng rng(seed);
  IndividualSamples out;
  out.grid = individuals.grid;
  out.results.reserve(individuals.results.size());
  for (std::size_t i = 0; i < individuals.results.size(); ++i) {
    const auto& results = individuals.results[i];
    const int n = static_cast<int>(results.size());
    const int b = budget_per_time[i];
    if (b < 1 || b > n)
      throw std::invalid_argument("subsample_budget: budget at time index " + std::to_string(i) +
                                  " outside [1, n]");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    order.resize(b);
    std::sort(order.begin(), order.end());
    std::vector<std::uint8_t> kept;
    kept.reserve(b);
    for (int idx : order) kept.push_back(results[idx]);
    out.results.push_back(std::move(kept));
  }
  return out;
}

SyntheticStudyConfig study1_preset() {
  SyntheticStudyConfig cfg;
  std::vector<double> times(25);
  for (int i = 0; i < 25; ++i) times[i] = 1000.0 * i / 24.0;
  cfg.grid = TimeGrid::from_times(std::move(times), 1000.0);
  cfg.true_theta = GpHyperparams{0.5, 100.0};
  cfg.true_mu = -2.0;
  cfg.n_per_time = 45;
  cfg.m = 3;
  return cfg;
}

SyntheticStudyConfig study2_preset() {
  SyntheticStudyConfig cfg;
  std::vector<double> times(150);
  for (int i = 0; i < 150; ++i) times[i] = static_cast<double>(i);
  cfg.grid = TimeGrid::from_times(std::move(times), 149.0);
  cfg.true_theta = GpHyperparams{0.25, 25.0};
  cfg.true_mu = -2.33;
  cfg.n_per_time = 500;
  cfg.m = 10;
  return cfg;
}

SyntheticStudy generate_synthetic(const SyntheticStudyConfig& config, std::uint64_t seed) {
  if (config.n_per_time < 1 || config.m < 1 || !config.true_theta.valid())
    throw std::invalid_argument("generate_synthetic: invalid study configuration");
  SyntheticStudy study;
  study.truth.grid = config.grid;
  study.truth.theta = config.true_theta;
  study.truth.mu = config.true_mu;

  Rng rng_w(derive_seed(seed, 1));
  study.truth.w = sample_prior(config.grid, config.true_theta, rng_w);
  study.truth.p.resize(config.grid.size());
  for (std::size_t i = 0; i < config.grid.size(); ++i)
    study.truth.p[i] = normal_cdf(study.truth.w(static_cast<Eigen::Index>(i)) + config.true_mu);

  Rng rng_ind(derive_seed(seed, 2));
  study.samples.grid = config.grid;
  study.samples.results.resize(config.grid.size());
  for (std::size_t i = 0; i < config.grid.size(); ++i) {
    auto& res = study.samples.results[i];
    res.resize(config.n_per_time);
    for (int j = 0; j < config.n_per_time; ++j)
      res[j] = rng_ind.uniform() < study.truth.p[i] ? 1 : 0;
  }

  auto [plan, pooled] = make_pools(study.samples, config.m, derive_seed(seed, 3));
  study.plan = std::move(plan);
  study.pooled = std::move(pooled);
  return study;
}

std::vector<ResampleReplicate> resample_study(const IndividualSamples& individuals, int m_star,
                                              int replicates, std::uint64_t seed) {
  if (replicates < 1) throw std::invalid_argument("resample_study: replicates must be >= 1");
  auto budgets = pool_test_counts(individuals, m_star);
  std::vector<ResampleReplicate> out;
  out.reserve(replicates);
  for (int r = 0; r < replicates; ++r) {
    ResampleReplicate rep;
    auto [plan, pooled] =
        make_pools(individuals, m_star, derive_seed(seed, 2 * static_cast<std::uint64_t>(r)));
    rep.plan = std::move(plan);
    rep.pooled = std::move(pooled);
    rep.subsample = subsample_budget(individuals, budgets,
                                     derive_seed(seed, 2 * static_cast<std::uint64_t>(r) + 1));
    out.push_back(std::move(rep));
  }
  return out;
}

}  // namespace pooltrend

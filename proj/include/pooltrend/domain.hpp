#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pooltrend {

// Observation times as real-valued day offsets from the start of the
// observation interval. Times must be strictly increasing and lie in
// [0, interval_span].
struct TimeGrid {
  std::vector<double> times;
  double interval_span = 0.0;

  std::size_t size() const { return times.size(); }
  static TimeGrid from_times(std::vector<double> times);
  static TimeGrid from_times(std::vector<double> times, double interval_span);
};

// One raw test record; multiple samples from the same individual are
// expected to be collapsed to a single row upstream.
struct IndividualRecord {
  std::string site;
  int day = 0;  // civil day serial (days since 1970-01-01)
  int result = 0;
};

// One tested pool at a given grid time.
struct PoolObservation {
  int time_index = 0;
  int pool_size = 0;
  int result = 0;
};

struct Pool {
  int size = 0;
  int result = 0;
};

// Every pool carries its own size; the Bernoulli-product likelihood applies.
struct GeneralLayout {
  std::vector<std::vector<Pool>> pools;  // indexed by time
};

// All pools at a time share one size; binomial count likelihood.
struct IdealTime {
  int k = 0;  // pools
  int m = 0;  // common pool size
  int y = 0;  // positive pools
};
struct IdealLayout {
  std::vector<IdealTime> rows;
};

// k-1 pools of size m_star plus one remainder pool of size m_rem < m_star.
// m_rem == 0 means the remainder pool is absent and y2 must be 0; k == 1
// means the size-m_star block is empty and y1 must be 0.
struct EfficientTime {
  int k = 0;       // block pools + 1 (the remainder slot, possibly empty)
  int m_star = 0;  // target pool size
  int y1 = 0;      // positives among the k-1 full pools
  int m_rem = 0;   // remainder pool size, n mod m_star
  int y2 = 0;      // remainder pool result
};
struct EfficientGeneralLayout {
  std::vector<EfficientTime> rows;
};

struct PooledObservations {
  TimeGrid grid;
  std::variant<GeneralLayout, IdealLayout, EfficientGeneralLayout> layout;
  std::vector<int> n_per_time;  // individuals represented at each time

  static PooledObservations make(TimeGrid grid, GeneralLayout lay);
  static PooledObservations make(TimeGrid grid, IdealLayout lay);
  static PooledObservations make(TimeGrid grid, EfficientGeneralLayout lay);
};

// Aggregated individual testing: k tested, y positive per time.
struct IndividualTime {
  int k = 0;
  int y = 0;
};
struct IndividualObservations {
  TimeGrid grid;
  std::vector<IndividualTime> counts;
};

using Dataset = std::variant<PooledObservations, IndividualObservations>;

const TimeGrid& dataset_grid(const Dataset& data);

struct ValidationIssue {
  std::optional<int> time_index;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool pass() const { return issues.empty(); }
  std::string str() const;
};

ValidationReport validate_dataset(const PooledObservations& data);
ValidationReport validate_dataset(const IndividualObservations& data);
ValidationReport validate_dataset(const Dataset& data);

// Layout conversions. Expansion always succeeds; compaction returns nullopt
// when the per-time pool structure does not fit the target layout.
GeneralLayout expand_to_general(const PooledObservations& data);
std::optional<IdealLayout> try_ideal(const GeneralLayout& lay);
std::optional<EfficientGeneralLayout> try_efficient(const GeneralLayout& lay);

// Rewrites a General dataset in the cheapest equivalent layout
// (ideal < efficient-general < general); other layouts pass through.
PooledObservations compact_layout(const PooledObservations& data);

// number of physical pools (tests) at each time
std::vector<int> pools_per_time(const PooledObservations& data);

}  // namespace pooltrend

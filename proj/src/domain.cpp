#include "pooltrend/domain.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pooltrend {

TimeGrid TimeGrid::from_times(std::vector<double> times) {
  double span = times.empty() ? 0.0 : times.back();
  return from_times(std::move(times), span);
}

TimeGrid TimeGrid::from_times(std::vector<double> times, double interval_span) {
  TimeGrid grid;
  grid.times = std::move(times);
  grid.interval_span = interval_span;
  for (std::size_t i = 0; i + 1 < grid.times.size(); ++i) {
    if (!(grid.times[i] < grid.times[i + 1]))
      throw std::invalid_argument("TimeGrid: times must be strictly increasing (duplicate or "
                                  "out-of-order time at index " + std::to_string(i + 1) + ")");
  }
  for (std::size_t i = 0; i < grid.times.size(); ++i) {
    double t = grid.times[i];
    if (!std::isfinite(t) || t < 0.0 || t > grid.interval_span)
      throw std::invalid_argument("TimeGrid: time at index " + std::to_string(i) +
                                  " outside [0, interval_span]");
  }
  return grid;
}

namespace {

std::vector<int> derive_n(const GeneralLayout& lay) {
  std::vector<int> n;
  n.reserve(lay.pools.size());
  for (const auto& pools : lay.pools) {
    int tot = 0;
    for (const auto& p : pools) tot += p.size;
    n.push_back(tot);
  }
  return n;
}

std::vector<int> derive_n(const IdealLayout& lay) {
  std::vector<int> n;
  n.reserve(lay.rows.size());
  for (const auto& r : lay.rows) n.push_back(r.k * r.m);
  return n;
}

std::vector<int> derive_n(const EfficientGeneralLayout& lay) {
  std::vector<int> n;
  n.reserve(lay.rows.size());
  for (const auto& r : lay.rows) n.push_back((r.k - 1) * r.m_star + r.m_rem);
  return n;
}

void check_row_count(std::size_t grid, std::size_t rows) {
  if (grid != rows)
    throw std::invalid_argument("PooledObservations: layout has " + std::to_string(rows) +
                                " time entries but grid has " + std::to_string(grid));
}

}  // namespace

PooledObservations PooledObservations::make(TimeGrid grid, GeneralLayout lay) {
  check_row_count(grid.size(), lay.pools.size());
  PooledObservations d{std::move(grid), std::move(lay), {}};
  d.n_per_time = derive_n(std::get<GeneralLayout>(d.layout));
  return d;
}

PooledObservations PooledObservations::make(TimeGrid grid, IdealLayout lay) {
  check_row_count(grid.size(), lay.rows.size());
  PooledObservations d{std::move(grid), std::move(lay), {}};
  d.n_per_time = derive_n(std::get<IdealLayout>(d.layout));
  return d;
}

PooledObservations PooledObservations::make(TimeGrid grid, EfficientGeneralLayout lay) {
  check_row_count(grid.size(), lay.rows.size());
  PooledObservations d{std::move(grid), std::move(lay), {}};
  d.n_per_time = derive_n(std::get<EfficientGeneralLayout>(d.layout));
  return d;
}

const TimeGrid& dataset_grid(const Dataset& data) {
  return std::visit([](const auto& d) -> const TimeGrid& { return d.grid; }, data);
}

std::string ValidationReport::str() const {
  if (pass()) return "pass";
  std::ostringstream os;
  for (const auto& issue : issues) {
    if (issue.time_index) os << "time index " << *issue.time_index << ": ";
    os << issue.message << "\n";
  }
  return os.str();
}

namespace {

void validate_grid(const TimeGrid& grid, ValidationReport& rep) {
  if (grid.times.empty()) rep.issues.push_back({std::nullopt, "grid has no observation times"});
  for (std::size_t i = 0; i + 1 < grid.times.size(); ++i)
    if (!(grid.times[i] < grid.times[i + 1]))
      rep.issues.push_back({static_cast<int>(i + 1), "times not strictly increasing"});
  for (std::size_t i = 0; i < grid.times.size(); ++i)
    if (!std::isfinite(grid.times[i]) || grid.times[i] < 0.0 ||
        grid.times[i] > grid.interval_span)
      rep.issues.push_back({static_cast<int>(i), "time outside [0, interval_span]"});
}

void validate_layout(const GeneralLayout& lay, ValidationReport& rep) {
  for (std::size_t i = 0; i < lay.pools.size(); ++i) {
    const auto& pools = lay.pools[i];
    if (pools.empty()) rep.issues.push_back({static_cast<int>(i), "no pools at this time"});
    for (const auto& p : pools) {
      if (p.size < 1) rep.issues.push_back({static_cast<int>(i), "pool_size must be >= 1"});
      if (p.result != 0 && p.result != 1)
        rep.issues.push_back({static_cast<int>(i), "pool result must be 0 or 1"});
    }
  }
}

void validate_layout(const IdealLayout& lay, ValidationReport& rep) {
  for (std::size_t i = 0; i < lay.rows.size(); ++i) {
    const auto& r = lay.rows[i];
    if (r.k < 1) rep.issues.push_back({static_cast<int>(i), "k must be >= 1"});
    if (r.m < 1) rep.issues.push_back({static_cast<int>(i), "m must be >= 1"});
    if (r.y < 0) rep.issues.push_back({static_cast<int>(i), "y must be >= 0"});
    if (r.y > r.k) rep.issues.push_back({static_cast<int>(i), "y exceeds k"});
  }
}

void validate_layout(const EfficientGeneralLayout& lay, ValidationReport& rep) {
  for (std::size_t i = 0; i < lay.rows.size(); ++i) {
    const auto& r = lay.rows[i];
    int idx = static_cast<int>(i);
    if (r.k < 1) rep.issues.push_back({idx, "k must be >= 1"});
    if (r.m_star < 1) rep.issues.push_back({idx, "m_star must be >= 1"});
    if (r.m_rem < 0 || r.m_rem >= r.m_star)
      rep.issues.push_back({idx, "remainder pool size must satisfy 0 <= m_rem < m_star"});
    if (r.y1 < 0) rep.issues.push_back({idx, "y1 must be >= 0"});
    if (r.y1 > std::max(r.k - 1, 0)) rep.issues.push_back({idx, "y1 exceeds k-1"});
    if (r.y2 != 0 && r.y2 != 1) rep.issues.push_back({idx, "y2 must be 0 or 1"});
    if (r.m_rem == 0 && r.y2 != 0)
      rep.issues.push_back({idx, "remainder pool absent (m_rem=0) but y2 != 0"});
    if (r.k == 1 && r.y1 != 0)
      rep.issues.push_back({idx, "size-m_star block empty (k=1) but y1 != 0"});
    if ((r.k - 1) * r.m_star + r.m_rem < 1)
      rep.issues.push_back({idx, "time represents no individuals"});
  }
}

}  // namespace

ValidationReport validate_dataset(const PooledObservations& data) {
  ValidationReport rep;
  validate_grid(data.grid, rep);
  std::size_t rows = std::visit(
      [](const auto& lay) {
        if constexpr (std::is_same_v<std::decay_t<decltype(lay)>, GeneralLayout>)
          return lay.pools.size();
        else
          return lay.rows.size();
      },
      data.layout);
  if (rows != data.grid.size())
    rep.issues.push_back({std::nullopt, "layout row count does not match grid size"});
  std::visit([&rep](const auto& lay) { validate_layout(lay, rep); }, data.layout);
  return rep;
}

ValidationReport validate_dataset(const IndividualObservations& data) {
  ValidationReport rep;
  validate_grid(data.grid, rep);
  if (data.counts.size() != data.grid.size())
    rep.issues.push_back({std::nullopt, "counts row count does not match grid size"});
  for (std::size_t i = 0; i < data.counts.size(); ++i) {
    const auto& c = data.counts[i];
    if (c.k < 1) rep.issues.push_back({static_cast<int>(i), "k must be >= 1"});
    if (c.y < 0) rep.issues.push_back({static_cast<int>(i), "y must be >= 0"});
    if (c.y > c.k) rep.issues.push_back({static_cast<int>(i), "y exceeds k"});
  }
  return rep;
}

ValidationReport validate_dataset(const Dataset& data) {
  return std::visit([](const auto& d) { return validate_dataset(d); }, data);
}

GeneralLayout expand_to_general(const PooledObservations& data) {
  GeneralLayout out;
  if (const auto* gen = std::get_if<GeneralLayout>(&data.layout)) {
    out = *gen;
    return out;
  }
  if (const auto* ideal = std::get_if<IdealLayout>(&data.layout)) {
    out.pools.reserve(ideal->rows.size());
    for (const auto& r : ideal->rows) {
      std::vector<Pool> pools(r.k, Pool{r.m, 0});
      for (int j = 0; j < r.y; ++j) pools[j].result = 1;
      out.pools.push_back(std::move(pools));
    }
    return out;
  }
  const auto& eff = std::get<EfficientGeneralLayout>(data.layout);
  out.pools.reserve(eff.rows.size());
  for (const auto& r : eff.rows) {
    std::vector<Pool> pools;
    pools.reserve(r.k);
    for (int j = 0; j < r.k - 1; ++j) pools.push_back(Pool{r.m_star, j < r.y1 ? 1 : 0});
    if (r.m_rem > 0) pools.push_back(Pool{r.m_rem, r.y2});
    out.pools.push_back(std::move(pools));
  }
  return out;
}

std::optional<IdealLayout> try_ideal(const GeneralLayout& lay) {
  IdealLayout out;
  out.rows.reserve(lay.pools.size());
  for (const auto& pools : lay.pools) {
    if (pools.empty()) return std::nullopt;
    IdealTime row{static_cast<int>(pools.size()), pools.front().size, 0};
    for (const auto& p : pools) {
      if (p.size != row.m) return std::nullopt;
      row.y += p.result;
    }
    out.rows.push_back(row);
  }
  return out;
}

std::optional<EfficientGeneralLayout> try_efficient(const GeneralLayout& lay) {
  EfficientGeneralLayout out;
  out.rows.reserve(lay.pools.size());
  for (const auto& pools : lay.pools) {
    if (pools.empty()) return std::nullopt;
    int m_star = 0;
    for (const auto& p : pools) m_star = std::max(m_star, p.size);
    EfficientTime row;
    row.m_star = m_star;
    int odd_pools = 0;
    for (const auto& p : pools) {
      if (p.size == m_star) {
        row.y1 += p.result;
        ++row.k;
      } else {
        ++odd_pools;
        row.m_rem = p.size;
        row.y2 = p.result;
      }
    }
    ++row.k;  // the remainder slot, empty when m_rem == 0
    if (odd_pools > 1) return std::nullopt;
    out.rows.push_back(row);
  }
  return out;
}

PooledObservations compact_layout(const PooledObservations& data) {
  const auto* gen = std::get_if<GeneralLayout>(&data.layout);
  if (!gen) return data;
  if (auto ideal = try_ideal(*gen)) return PooledObservations::make(data.grid, std::move(*ideal));
  if (auto eff = try_efficient(*gen))
    return PooledObservations::make(data.grid, std::move(*eff));
  return data;
}

std::vector<int> pools_per_time(const PooledObservations& data) {
  std::vector<int> out;
  std::visit(
      [&out](const auto& lay) {
        using L = std::decay_t<decltype(lay)>;
        if constexpr (std::is_same_v<L, GeneralLayout>) {
          for (const auto& pools : lay.pools) out.push_back(static_cast<int>(pools.size()));
        } else if constexpr (std::is_same_v<L, IdealLayout>) {
          for (const auto& r : lay.rows) out.push_back(r.k);
        } else {
          for (const auto& r : lay.rows) out.push_back(r.k - 1 + (r.m_rem > 0 ? 1 : 0));
        }
      },
      data.layout);
  return out;
}

}  // namespace pooltrend

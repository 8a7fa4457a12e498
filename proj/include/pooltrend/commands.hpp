#pragma once

#include "pooltrend/config.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pooltrend {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInputError = 2;
inline constexpr int kExitStrictDiagnostics = 3;

struct SimulateArgs {
  std::string preset;  // study1 | study2, or empty with the custom fields set
  std::optional<int> times;
  std::optional<double> span;
  std::optional<int> n_per_time;
  std::optional<int> m;
  std::optional<double> sigma;
  std::optional<double> ell;
  std::optional<double> mu;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};
int cmd_simulate(const SimulateArgs& args);

struct PoolArgs {
  std::string records_path;     // raw site,date,result records
  std::string individual_path;  // or aggregated counts
  int window_days = 10;
  int m_star = 0;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  bool emit_subsample = true;
};
int cmd_pool(const PoolArgs& args);

int cmd_fit(const RunConfig& config);

struct CompareArgs {
  std::vector<std::pair<std::string, std::string>> fits;  // label -> fit directory
  std::string truth_path;                                 // optional truth.csv
  std::string out_dir = "out";
};
int cmd_compare(const CompareArgs& args);

struct ResampleStudyArgs {
  RunConfig base;  // data/layout/sampler settings for the replicate fits
  int m_star = 3;
  int replicates = 25;
  bool skip_individual = false;
};
int cmd_resample_study(const ResampleStudyArgs& args);

struct SummarizeArgs {
  std::string draws_path;
  std::string data_path;
  std::string layout = "ideal";
  int window_days = 10;
  int grid = 200;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
};
int cmd_summarize(const SummarizeArgs& args);

}  // namespace pooltrend

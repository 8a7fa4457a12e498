#include "pooltrend/commands.hpp"
#include "pooltrend/config.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

using pooltrend::RunConfig;

// defaults < config file < explicit flags
struct FitFlags {
  std::string config_path;
  std::string data, layout, out;
  std::uint64_t seed = 0;
  int chains = 0, warmup = -1, draws = -1, grid = 0, threads = -1, window = 0, latent = 0;
  int scalar = 0;
  double mu_sd = 0, sigma_sd = 0, ell_tail = 0, ell_shape = 0, ell_rate = 0;
  double target_accept = 0, jitter_rel = 0;
  bool strict = false;
};

void add_fit_options(CLI::App* cmd, FitFlags& f) {
  cmd->add_option("--config", f.config_path, "config file (flat key=value or manifest JSON)");
  cmd->add_option("--data", f.data, "input data CSV");
  cmd->add_option("--layout", f.layout, "general | ideal | efficient-general | individual");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "sampler seed (required)");
  cmd->add_option("--chains", f.chains, "number of chains");
  cmd->add_option("--warmup", f.warmup, "warmup iterations per chain");
  cmd->add_option("--draws", f.draws, "post-warmup draws per chain");
  cmd->add_option("--grid", f.grid, "prediction grid size");
  cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  cmd->add_option("--window", f.window, "aggregation window in days for records input");
  cmd->add_option("--latent-updates", f.latent, "slice sweeps per iteration");
  cmd->add_option("--scalar-updates", f.scalar, "Metropolis sweeps per iteration");
  cmd->add_option("--mu-sd", f.mu_sd, "prior sd of mu");
  cmd->add_option("--sigma-sd", f.sigma_sd, "half-normal scale of sigma");
  cmd->add_option("--ell-tail-prob", f.ell_tail, "tail mass for the lengthscale prior fit");
  cmd->add_option("--ell-shape", f.ell_shape, "explicit inverse-gamma shape for ell");
  cmd->add_option("--ell-rate", f.ell_rate, "explicit inverse-gamma rate for ell");
  cmd->add_option("--target-accept", f.target_accept, "Metropolis target acceptance rate");
  cmd->add_option("--jitter-rel", f.jitter_rel, "diagonal jitter relative to sigma^2");
  cmd->add_flag("--strict", f.strict, "exit 3 when convergence diagnostics flag parameters");
}

RunConfig merge_fit_config(const CLI::App* cmd, const FitFlags& f) {
  RunConfig cfg;
  if (cmd->count("--config")) cfg = pooltrend::load_run_config(f.config_path);
  if (cmd->count("--data")) cfg.data_path = f.data;
  if (cmd->count("--layout")) {
    if (!pooltrend::known_layout(f.layout))
      throw std::runtime_error("unknown layout '" + f.layout + "'");
    cfg.layout = f.layout;
  }
  if (cmd->count("--out")) cfg.out_dir = f.out;
  if (cmd->count("--seed")) cfg.seed = f.seed;
  if (cmd->count("--chains")) cfg.chains = f.chains;
  if (cmd->count("--warmup")) cfg.warmup = f.warmup;
  if (cmd->count("--draws")) cfg.draws = f.draws;
  if (cmd->count("--grid")) cfg.predict_grid = f.grid;
  if (cmd->count("--threads")) cfg.threads = f.threads;
  if (cmd->count("--window")) cfg.window_days = f.window;
  if (cmd->count("--latent-updates")) cfg.latent_updates = f.latent;
  if (cmd->count("--scalar-updates")) cfg.scalar_updates = f.scalar;
  if (cmd->count("--mu-sd")) cfg.prior_mu_sd = f.mu_sd;
  if (cmd->count("--sigma-sd")) cfg.prior_sigma_sd = f.sigma_sd;
  if (cmd->count("--ell-tail-prob")) cfg.prior_ell_tail_prob = f.ell_tail;
  if (cmd->count("--ell-shape")) cfg.prior_ell_shape = f.ell_shape;
  if (cmd->count("--ell-rate")) cfg.prior_ell_rate = f.ell_rate;
  if (cmd->count("--target-accept")) cfg.target_accept = f.target_accept;
  if (cmd->count("--jitter-rel")) cfg.jitter_rel = f.jitter_rel;
  if (cmd->count("--strict")) cfg.strict = f.strict;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-varying prevalence estimation from pooled test results"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "generate a synthetic study");
  pooltrend::SimulateArgs sim;
  std::uint64_t sim_seed = 0;
  int sim_times = 0, sim_n = 0, sim_m = 0;
  double sim_span = 0, sim_sigma = 0, sim_ell = 0, sim_mu = 0;
  simulate->add_option("--preset", sim.preset, "study1 | study2");
  simulate->add_option("--seed", sim_seed, "simulation seed (required)");
  simulate->add_option("--out", sim.out_dir, "output directory");
  simulate->add_option("--times", sim_times, "custom: number of evenly spaced times");
  simulate->add_option("--span", sim_span, "custom: interval span in days");
  simulate->add_option("--n", sim_n, "individuals per time");
  simulate->add_option("--m", sim_m, "pool size");
  simulate->add_option("--sigma", sim_sigma, "true GP amplitude");
  simulate->add_option("--ell", sim_ell, "true GP lengthscale");
  simulate->add_option("--mu", sim_mu, "true probit-scale mean");

  // pool
  auto* pool = app.add_subcommand("pool", "construct hypothetical pools from individual data");
  pooltrend::PoolArgs poolargs;
  std::uint64_t pool_seed = 0;
  pool->add_option("--records", poolargs.records_path, "raw records CSV (site,date,result)");
  pool->add_option("--individual", poolargs.individual_path, "aggregated counts CSV");
  pool->add_option("--window", poolargs.window_days, "aggregation window in days");
  pool->add_option("--m-star", poolargs.m_star, "target pool size")->required();
  pool->add_option("--seed", pool_seed, "pooling seed (required)");
  pool->add_option("--out", poolargs.out_dir, "output directory");
  bool no_subsample = false;
  pool->add_flag("--no-subsample", no_subsample, "skip the budget-matched subsample output");

  // fit
  auto* fit = app.add_subcommand("fit", "fit the latent GP prevalence model");
  FitFlags fitflags;
  add_fit_options(fit, fitflags);

  // compare
  auto* compare = app.add_subcommand("compare", "tabulate fits against each other and truth");
  pooltrend::CompareArgs cmpargs;
  std::vector<std::string> fit_specs;
  compare->add_option("--fit", fit_specs, "label=fit_dir (repeatable)")->required();
  compare->add_option("--truth", cmpargs.truth_path, "truth.csv for MAE");
  compare->add_option("--out", cmpargs.out_dir, "output directory");

  // resample-study
  auto* resample = app.add_subcommand("resample-study",
                                      "replicate pooling/subsampling variability study");
  FitFlags resflags;
  add_fit_options(resample, resflags);
  pooltrend::ResampleStudyArgs resargs;
  resample->add_option("--m-star", resargs.m_star, "target pool size");
  resample->add_option("--replicates", resargs.replicates, "number of replicates");
  resample->add_flag("--skip-individual", resargs.skip_individual,
                     "pooled arm only, no subsampled fits");

  // summarize
  auto* summarize = app.add_subcommand("summarize", "re-summarize existing draws");
  pooltrend::SummarizeArgs sumargs;
  std::uint64_t sum_seed = 0;
  summarize->add_option("--draws", sumargs.draws_path, "draws.csv from a fit")->required();
  summarize->add_option("--data", sumargs.data_path, "data CSV the fit used")->required();
  summarize->add_option("--layout", sumargs.layout, "data layout");
  summarize->add_option("--window", sumargs.window_days, "aggregation window for records input");
  summarize->add_option("--grid", sumargs.grid, "prediction grid size");
  summarize->add_option("--seed", sum_seed, "prediction noise seed (required)");
  summarize->add_option("--out", sumargs.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return pooltrend::kExitInputError;
  }

  try {
    if (simulate->parsed()) {
      if (simulate->count("--seed")) sim.seed = sim_seed;
      if (simulate->count("--times")) sim.times = sim_times;
      if (simulate->count("--span")) sim.span = sim_span;
      if (simulate->count("--n")) sim.n_per_time = sim_n;
      if (simulate->count("--m")) sim.m = sim_m;
      if (simulate->count("--sigma")) sim.sigma = sim_sigma;
      if (simulate->count("--ell")) sim.ell = sim_ell;
      if (simulate->count("--mu")) sim.mu = sim_mu;
      return pooltrend::cmd_simulate(sim);
    }
    if (pool->parsed()) {
      if (pool->count("--seed")) poolargs.seed = pool_seed;
      poolargs.emit_subsample = !no_subsample;
      return pooltrend::cmd_pool(poolargs);
    }
    if (fit->parsed()) return pooltrend::cmd_fit(merge_fit_config(fit, fitflags));
    if (compare->parsed()) {
      for (const auto& spec : fit_specs) {
        auto eq = spec.find('=');
        if (eq == std::string::npos) {
          std::cerr << "error: --fit expects label=dir, got '" << spec << "'\n";
          return pooltrend::kExitInputError;
        }
        cmpargs.fits.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
      }
      return pooltrend::cmd_compare(cmpargs);
    }
    if (resample->parsed()) {
      resargs.base = merge_fit_config(resample, resflags);
      return pooltrend::cmd_resample_study(resargs);
    }
    if (summarize->parsed()) {
      if (summarize->count("--seed")) sumargs.seed = sum_seed;
      return pooltrend::cmd_summarize(sumargs);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pooltrend::kExitInputError;
  }
  return pooltrend::kExitInputError;
}

#include "pooltrend/commands.hpp"

#include "pooltrend/csv.hpp"
#include "pooltrend/diagnostics.hpp"
#include "pooltrend/mcmc.hpp"
#include "pooltrend/observation.hpp"
#include "pooltrend/runio.hpp"
#include "pooltrend/stats.hpp"
#include "pooltrend/studygen.hpp"
#include "pooltrend/summary.hpp"
#include "pooltrend/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace pooltrend {

namespace {

// stream ids for seeds derived from the run seed (chains use 1..chains)
constexpr std::uint64_t kPredictStream = 0xffff0001ULL;
constexpr std::uint64_t kSubsampleStream = 0xffff0002ULL;
constexpr std::uint64_t kReplicateBase = 0xffff1000ULL;

void ensure_outdir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

int fail_input(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  return kExitInputError;
}

// Pools produced by make_pools come out in the efficient-general layout;
// collapse to ideal when every remainder pool is empty.
PooledObservations tidy_pooled(const PooledObservations& pooled) {
  auto gen = expand_to_general(pooled);
  if (auto ideal = try_ideal(gen)) return PooledObservations::make(pooled.grid, std::move(*ideal));
  return pooled;
}

void write_pooled_csv(const std::string& path, const PooledObservations& pooled) {
  if (std::holds_alternative<IdealLayout>(pooled.layout))
    write_pooled_ideal_csv(path, pooled);
  else if (std::holds_alternative<EfficientGeneralLayout>(pooled.layout))
    write_pooled_efficient_csv(path, pooled);
  else
    write_pooled_general_csv(path, pooled);
}

std::string pooled_layout_name(const PooledObservations& pooled) {
  if (std::holds_alternative<IdealLayout>(pooled.layout)) return "ideal";
  if (std::holds_alternative<EfficientGeneralLayout>(pooled.layout)) return "efficient-general";
  return "general";
}

Dataset load_dataset(const RunConfig& cfg) {
  auto kind = sniff_csv(cfg.data_path);
  if (cfg.layout == "individual") {
    if (kind == CsvKind::Records)
      return aggregate_by_window(read_records_csv(cfg.data_path), cfg.window_days);
    if (kind == CsvKind::Ideal) return read_individual_csv(cfg.data_path);
    throw std::runtime_error("layout 'individual' needs a records file (site,date,result) or "
                             "counts file (time,k,m,y); got a different header in " +
                             cfg.data_path);
  }
  if (cfg.layout == "general") {
    if (kind != CsvKind::General)
      throw std::runtime_error("layout 'general' does not match the header of " + cfg.data_path);
    return read_pooled_general_csv(cfg.data_path);
  }
  if (cfg.layout == "ideal") {
    if (kind != CsvKind::Ideal)
      throw std::runtime_error("layout 'ideal' does not match the header of " + cfg.data_path);
    return read_pooled_ideal_csv(cfg.data_path);
  }
  if (cfg.layout == "efficient-general") {
    if (kind != CsvKind::Efficient)
      throw std::runtime_error("layout 'efficient-general' does not match the header of " +
                               cfg.data_path);
    return read_pooled_efficient_csv(cfg.data_path);
  }
  throw std::runtime_error("unknown layout '" + cfg.layout + "'");
}

// Individual-level data with identities: records are aggregated; a counts
// file is rehydrated into per-time result multisets (order is irrelevant,
// downstream pooling shuffles).
IndividualSamples load_samples(const std::string& path, int window_days) {
  auto kind = sniff_csv(path);
  if (kind == CsvKind::Records)
    return aggregate_by_window_samples(read_records_csv(path), window_days);
  if (kind != CsvKind::Ideal)
    throw std::runtime_error("individual-level input must be records (site,date,result) or "
                             "counts (time,k,m,y); got a different header in " + path);
  auto counts = read_individual_csv(path);
  IndividualSamples out;
  out.grid = counts.grid;
  out.results.reserve(counts.counts.size());
  for (const auto& c : counts.counts) {
    std::vector<std::uint8_t> r(c.k, 0);
    std::fill(r.begin(), r.begin() + c.y, std::uint8_t{1});
    out.results.push_back(std::move(r));
  }
  return out;
}

SamplerConfig sampler_from(const RunConfig& cfg) {
  SamplerConfig sc;
  sc.chains = cfg.chains;
  sc.warmup = cfg.warmup;
  sc.draws = cfg.draws;
  sc.seed = *cfg.seed;
  sc.target_accept = cfg.target_accept;
  sc.jitter_rel = cfg.jitter_rel;
  sc.latent_updates = cfg.latent_updates;
  sc.scalar_updates = cfg.scalar_updates;
  sc.threads = cfg.threads;
  return sc;
}

PriorConfig prior_from(const RunConfig& cfg) {
  PriorConfig pc;
  pc.mu_sd = cfg.prior_mu_sd;
  pc.sigma_sd = cfg.prior_sigma_sd;
  pc.ell_tail_prob = cfg.prior_ell_tail_prob;
  pc.ell_shape = cfg.prior_ell_shape;
  pc.ell_rate = cfg.prior_ell_rate;
  return pc;
}

struct FitProducts {
  PosteriorDraws draws;
  Diagnostics diag;
  CurveSummary summary;
  Priors priors;
};

FitProducts run_fit_pipeline(const Dataset& data, const RunConfig& cfg) {
  FitProducts out;
  out.priors = resolve_priors(prior_from(cfg), dataset_grid(data));
  out.draws = run_mcmc(data, sampler_from(cfg), out.priors);
  out.diag = diagnose(out.draws);
  auto grid_pred = prediction_grid(dataset_grid(data), cfg.predict_grid);
  out.summary = summarize_curve(out.draws, dataset_grid(data), grid_pred,
                                derive_seed(*cfg.seed, kPredictStream), cfg.jitter_rel);
  return out;
}

CurveSummary summary_at_obs(const PosteriorDraws& draws, const TimeGrid& grid) {
  return summarize_curve(draws, grid, grid, 0);
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  std::size_t lo = hi - 1;
  double f = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + f * (ys[hi] - ys[lo]);
}

}  // namespace

int cmd_simulate(const SimulateArgs& args) {
  try {
    if (!args.seed) return fail_input("simulate: --seed is required");
    SyntheticStudyConfig cfg;
    if (args.preset == "study1")
      cfg = study1_preset();
    else if (args.preset == "study2")
      cfg = study2_preset();
    else if (args.preset.empty()) {
      if (!args.times || !args.span || !args.n_per_time || !args.m || !args.sigma || !args.ell ||
          !args.mu)
        return fail_input(
            "simulate: without --preset, all of --times --span --n --m --sigma --ell --mu are "
            "required");
      std::vector<double> times(*args.times);
      for (int i = 0; i < *args.times; ++i)
        times[i] = *args.span * static_cast<double>(i) / std::max(*args.times - 1, 1);
      cfg.grid = TimeGrid::from_times(std::move(times), *args.span);
    } else {
      return fail_input("simulate: unknown preset '" + args.preset + "'");
    }
    if (args.times && !args.preset.empty())
      return fail_input("simulate: --times cannot override a preset grid");
    if (args.n_per_time) cfg.n_per_time = *args.n_per_time;
    if (args.m) cfg.m = *args.m;
    if (args.sigma) cfg.true_theta.sigma = *args.sigma;
    if (args.ell) cfg.true_theta.ell = *args.ell;
    if (args.mu) cfg.true_mu = *args.mu;

    ensure_outdir(args.out_dir);
    auto study = generate_synthetic(cfg, *args.seed);
    auto pooled = tidy_pooled(study.pooled);

    write_truth_csv(join(args.out_dir, "truth.csv"), study.truth);
    write_individual_csv(join(args.out_dir, "individual.csv"), study.samples.counts());
    write_pooled_csv(join(args.out_dir, "pooled.csv"), pooled);
    write_plan_json(join(args.out_dir, "plan.json"), study.plan, study.truth.grid);

    nlohmann::ordered_json manifest;
    manifest["command"] = "simulate";
    manifest["preset"] = args.preset;
    manifest["seed"] = *args.seed;
    manifest["out"] = args.out_dir;
    manifest["times"] = cfg.grid.size();
    manifest["interval_span"] = cfg.grid.interval_span;
    manifest["n_per_time"] = cfg.n_per_time;
    manifest["m"] = cfg.m;
    manifest["true_sigma"] = cfg.true_theta.sigma;
    manifest["true_ell"] = cfg.true_theta.ell;
    manifest["true_mu"] = cfg.true_mu;
    manifest["pooled_layout"] = pooled_layout_name(pooled);
    std::ofstream mf(join(args.out_dir, "manifest.json"));
    mf << manifest.dump(2) << "\n";

    std::cout << "simulate: wrote truth.csv, individual.csv, pooled.csv ("
              << pooled_layout_name(pooled) << "), plan.json to " << args.out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_input(e.what());
  }
}

int cmd_pool(const PoolArgs& args) {
  try {
    if (!args.seed) return fail_input("pool: --seed is required");
    if (args.m_star < 2) return fail_input("pool: --m-star must be >= 2");
    if (args.records_path.empty() == args.individual_path.empty())
      return fail_input("pool: exactly one of --records or --individual is required");

    const std::string& src =
        args.records_path.empty() ? args.individual_path : args.records_path;
    auto samples = load_samples(src, args.window_days);
    if (samples.grid.size() == 0) return fail_input("pool: input has no observations");

    ensure_outdir(args.out_dir);
    auto [plan, pooled_raw] = make_pools(samples, args.m_star, *args.seed);
    auto pooled = tidy_pooled(pooled_raw);
    write_pooled_csv(join(args.out_dir, "pooled.csv"), pooled);
    write_plan_json(join(args.out_dir, "plan.json"), plan, samples.grid);
    write_individual_csv(join(args.out_dir, "individual.csv"), samples.counts());
    if (args.emit_subsample) {
      auto budgets = pool_test_counts(samples, args.m_star);
      auto sub = subsample_budget(samples, budgets, derive_seed(*args.seed, kSubsampleStream));
      write_individual_csv(join(args.out_dir, "subsample.csv"), sub.counts());
    }

    nlohmann::ordered_json manifest;
    manifest["command"] = "pool";
    manifest["input"] = src;
    manifest["window_days"] = args.window_days;
    manifest["m_star"] = args.m_star;
    manifest["seed"] = *args.seed;
    manifest["out"] = args.out_dir;
    manifest["pooled_layout"] = pooled_layout_name(pooled);
    manifest["emit_subsample"] = args.emit_subsample;
    std::ofstream mf(join(args.out_dir, "manifest.json"));
    mf << manifest.dump(2) << "\n";

    std::cout << "pool: wrote pooled.csv (" << pooled_layout_name(pooled)
              << "), plan.json, individual.csv"
              << (args.emit_subsample ? ", subsample.csv" : "") << " to " << args.out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_input(e.what());
  }
}

int cmd_fit(const RunConfig& config) {
  RunConfig cfg = config;
  Dataset data;
  try {
    if (!cfg.seed) return fail_input("fit: sampler.seed is required (no nondeterministic runs)");
    data = load_dataset(cfg);
    auto report = validate_dataset(data);
    if (!report.pass()) return fail_input("fit: dataset failed validation:\n" + report.str());
    // equal-size pools route to the cheaper count likelihoods; the posterior
    // kernel only shifts by a constant, so draws are unaffected
    if (auto* pooled = std::get_if<PooledObservations>(&data)) *pooled = compact_layout(*pooled);
    ensure_outdir(cfg.out_dir);
  } catch (const std::exception& e) {
    return fail_input(e.what());
  }

  try {
    auto products = run_fit_pipeline(data, cfg);

    // echo the resolved lengthscale prior so reruns skip the fit
    cfg.prior_ell_shape = products.priors.ell_shape;
    cfg.prior_ell_rate = products.priors.ell_rate;

    write_draws_csv(join(cfg.out_dir, "draws.csv"), products.draws);
    write_summary_csv(join(cfg.out_dir, "summary.csv"), products.summary);
    write_diagnostics_json(join(cfg.out_dir, "diagnostics.json"), products.diag);

    PlotSpec plot;
    plot.summary = products.summary;
    plot.rug_times = dataset_grid(data).times;
    plot.title = "posterior prevalence";
    write_curve_svg(join(cfg.out_dir, "plot.svg"), plot);

    std::ofstream mf(join(cfg.out_dir, "manifest.json"));
    mf << config_to_manifest(cfg, "fit").dump(2) << "\n";

    if (products.diag.any_flagged()) {
      std::cerr << "warning: convergence diagnostics flagged parameters (see diagnostics.json)"
                << "\n";
      if (cfg.strict) return kExitStrictDiagnostics;
    }
    std::cout << "fit: wrote draws.csv, summary.csv, diagnostics.json, plot.svg to "
              << cfg.out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_input(e.what());
  }
}

int cmd_compare(const CompareArgs& args) {
  try {
    if (args.fits.empty()) return fail_input("compare: at least one --fit label=dir is required");
    ensure_outdir(args.out_dir);

    TruthCurve truth;
    bool have_truth = !args.truth_path.empty();
    if (have_truth) truth = read_truth_csv(args.truth_path);

    struct Row {
      std::string label;
      double mean, lo, hi;
    };
    std::vector<std::string> params = {"ell", "sigma", "mu"};
    std::vector<std::vector<Row>> table(params.size());
    std::vector<std::pair<std::string, double>> maes;

    for (const auto& [label, dir] : args.fits) {
      auto draws = read_draws_csv(join(dir, "draws.csv"));
      for (std::size_t pi = 0; pi < params.size(); ++pi) {
        auto flat = draws.flat_scalar(params[pi]);
        table[pi].push_back(
            {label, mean(flat), percentile(flat, 0.025), percentile(flat, 0.975)});
      }
      if (have_truth) {
        auto summary = read_summary_csv(join(dir, "summary.csv"));
        double mae = 0.0;
        for (std::size_t i = 0; i < truth.times.size(); ++i)
          mae += std::abs(interpolate(summary.times, summary.median, truth.times[i]) -
                          truth.p[i]);
        mae /= static_cast<double>(truth.times.size());
        maes.emplace_back(label, mae);
      }
    }

    std::ofstream csv(join(args.out_dir, "comparison.csv"));
    csv << "param,strategy,mean,lo95,hi95\n";
    for (std::size_t pi = 0; pi < params.size(); ++pi)
      for (const auto& row : table[pi])
        csv << params[pi] << "," << row.label << "," << fmt_double(row.mean) << ","
            << fmt_double(row.lo) << "," << fmt_double(row.hi) << "\n";
    if (have_truth) {
      std::ofstream mae_csv(join(args.out_dir, "mae.csv"));
      mae_csv << "strategy,mae\n";
      for (const auto& [label, mae] : maes) mae_csv << label << "," << fmt_double(mae) << "\n";
    }

    std::ofstream txt(join(args.out_dir, "comparison.txt"));
    txt << "param";
    for (const auto& [label, dir] : args.fits) txt << "\t" << label;
    txt << "\n";
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      txt << params[pi];
      for (const auto& row : table[pi]) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "\t%.3g (%.3g, %.3g)", row.mean, row.lo, row.hi);
        txt << buf;
      }
      txt << "\n";
    }
    if (have_truth) {
      txt << "mae";
      for (const auto& [label, mae] : maes) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "\t%.4g", mae);
        txt << buf;
      }
      txt << "\n";
    }
    nlohmann::ordered_json manifest;
    manifest["command"] = "compare";
    nlohmann::ordered_json fits = nlohmann::ordered_json::array();
    for (const auto& [label, dir] : args.fits)
      fits.push_back(nlohmann::ordered_json{{"label", label}, {"dir", dir}});
    manifest["fits"] = std::move(fits);
    manifest["truth"] = args.truth_path;
    manifest["out"] = args.out_dir;
    std::ofstream mf(join(args.out_dir, "manifest.json"));
    mf << manifest.dump(2) << "\n";

    std::cout << "compare: wrote comparison.csv" << (have_truth ? ", mae.csv" : "")
              << ", comparison.txt to " << args.out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_input(e.what());
  }
}

int cmd_resample_study(const ResampleStudyArgs& args) {
  try {
    const RunConfig& cfg = args.base;
    if (!cfg.seed) return fail_input("resample-study: sampler.seed is required");
    if (args.replicates < 1) return fail_input("resample-study: --replicates must be >= 1");
    auto samples = load_samples(cfg.data_path, cfg.window_days);
    if (samples.grid.size() < 2)
      return fail_input("resample-study: need at least 2 observation times");
    ensure_outdir(cfg.out_dir);

    auto priors = resolve_priors(prior_from(cfg), samples.grid);

    // full-data m=1 background fit
    Dataset full{samples.counts()};
    auto full_cfg = sampler_from(cfg);
    auto full_draws = run_mcmc(full, full_cfg, priors);
    auto full_band = summary_at_obs(full_draws, samples.grid);
    write_summary_csv(join(cfg.out_dir, "full_summary.csv"), full_band);

    auto reps = resample_study(samples, args.m_star, args.replicates, *cfg.seed);

    std::ofstream med(join(cfg.out_dir, "medians.csv"));
    med << "arm,replicate,time,median\n";
    std::vector<OverlayCurve> pooled_curves, individual_curves;
    for (int r = 0; r < args.replicates; ++r) {
      auto fit_one = [&](const Dataset& d, std::uint64_t stream) {
        auto sc = sampler_from(cfg);
        sc.seed = derive_seed(*cfg.seed, kReplicateBase + stream);
        auto draws = run_mcmc(d, sc, priors);
        return summary_at_obs(draws, samples.grid);
      };
      auto pooled_sum = fit_one(Dataset{reps[r].pooled}, 2 * static_cast<std::uint64_t>(r));
      pooled_curves.push_back({pooled_sum.times, pooled_sum.median});
      for (std::size_t i = 0; i < pooled_sum.times.size(); ++i)
        med << "pooled," << (r + 1) << "," << fmt_double(pooled_sum.times[i]) << ","
            << fmt_double(pooled_sum.median[i]) << "\n";
      if (!args.skip_individual) {
        auto sub_sum = fit_one(Dataset{reps[r].subsample.counts()},
                               2 * static_cast<std::uint64_t>(r) + 1);
        individual_curves.push_back({sub_sum.times, sub_sum.median});
        for (std::size_t i = 0; i < sub_sum.times.size(); ++i)
          med << "subsampled," << (r + 1) << "," << fmt_double(sub_sum.times[i]) << ","
              << fmt_double(sub_sum.median[i]) << "\n";
      }
    }

    PlotSpec pooled_plot;
    pooled_plot.summary = full_band;
    pooled_plot.rug_times = samples.grid.times;
    pooled_plot.overlays = pooled_curves;
    pooled_plot.title = "pooled replicate medians over full-data band";
    write_curve_svg(join(cfg.out_dir, "overlay_pooled.svg"), pooled_plot);
    if (!args.skip_individual) {
      PlotSpec ind_plot;
      ind_plot.summary = full_band;
      ind_plot.rug_times = samples.grid.times;
      ind_plot.overlays = individual_curves;
      ind_plot.title = "subsampled replicate medians over full-data band";
      write_curve_svg(join(cfg.out_dir, "overlay_individual.svg"), ind_plot);
    }

    auto manifest = config_to_manifest(cfg, "resample-study");
    manifest["m_star"] = args.m_star;
    manifest["replicates"] = args.replicates;
    manifest["skip_individual"] = args.skip_individual;
    std::ofstream mf(join(cfg.out_dir, "manifest.json"));
    mf << manifest.dump(2) << "\n";

    std::cout << "resample-study: wrote medians.csv, full_summary.csv and overlays to "
              << cfg.out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_input(e.what());
  }
}

int cmd_summarize(const SummarizeArgs& args) {
  try {
    if (!args.seed) return fail_input("summarize: --seed is required");
    RunConfig loader;
    loader.data_path = args.data_path;
    loader.layout = args.layout;
    loader.window_days = args.window_days;
    auto data = load_dataset(loader);
    const auto& grid = dataset_grid(data);

    auto draws = read_draws_csv(args.draws_path);
    if (draws.n_latent() != 0 && !draws.chains.empty() &&
        draws.chains.front().w.cols() != static_cast<Eigen::Index>(grid.size()))
      return fail_input("summarize: draws have " +
                        std::to_string(draws.chains.front().w.cols()) +
                        " latent columns but the data grid has " + std::to_string(grid.size()));
    draws.times = grid.times;

    ensure_outdir(args.out_dir);
    auto grid_pred = prediction_grid(grid, args.grid);
    auto summary = summarize_curve(draws, grid, grid_pred, derive_seed(*args.seed, kPredictStream));
    write_summary_csv(join(args.out_dir, "summary.csv"), summary);

    PlotSpec plot;
    plot.summary = summary;
    plot.rug_times = grid.times;
    plot.title = "posterior prevalence";
    write_curve_svg(join(args.out_dir, "plot.svg"), plot);

    nlohmann::ordered_json manifest;
    manifest["command"] = "summarize";
    manifest["draws"] = args.draws_path;
    manifest["data"] = args.data_path;
    manifest["layout"] = args.layout;
    manifest["window_days"] = args.window_days;
    manifest["grid"] = args.grid;
    manifest["seed"] = *args.seed;
    manifest["out"] = args.out_dir;
    std::ofstream mf(join(args.out_dir, "manifest.json"));
    mf << manifest.dump(2) << "\n";

    std::cout << "summarize: wrote summary.csv, plot.svg to " << args.out_dir << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    return fail_input(e.what());
  }
}

}  // namespace pooltrend

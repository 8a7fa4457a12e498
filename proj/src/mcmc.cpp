#include "pooltrend/mcmc.hpp"

#include "pooltrend/observation.hpp"
#include "pooltrend/rng.hpp"
#include "pooltrend/special.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pooltrend {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 6.283185307179586476925286766559;

double data_loglik(const Dataset& data, const Eigen::VectorXd& w, double mu) {
  std::vector<double> x(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) x[i] = w(i) + mu;
  return loglik(PrevalenceCurve::from_latent(x), data);
}

// crude probit-scale initial mean: overall pool positivity rate pulled back
// through the prevalence transform at the median pool size
double crude_init_mu(const Dataset& data) {
  long total = 0, positive = 0;
  std::vector<int> sizes;
  if (const auto* ind = std::get_if<IndividualObservations>(&data)) {
    for (const auto& c : ind->counts) {
      total += c.k;
      positive += c.y;
      sizes.push_back(1);
    }
  } else {
    auto lay = expand_to_general(std::get<PooledObservations>(data));
    for (const auto& pools : lay.pools)
      for (const auto& p : pools) {
        ++total;
        positive += p.result;
        sizes.push_back(p.size);
      }
  }
  std::sort(sizes.begin(), sizes.end());
  int med_m = sizes.empty() ? 1 : sizes[sizes.size() / 2];
  double rate = static_cast<double>(positive) / static_cast<double>(std::max<long>(total, 1));
  double lo = 0.5 / (static_cast<double>(total) + 1.0);
  rate = std::clamp(rate, lo, 1.0 - lo);
  return normal_quantile(invert_pool_probability(rate, med_m));
}

struct ScalarState {
  double mu = 0.0;
  double log_sigma = 0.0;
  double log_ell = 0.0;

  GpHyperparams theta() const { return {std::exp(log_sigma), std::exp(log_ell)}; }
};

// prior terms plus the log-scale Jacobians of whichever coordinates move
double scalar_target_prior(const ScalarState& s, const Priors& priors, bool jac_sigma,
                           bool jac_ell) {
  double lp = log_prior(s.mu, s.theta(), priors);
  if (jac_sigma) lp += s.log_sigma;
  if (jac_ell) lp += s.log_ell;
  return lp;
}

class ChainRunner {
 public:
  ChainRunner(const Dataset& data, const SamplerConfig& cfg, const Priors& priors, int chain_idx)
      : data_(data),
        cfg_(cfg),
        priors_(priors),
        rng_(derive_seed(cfg.seed, static_cast<std::uint64_t>(chain_idx) + 1)),
        n_(static_cast<Eigen::Index>(dataset_grid(data).size())) {
    if (cfg_.sample_mu) active_.push_back(0);
    if (cfg_.sample_sigma) active_.push_back(1);
    if (cfg_.sample_ell) active_.push_back(2);
  }

  ChainDraws run() {
    initialize();
    ChainDraws out;
    out.mu.reserve(cfg_.draws);
    out.sigma.reserve(cfg_.draws);
    out.ell.reserve(cfg_.draws);
    out.w.resize(cfg_.draws, n_);
    out.z.resize(cfg_.draws, n_);

    const int total = cfg_.warmup + cfg_.draws;
    for (int iter = 0; iter < total; ++iter) {
      for (int u = 0; u < cfg_.latent_updates; ++u) ess_update();
      if (!active_.empty())
        for (int u = 0; u < cfg_.scalar_updates; ++u) mh_update(iter < cfg_.warmup);
      if (iter >= cfg_.warmup) {
        int d = iter - cfg_.warmup;
        auto theta = state_.theta();
        out.mu.push_back(state_.mu);
        out.sigma.push_back(theta.sigma);
        out.ell.push_back(theta.ell);
        out.w.row(d) = (chol_ * z_).transpose();
        out.z.row(d) = z_.transpose();
      }
    }
    out.mh_accept_rate =
        mh_total_ > 0 ? static_cast<double>(mh_accepts_) / static_cast<double>(mh_total_) : 0.0;
    out.ess_avg_proposals =
        ess_updates_ > 0 ? static_cast<double>(ess_proposals_) / static_cast<double>(ess_updates_)
                         : 0.0;
    return out;
  }

 private:
  void rebuild_chol(const GpHyperparams& theta) {
    double jitter = cfg_.jitter_rel * theta.sigma * theta.sigma;
    chol_ = build_covariance(dataset_grid(data_), theta, jitter).chol_lower();
  }

  void initialize() {
    auto theta0 = cfg_.init_theta.value_or(GpHyperparams{
        priors_.sigma_sd * 0.6744897501960817,  // half-normal median
        invgamma_median(priors_.ell_shape, priors_.ell_rate)});
    double mu0 = cfg_.init_mu.value_or(crude_init_mu(data_));
    z_ = Eigen::VectorXd::Zero(n_);
    state_.mu = mu0;
    state_.log_sigma = std::log(theta0.sigma);
    state_.log_ell = std::log(theta0.ell);
    rebuild_chol(theta0);

    for (int attempt = 0; attempt < 10; ++attempt) {
      loglik_ = data_loglik(data_, chol_ * z_, state_.mu);
      prior_term_ = scalar_target_prior(state_, priors_, cfg_.sample_sigma, cfg_.sample_ell);
      if (std::isfinite(loglik_) && std::isfinite(prior_term_)) return;
      state_.mu = mu0 + 0.25 * (attempt + 1) * (attempt % 2 == 0 ? 1.0 : -1.0);
    }
    std::ostringstream os;
    os << "run_mcmc: non-finite log-posterior at initialization (mu0=" << mu0
       << ", sigma0=" << theta0.sigma << ", ell0=" << theta0.ell << ", loglik=" << loglik_
       << ")";
    throw std::runtime_error(os.str());
  }

  void ess_update() {
    Eigen::VectorXd nu(n_);
    for (Eigen::Index i = 0; i < n_; ++i) nu(i) = rng_.normal();
    const double log_y = loglik_ + std::log(rng_.uniform_pos());
    double ang = rng_.uniform(0.0, kTwoPi);
    double lo = ang - kTwoPi;
    double hi = ang;
    ++ess_updates_;
    for (int props = 1; props <= 1000; ++props) {
      ++ess_proposals_;
      Eigen::VectorXd z_prop = std::cos(ang) * z_ + std::sin(ang) * nu;
      double ll = data_loglik(data_, chol_ * z_prop, state_.mu);
      if (ll > log_y) {
        z_ = std::move(z_prop);
        loglik_ = ll;
        return;
      }
      if (ang < 0.0)
        lo = ang;
      else
        hi = ang;
      ang = rng_.uniform(lo, hi);
    }
    // bracket collapsed to the current state; keep it
  }

  Eigen::VectorXd active_values() const {
    Eigen::VectorXd v(active_.size());
    for (std::size_t i = 0; i < active_.size(); ++i) {
      switch (active_[i]) {
        case 0: v(i) = state_.mu; break;
        case 1: v(i) = state_.log_sigma; break;
        default: v(i) = state_.log_ell; break;
      }
    }
    return v;
  }

  ScalarState with_active(const Eigen::VectorXd& v) const {
    ScalarState s = state_;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      switch (active_[i]) {
        case 0: s.mu = v(i); break;
        case 1: s.log_sigma = v(i); break;
        default: s.log_ell = v(i); break;
      }
    }
    return s;
  }

  void mh_update(bool adapting) {
    const auto d = static_cast<Eigen::Index>(active_.size());
    if (prop_chol_.size() == 0) {
      prop_chol_ = Eigen::MatrixXd::Identity(d, d) * 0.1;
      adapt_mean_ = Eigen::VectorXd::Zero(d);
      adapt_m2_ = Eigen::MatrixXd::Zero(d, d);
    }

    Eigen::VectorXd eta(d);
    for (Eigen::Index i = 0; i < d; ++i) eta(i) = rng_.normal();
    Eigen::VectorXd v = active_values();
    Eigen::VectorXd v_prop = v + std::exp(log_scale_) * (prop_chol_ * eta);

    double alpha = 0.0;
    bool accepted = false;
    ScalarState prop = with_active(v_prop);
    if (std::abs(prop.log_sigma) < 50.0 && std::abs(prop.log_ell) < 50.0) {
      double prior_prop = scalar_target_prior(prop, priors_, cfg_.sample_sigma, cfg_.sample_ell);
      if (std::isfinite(prior_prop)) {
        bool theta_moved = cfg_.sample_sigma || cfg_.sample_ell;
        Eigen::MatrixXd chol_prop;
        bool ok = true;
        if (theta_moved) {
          try {
            double jit = cfg_.jitter_rel * std::exp(2.0 * prop.log_sigma);
            chol_prop =
                build_covariance(dataset_grid(data_), prop.theta(), jit).chol_lower();
          } catch (const std::runtime_error&) {
            ok = false;
          }
        }
        if (ok) {
          const Eigen::MatrixXd& use_chol = theta_moved ? chol_prop : chol_;
          double ll_prop = data_loglik(data_, use_chol * z_, prop.mu);
          double delta = (prior_prop + ll_prop) - (prior_term_ + loglik_);
          alpha = delta >= 0.0 ? 1.0 : std::exp(delta);
          if (rng_.uniform() < alpha) {
            accepted = true;
            state_ = prop;
            prior_term_ = prior_prop;
            loglik_ = ll_prop;
            if (theta_moved) chol_ = std::move(chol_prop);
          }
        }
      }
    }
    if (!adapting) {
      ++mh_total_;
      if (accepted) ++mh_accepts_;
    }

    if (adapting) {
      ++adapt_n_;
      double gamma = std::pow(static_cast<double>(adapt_n_), -0.7);
      log_scale_ += gamma * (alpha - cfg_.target_accept);
      Eigen::VectorXd cur = active_values();
      Eigen::VectorXd delta1 = cur - adapt_mean_;
      adapt_mean_ += delta1 / static_cast<double>(adapt_n_);
      adapt_m2_ += delta1 * (cur - adapt_mean_).transpose();
      if (adapt_n_ >= 50) {
        Eigen::MatrixXd cov = adapt_m2_ / static_cast<double>(adapt_n_ - 1);
        cov.diagonal().array() += 1e-8;
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() == Eigen::Success) prop_chol_ = llt.matrixL();
      }
    }
  }

  const Dataset& data_;
  const SamplerConfig& cfg_;
  const Priors& priors_;
  Rng rng_;
  Eigen::Index n_;
  std::vector<int> active_;

  ScalarState state_;
  Eigen::VectorXd z_;
  Eigen::MatrixXd chol_;
  double loglik_ = kNegInf;
  double prior_term_ = kNegInf;

  double log_scale_ = 0.0;
  Eigen::MatrixXd prop_chol_;
  Eigen::VectorXd adapt_mean_;
  Eigen::MatrixXd adapt_m2_;
  long adapt_n_ = 0;

  long mh_total_ = 0;
  long mh_accepts_ = 0;
  long ess_updates_ = 0;
  long ess_proposals_ = 0;
};

}  // namespace

std::vector<double> PosteriorDraws::flat_scalar(const std::string& name) const {
  std::vector<double> out;
  for (const auto& chain : chains) {
    const std::vector<double>* src = nullptr;
    if (name == "mu")
      src = &chain.mu;
    else if (name == "sigma")
      src = &chain.sigma;
    else if (name == "ell")
      src = &chain.ell;
    else
      throw std::invalid_argument("flat_scalar: unknown parameter '" + name + "'");
    out.insert(out.end(), src->begin(), src->end());
  }
  return out;
}

std::vector<double> PosteriorDraws::flat_latent(int coord) const {
  std::vector<double> out;
  for (const auto& chain : chains)
    for (Eigen::Index d = 0; d < chain.w.rows(); ++d) out.push_back(chain.w(d, coord));
  return out;
}

double log_posterior(double mu, const GpHyperparams& theta, const Eigen::VectorXd& z,
                     const Dataset& data, const Priors& priors, double jitter) {
  const auto& grid = dataset_grid(data);
  if (static_cast<std::size_t>(z.size()) != grid.size())
    throw std::invalid_argument("log_posterior: z length does not match grid");
  double lp = log_prior(mu, theta, priors);
  if (!std::isfinite(lp)) return kNegInf;
  for (Eigen::Index i = 0; i < z.size(); ++i) lp += normal_logpdf(z(i));
  auto cov = build_covariance(grid, theta, jitter);
  lp += data_loglik(data, cov.chol_lower() * z, mu);
  return lp;
}

PosteriorDraws run_mcmc(const Dataset& data, const SamplerConfig& config, const Priors& priors) {
  if (config.chains < 2) throw std::invalid_argument("run_mcmc: need at least 2 chains");
  if (config.warmup < 0 || config.draws < 1)
    throw std::invalid_argument("run_mcmc: need warmup >= 0 and draws >= 1");
  auto report = validate_dataset(data);
  if (!report.pass())
    throw std::invalid_argument("run_mcmc: dataset failed validation:\n" + report.str());

  PosteriorDraws out;
  out.times = dataset_grid(data).times;
  out.warmup = config.warmup;
  out.draws_per_chain = config.draws;
  out.seed = config.seed;
  out.chains.resize(config.chains);

  int hw = static_cast<int>(std::thread::hardware_concurrency());
  int workers = config.threads > 0 ? config.threads : (hw > 0 ? hw : 1);
  workers = std::min(workers, config.chains);

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  std::atomic<int> next{0};
  auto work = [&]() {
    while (true) {
      int c = next.fetch_add(1);
      if (c >= config.chains) return;
      try {
        ChainRunner runner(data, config, priors, c);
        out.chains[c] = runner.run();
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    threads.reserve(workers);
    for (int t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

}  // namespace pooltrend

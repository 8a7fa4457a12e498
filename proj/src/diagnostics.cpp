#include "pooltrend/diagnostics.hpp"

#include "pooltrend/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pooltrend {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::vector<double>> split_halves(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    std::size_t half = c.size() / 2;
    out.emplace_back(c.begin(), c.begin() + half);
    out.emplace_back(c.end() - half, c.end());
  }
  return out;
}

bool has_degenerate_chain(const std::vector<std::vector<double>>& chains) {
  for (const auto& c : chains) {
    if (c.size() < 2) return true;
    bool constant = std::all_of(c.begin(), c.end(), [&](double v) { return v == c.front(); });
    if (constant) return true;
  }
  return false;
}

// average ranks for ties, then z = Phi^-1((r - 3/8) / (S + 1/4))
std::vector<std::vector<double>> rank_normalize(const std::vector<std::vector<double>>& chains) {
  std::size_t total = 0;
  for (const auto& c : chains) total += c.size();
  std::vector<std::pair<double, std::size_t>> pooled;
  pooled.reserve(total);
  for (std::size_t m = 0, at = 0; m < chains.size(); ++m)
    for (double v : chains[m]) pooled.emplace_back(v, at++);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  std::vector<double> rank(total);
  std::size_t i = 0;
  while (i < total) {
    std::size_t j = i;
    while (j + 1 < total && pooled[j + 1].first == pooled[i].first) ++j;
    double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (std::size_t k = i; k <= j; ++k) rank[pooled[k].second] = avg;
    i = j + 1;
  }

  std::vector<std::vector<double>> out(chains.size());
  const double denom = static_cast<double>(total) + 0.25;
  std::size_t at = 0;
  for (std::size_t m = 0; m < chains.size(); ++m) {
    out[m].resize(chains[m].size());
    for (std::size_t d = 0; d < chains[m].size(); ++d)
      out[m][d] = normal_quantile((rank[at++] - 0.375) / denom);
  }
  return out;
}

struct ChainMoments {
  double mean_var = 0.0;  // W
  double var_plus = 0.0;  // (n-1)/n W + B/n
  std::vector<double> means;
  std::vector<double> vars;
};

ChainMoments moments(const std::vector<std::vector<double>>& chains) {
  ChainMoments mo;
  const auto m = chains.size();
  const auto n = chains.front().size();
  mo.means.resize(m);
  mo.vars.resize(m);
  for (std::size_t c = 0; c < m; ++c) {
    double mu = std::accumulate(chains[c].begin(), chains[c].end(), 0.0) /
                static_cast<double>(n);
    double ss = 0.0;
    for (double v : chains[c]) ss += (v - mu) * (v - mu);
    mo.means[c] = mu;
    mo.vars[c] = ss / static_cast<double>(n - 1);
  }
  mo.mean_var = std::accumulate(mo.vars.begin(), mo.vars.end(), 0.0) / static_cast<double>(m);
  double grand = std::accumulate(mo.means.begin(), mo.means.end(), 0.0) / static_cast<double>(m);
  double b_over_n = 0.0;
  for (double v : mo.means) b_over_n += (v - grand) * (v - grand);
  b_over_n /= static_cast<double>(m - 1);
  mo.var_plus = mo.mean_var * static_cast<double>(n - 1) / static_cast<double>(n) + b_over_n;
  return mo;
}

// biased (1/n) autocovariance at a given lag
double autocov(const std::vector<double>& x, double mean, std::size_t lag) {
  const auto n = x.size();
  double s = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - mean) * (x[i + lag] - mean);
  return s / static_cast<double>(n);
}

double rhat_from_normalized(const std::vector<std::vector<double>>& z) {
  auto mo = moments(z);
  if (mo.mean_var <= 0.0) return kNaN;
  return std::sqrt(mo.var_plus / mo.mean_var);
}

// Geyer initial-monotone-sequence ESS on the (rank-normalized) split chains
double ess_from_normalized(const std::vector<std::vector<double>>& z) {
  const auto m = z.size();
  const auto n = z.front().size();
  auto mo = moments(z);
  if (!(mo.var_plus > 0.0)) return kNaN;

  auto mean_acov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t c = 0; c < m; ++c) s += autocov(z[c], mo.means[c], lag);
    return s / static_cast<double>(m);
  };

  std::vector<double> rho(n, 0.0);
  double rho_even = 1.0;
  rho[0] = rho_even;
  double rho_odd = 1.0 - (mo.mean_var - mean_acov(1)) / mo.var_plus;
  rho[1] = rho_odd;

  std::size_t t = 1;
  while (t + 4 < n && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mo.mean_var - mean_acov(t + 1)) / mo.var_plus;
    rho_odd = 1.0 - (mo.mean_var - mean_acov(t + 2)) / mo.var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[t + 1] = rho_even;
      rho[t + 2] = rho_odd;
    }
    t += 2;
  }
  const std::size_t max_t = t;
  if (rho_even > 0.0 && max_t + 1 < n) rho[max_t + 1] = rho_even;

  for (std::size_t tt = 3; tt + 2 <= max_t; tt += 2) {
    if (rho[tt + 1] + rho[tt + 2] > rho[tt - 1] + rho[tt]) {
      rho[tt + 1] = 0.5 * (rho[tt - 1] + rho[tt]);
      rho[tt + 2] = rho[tt + 1];
    }
  }

  double tau = -1.0;
  for (std::size_t tt = 0; tt < max_t; ++tt) tau += 2.0 * rho[tt];
  if (max_t + 1 < n) tau += rho[max_t + 1];
  const double total = static_cast<double>(m * n);
  if (!(tau > 0.0)) return total;
  return std::min(total / tau, total * std::log10(total));
}

ParamDiag diag_param(const std::vector<std::vector<double>>& chains) {
  ParamDiag out;
  for (const auto& c : chains)
    if (c.size() != chains.front().size())
      throw std::invalid_argument("split-chain estimators need equal-length chains");
  auto halves = split_halves(chains);
  if (has_degenerate_chain(halves)) {
    out.rhat = kNaN;
    out.ess_bulk = kNaN;
    out.degenerate = true;
    out.flagged = true;
    return out;
  }
  auto z = rank_normalize(halves);
  out.rhat = rhat_from_normalized(z);
  out.ess_bulk = ess_from_normalized(z);
  out.flagged = !(out.rhat <= 1.05) || !(out.ess_bulk >= 100.0);
  return out;
}

}  // namespace

bool Diagnostics::any_flagged() const {
  for (const auto& [name, d] : params)
    if (d.flagged) return true;
  return false;
}

const ParamDiag* Diagnostics::find(const std::string& name) const {
  for (const auto& [n, d] : params)
    if (n == name) return &d;
  return nullptr;
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  return diag_param(chains).rhat;
}

double ess_bulk(const std::vector<std::vector<double>>& chains) {
  return diag_param(chains).ess_bulk;
}

Diagnostics diagnose(const PosteriorDraws& draws) {
  if (draws.chains.size() < 2) throw std::invalid_argument("diagnose: need >= 2 chains");
  for (const auto& c : draws.chains) {
    if (c.mu.size() < 100)
      throw std::invalid_argument("diagnose: need >= 100 post-warmup draws per chain");
    if (c.mu.size() != draws.chains.front().mu.size())
      throw std::invalid_argument("diagnose: chains must have equal post-warmup length");
  }

  Diagnostics out;
  auto gather_scalar = [&](auto getter) {
    std::vector<std::vector<double>> chains;
    for (const auto& c : draws.chains) chains.push_back(getter(c));
    return chains;
  };
  out.params.emplace_back("mu", diag_param(gather_scalar([](const ChainDraws& c) { return c.mu; })));
  out.params.emplace_back(
      "sigma", diag_param(gather_scalar([](const ChainDraws& c) { return c.sigma; })));
  out.params.emplace_back(
      "ell", diag_param(gather_scalar([](const ChainDraws& c) { return c.ell; })));
  for (int j = 0; j < draws.n_latent(); ++j) {
    std::vector<std::vector<double>> chains;
    for (const auto& c : draws.chains) {
      std::vector<double> col(c.w.rows());
      for (Eigen::Index d = 0; d < c.w.rows(); ++d) col[d] = c.w(d, j);
      chains.push_back(std::move(col));
    }
    out.params.emplace_back("W_" + std::to_string(j + 1), diag_param(chains));
  }
  for (const auto& c : draws.chains) {
    out.mh_accept_rates.push_back(c.mh_accept_rate);
    out.ess_avg_proposals.push_back(c.ess_avg_proposals);
  }
  return out;
}

}  // namespace pooltrend

#include "pooltrend/runio.hpp"

#include "pooltrend/csv.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

namespace pooltrend {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  return out;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double to_double(const std::string& s, const std::string& path, int line) {
  double v;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw CsvError(path, line, "non-numeric field '" + s + "'");
  return v;
}

nlohmann::ordered_json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

void write_draws_csv(const std::string& path, const PosteriorDraws& draws) {
  auto out = open_out(path);
  out << "chain,draw,mu,sigma,ell";
  for (int j = 1; j <= draws.n_latent(); ++j) out << ",W_" << j;
  out << "\n";
  for (std::size_t c = 0; c < draws.chains.size(); ++c) {
    const auto& chain = draws.chains[c];
    for (std::size_t d = 0; d < chain.mu.size(); ++d) {
      out << (c + 1) << "," << (d + 1) << "," << fmt_double(chain.mu[d]) << ","
          << fmt_double(chain.sigma[d]) << "," << fmt_double(chain.ell[d]);
      for (Eigen::Index j = 0; j < chain.w.cols(); ++j)
        out << "," << fmt_double(chain.w(static_cast<Eigen::Index>(d), j));
      out << "\n";
    }
  }
}

PosteriorDraws read_draws_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw CsvError(path, 1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split_line(line);
  if (header.size() < 5 || header[0] != "chain" || header[1] != "draw" || header[2] != "mu" ||
      header[3] != "sigma" || header[4] != "ell")
    throw CsvError(path, 1, "unknown header '" + line + "'");
  for (std::size_t j = 5; j < header.size(); ++j)
    if (header[j] != "W_" + std::to_string(j - 4))
      throw CsvError(path, 1, "unexpected column '" + header[j] + "'");
  const int n_latent = static_cast<int>(header.size()) - 5;

  std::map<int, std::vector<std::vector<double>>> rows_by_chain;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_line(line);
    if (f.size() != header.size())
      throw CsvError(path, line_no, "wrong field count");
    int chain = static_cast<int>(to_double(f[0], path, line_no));
    std::vector<double> row;
    row.reserve(f.size() - 2);
    for (std::size_t j = 2; j < f.size(); ++j) row.push_back(to_double(f[j], path, line_no));
    rows_by_chain[chain].push_back(std::move(row));
  }

  PosteriorDraws out;
  for (auto& [chain_id, rows] : rows_by_chain) {
    ChainDraws c;
    c.w.resize(static_cast<Eigen::Index>(rows.size()), n_latent);
    c.z.resize(0, n_latent);
    for (std::size_t d = 0; d < rows.size(); ++d) {
      c.mu.push_back(rows[d][0]);
      c.sigma.push_back(rows[d][1]);
      c.ell.push_back(rows[d][2]);
      for (int j = 0; j < n_latent; ++j) c.w(static_cast<Eigen::Index>(d), j) = rows[d][3 + j];
    }
    out.chains.push_back(std::move(c));
  }
  out.draws_per_chain = out.chains.empty() ? 0 : static_cast<int>(out.chains.front().mu.size());
  return out;
}

void write_summary_csv(const std::string& path, const CurveSummary& summary) {
  auto out = open_out(path);
  out << "time,median,lo95,hi95\n";
  for (std::size_t i = 0; i < summary.times.size(); ++i)
    out << fmt_double(summary.times[i]) << "," << fmt_double(summary.median[i]) << ","
        << fmt_double(summary.lo95[i]) << "," << fmt_double(summary.hi95[i]) << "\n";
}

CurveSummary read_summary_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw CsvError(path, 1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time,median,lo95,hi95") throw CsvError(path, 1, "unknown header '" + line + "'");
  CurveSummary out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_line(line);
    if (f.size() != 4) throw CsvError(path, line_no, "expected 4 fields");
    out.times.push_back(to_double(f[0], path, line_no));
    out.median.push_back(to_double(f[1], path, line_no));
    out.lo95.push_back(to_double(f[2], path, line_no));
    out.hi95.push_back(to_double(f[3], path, line_no));
  }
  return out;
}

void write_diagnostics_json(const std::string& path, const Diagnostics& diag) {
  nlohmann::ordered_json doc;
  nlohmann::ordered_json params;
  for (const auto& [name, d] : diag.params) {
    nlohmann::ordered_json p;
    p["rhat"] = finite_or_null(d.rhat);
    p["ess_bulk"] = finite_or_null(d.ess_bulk);
    p["flagged"] = d.flagged;
    if (d.degenerate) p["degenerate"] = true;
    params[name] = std::move(p);
  }
  doc["parameters"] = std::move(params);
  nlohmann::ordered_json chains = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < diag.mh_accept_rates.size(); ++c) {
    nlohmann::ordered_json ch;
    ch["mh_accept_rate"] = finite_or_null(diag.mh_accept_rates[c]);
    ch["ess_avg_proposals"] = finite_or_null(diag.ess_avg_proposals[c]);
    chains.push_back(std::move(ch));
  }
  doc["chains"] = std::move(chains);
  doc["any_flagged"] = diag.any_flagged();
  auto out = open_out(path);
  out << doc.dump(2) << "\n";
}

void write_truth_csv(const std::string& path, const SyntheticTruth& truth) {
  auto out = open_out(path);
  out << "time,W,p\n";
  for (std::size_t i = 0; i < truth.grid.size(); ++i)
    out << fmt_double(truth.grid.times[i]) << ","
        << fmt_double(truth.w(static_cast<Eigen::Index>(i))) << "," << fmt_double(truth.p[i])
        << "\n";
}

TruthCurve read_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line)) throw CsvError(path, 1, "missing header");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time,W,p") throw CsvError(path, 1, "unknown header '" + line + "'");
  TruthCurve out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto f = split_line(line);
    if (f.size() != 3) throw CsvError(path, line_no, "expected 3 fields");
    out.times.push_back(to_double(f[0], path, line_no));
    out.w.push_back(to_double(f[1], path, line_no));
    out.p.push_back(to_double(f[2], path, line_no));
  }
  return out;
}

void write_plan_json(const std::string& path, const PoolingPlan& plan, const TimeGrid& grid) {
  nlohmann::ordered_json doc;
  doc["seed"] = plan.seed;
  doc["m_star"] = plan.m_star;
  nlohmann::ordered_json times = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < plan.assignment.size(); ++i) {
    nlohmann::ordered_json t;
    t["time"] = grid.times[i];
    t["pools"] = plan.assignment[i];
    times.push_back(std::move(t));
  }
  doc["times"] = std::move(times);
  auto out = open_out(path);
  out << doc.dump(2) << "\n";
}

}  // namespace pooltrend

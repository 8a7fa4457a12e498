#include "pooltrend/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pooltrend {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + msg);
}

template <typename T>
T parse_number(const std::string& path, int line, const std::string& value) {
  T v{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size())
    fail(path, line, "invalid numeric value '" + value + "'");
  return v;
}

bool parse_bool(const std::string& path, int line, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  fail(path, line, "invalid boolean value '" + value + "'");
}

void apply_key(RunConfig& cfg, const std::string& path, int line, const std::string& key,
               const std::string& value) {
  if (key == "data")
    cfg.data_path = value;
  else if (key == "layout") {
    if (!known_layout(value)) fail(path, line, "unknown layout '" + value + "'");
    cfg.layout = value;
  } else if (key == "out")
    cfg.out_dir = value;
  else if (key == "window_days")
    cfg.window_days = parse_number<int>(path, line, value);
  else if (key == "threads")
    cfg.threads = parse_number<int>(path, line, value);
  else if (key == "strict")
    cfg.strict = parse_bool(path, line, value);
  else if (key == "prior.mu_sd")
    cfg.prior_mu_sd = parse_number<double>(path, line, value);
  else if (key == "prior.sigma_sd")
    cfg.prior_sigma_sd = parse_number<double>(path, line, value);
  else if (key == "prior.ell_tail_prob")
    cfg.prior_ell_tail_prob = parse_number<double>(path, line, value);
  else if (key == "prior.ell_shape")
    cfg.prior_ell_shape = parse_number<double>(path, line, value);
  else if (key == "prior.ell_rate")
    cfg.prior_ell_rate = parse_number<double>(path, line, value);
  else if (key == "sampler.chains")
    cfg.chains = parse_number<int>(path, line, value);
  else if (key == "sampler.warmup")
    cfg.warmup = parse_number<int>(path, line, value);
  else if (key == "sampler.draws")
    cfg.draws = parse_number<int>(path, line, value);
  else if (key == "sampler.seed")
    cfg.seed = parse_number<std::uint64_t>(path, line, value);
  else if (key == "sampler.target_accept")
    cfg.target_accept = parse_number<double>(path, line, value);
  else if (key == "sampler.jitter_rel")
    cfg.jitter_rel = parse_number<double>(path, line, value);
  else if (key == "sampler.latent_updates")
    cfg.latent_updates = parse_number<int>(path, line, value);
  else if (key == "sampler.scalar_updates")
    cfg.scalar_updates = parse_number<int>(path, line, value);
  else if (key == "predict.grid")
    cfg.predict_grid = parse_number<int>(path, line, value);
  else
    fail(path, line, "unknown key '" + key + "'");
}

}  // namespace

bool known_layout(const std::string& layout) {
  return layout == "general" || layout == "ideal" || layout == "efficient-general" ||
         layout == "individual";
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  // JSON manifest or flat key=value?
  char first = 0;
  in >> std::ws;
  in.get(first);
  in.seekg(0);
  if (first == '{') {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ": invalid manifest JSON: " + e.what());
    }
    return config_from_manifest(doc);
  }

  RunConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) fail(path, line_no, "expected 'key = value'");
    apply_key(cfg, path, line_no, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

nlohmann::ordered_json config_to_manifest(const RunConfig& config, const std::string& command) {
  nlohmann::ordered_json doc;
  doc["command"] = command;
  doc["data"] = config.data_path;
  doc["layout"] = config.layout;
  doc["out"] = config.out_dir;
  doc["window_days"] = config.window_days;
  nlohmann::ordered_json prior;
  prior["mu_sd"] = config.prior_mu_sd;
  prior["sigma_sd"] = config.prior_sigma_sd;
  prior["ell_tail_prob"] = config.prior_ell_tail_prob;
  prior["ell_shape"] = config.prior_ell_shape ? nlohmann::ordered_json(*config.prior_ell_shape)
                                              : nlohmann::ordered_json(nullptr);
  prior["ell_rate"] = config.prior_ell_rate ? nlohmann::ordered_json(*config.prior_ell_rate)
                                            : nlohmann::ordered_json(nullptr);
  doc["prior"] = std::move(prior);
  nlohmann::ordered_json sampler;
  sampler["chains"] = config.chains;
  sampler["warmup"] = config.warmup;
  sampler["draws"] = config.draws;
  sampler["seed"] = config.seed ? nlohmann::ordered_json(*config.seed)
                                : nlohmann::ordered_json(nullptr);
  sampler["target_accept"] = config.target_accept;
  sampler["jitter_rel"] = config.jitter_rel;
  sampler["latent_updates"] = config.latent_updates;
  sampler["scalar_updates"] = config.scalar_updates;
  doc["sampler"] = std::move(sampler);
  doc["predict"] = nlohmann::ordered_json{{"grid", config.predict_grid}};
  doc["threads"] = config.threads;
  doc["strict"] = config.strict;
  return doc;
}

RunConfig config_from_manifest(const nlohmann::json& doc) {
  RunConfig cfg;
  try {
    cfg.data_path = doc.at("data").get<std::string>();
    cfg.layout = doc.at("layout").get<std::string>();
    if (!known_layout(cfg.layout))
      throw std::runtime_error("manifest: unknown layout '" + cfg.layout + "'");
    cfg.out_dir = doc.at("out").get<std::string>();
    cfg.window_days = doc.value("window_days", cfg.window_days);
    const auto& prior = doc.at("prior");
    cfg.prior_mu_sd = prior.at("mu_sd").get<double>();
    cfg.prior_sigma_sd = prior.at("sigma_sd").get<double>();
    cfg.prior_ell_tail_prob = prior.at("ell_tail_prob").get<double>();
    if (!prior.at("ell_shape").is_null())
      cfg.prior_ell_shape = prior.at("ell_shape").get<double>();
    if (!prior.at("ell_rate").is_null())
      cfg.prior_ell_rate = prior.at("ell_rate").get<double>();
    const auto& sampler = doc.at("sampler");
    cfg.chains = sampler.at("chains").get<int>();
    cfg.warmup = sampler.at("warmup").get<int>();
    cfg.draws = sampler.at("draws").get<int>();
    if (!sampler.at("seed").is_null()) cfg.seed = sampler.at("seed").get<std::uint64_t>();
    cfg.target_accept = sampler.at("target_accept").get<double>();
    cfg.jitter_rel = sampler.at("jitter_rel").get<double>();
    cfg.latent_updates = sampler.value("latent_updates", cfg.latent_updates);
    cfg.scalar_updates = sampler.value("scalar_updates", cfg.scalar_updates);
    cfg.predict_grid = doc.at("predict").at("grid").get<int>();
    cfg.threads = doc.value("threads", 0);
    cfg.strict = doc.value("strict", false);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("manifest: missing or mistyped field: ") + e.what());
  }
  return cfg;
}

}  // namespace pooltrend

#pragma once

// Solver configuration and its flat key=value text form.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "tnoodl/dict_update.hpp"
#include "tnoodl/error.hpp"
#include "tnoodl/io.hpp"
#include "tnoodl/sparse_coding.hpp"
#include "tnoodl/synth.hpp"

namespace tnoodl {

enum class RunMode { Online, Batch };

inline std::string_view to_string(RunMode m) { return m == RunMode::Online ? "online" : "batch"; }

struct SolverConfig {
  std::size_t n = 300, J = 100, K = 100, m = 50;
  double alpha = 0.01, beta = 0.01;
  FactorDist dist = FactorDist::Rademacher;
  double C_lb = 1.0;
  double eta_x = 0.2;
  double tau = 0.1;
  std::vector<double> eta_x_schedule;
  std::vector<double> tau_schedule;
  std::optional<std::size_t> R;     // unset: default_iht_steps(eta_x)
  std::optional<double> eta_A;      // unset: default_eta_A(m, alpha, beta)
  std::optional<double> eps0;       // unset: 2 / log(n)
  std::size_t T_max = 500;
  double eps_T = 1e-10;
  double zero_tol = 0.0;
  SampleMode sample_mode = SampleMode::AllNonzero;
  double svd_tol = kDefaultSvdTol;
  std::uint64_t seed = 42;
  RunMode mode = RunMode::Online;
  std::size_t log_every = 1;
  unsigned threads = 1;
  bool record_wall_time = false;

  std::size_t iht_steps() const { return R ? *R : default_iht_steps(eta_x); }
  double dict_step() const { return eta_A ? *eta_A : default_eta_A(m, alpha, beta); }
  double init_distance() const { return eps0 ? *eps0 : default_eps0(n); }

  Dims dims() const { return {n, J, K, m}; }
  SparsityParams sparsity() const { return {alpha, beta}; }

  IhtParams iht_params() const {
    IhtParams p;
    p.eta_x = eta_x;
    p.tau = tau;
    p.R = iht_steps();
    p.C_lb = C_lb;
    p.eta_x_schedule = eta_x_schedule;
    p.tau_schedule = tau_schedule;
    return p;
  }

  void validate() const {
    if (n == 0 || J == 0 || K == 0 || m == 0) throw ConfigError("n, J, K and m must be >= 1");
    sparsity().validate();
    iht_params().validate();
    if (!(dict_step() > 0.0)) throw ConfigError("eta_A must be positive");
    if (!(eps_T > 0.0)) throw ConfigError("eps_T must be positive");
    if (T_max < 1) throw ConfigError("T_max must be >= 1");
    if (!(zero_tol >= 0.0)) throw ConfigError("zero_tol must be >= 0");
    if (!(svd_tol > 0.0)) throw ConfigError("svd_tol must be positive");
    if (log_every < 1) throw ConfigError("log_every must be >= 1");
    const double e0 = init_distance();
    if (!(e0 >= 0.0 && e0 < 2.0)) throw ConfigError("eps0 must lie in [0, 2)");
  }
};

namespace detail {

inline std::vector<double> parse_list(std::string_view key, std::string_view v) {
  std::vector<double> out;
  v = trim(v);
  if (v.empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= v.size(); ++i)
    if (i == v.size() || v[i] == ',') {
      double x = 0.0;
      if (!parse_number(v.substr(start, i - start), x))
        throw ConfigError(concat(key, ": bad list entry '", v.substr(start, i - start), "'"));
      out.push_back(x);
      start = i + 1;
    }
  return out;
}

template <typename T>
T parse_value(std::string_view key, std::string_view v) {
  T out{};
  if (!parse_number(v, out)) throw ConfigError(concat(key, ": cannot parse '", v, "'"));
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(concat(key, ": expected true/false, got '", v, "'"));
}

inline std::string join_list(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += format_double(xs[i]);
  }
  return s;
}

}  // namespace detail

// Every key accepted by apply_setting, in echo order.
inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "n", "J", "K", "m", "alpha", "beta", "dist", "C_lb", "eta_x", "tau",
      "eta_x_schedule", "tau_schedule", "R", "eta_A", "eps0", "T_max", "eps_T", "zero_tol",
      "sample_mode", "svd_tol", "seed", "mode", "log_every", "threads", "record_wall_time"};
  return keys;
}

// Sets one field. Keys are the snake_case field names; "auto" resets an
// optional field to its derived default.
inline void apply_setting(SolverConfig& cfg, std::string_view key, std::string_view raw) {
  using namespace detail;
  const std::string_view v = trim(raw);
  if (key == "n") cfg.n = parse_value<std::size_t>(key, v);
  else if (key == "J") cfg.J = parse_value<std::size_t>(key, v);
  else if (key == "K") cfg.K = parse_value<std::size_t>(key, v);
  else if (key == "m") cfg.m = parse_value<std::size_t>(key, v);
  else if (key == "alpha") cfg.alpha = parse_value<double>(key, v);
  else if (key == "beta") cfg.beta = parse_value<double>(key, v);
  else if (key == "dist") {
    if (v == "rademacher") cfg.dist = FactorDist::Rademacher;
    else if (v == "subgaussian") cfg.dist = FactorDist::BoundedSubGaussian;
    else throw ConfigError(concat("dist: expected rademacher|subgaussian, got '", v, "'"));
  } else if (key == "C_lb") cfg.C_lb = parse_value<double>(key, v);
  else if (key == "eta_x") cfg.eta_x = parse_value<double>(key, v);
  else if (key == "tau") cfg.tau = parse_value<double>(key, v);
  else if (key == "eta_x_schedule") cfg.eta_x_schedule = parse_list(key, v);
  else if (key == "tau_schedule") cfg.tau_schedule = parse_list(key, v);
  else if (key == "R") {
    if (v == "auto") cfg.R.reset(); else cfg.R = parse_value<std::size_t>(key, v);
  } else if (key == "eta_A") {
    if (v == "auto") cfg.eta_A.reset(); else cfg.eta_A = parse_value<double>(key, v);
  } else if (key == "eps0") {
    if (v == "auto") cfg.eps0.reset(); else cfg.eps0 = parse_value<double>(key, v);
  } else if (key == "T_max") cfg.T_max = parse_value<std::size_t>(key, v);
  else if (key == "eps_T") cfg.eps_T = parse_value<double>(key, v);
  else if (key == "zero_tol") cfg.zero_tol = parse_value<double>(key, v);
  else if (key == "sample_mode") {
    if (v == "all_nonzero") cfg.sample_mode = SampleMode::AllNonzero;
    else if (v == "independent_only") cfg.sample_mode = SampleMode::IndependentOnly;
    else throw ConfigError(concat("sample_mode: expected all_nonzero|independent_only, got '", v, "'"));
  } else if (key == "svd_tol") cfg.svd_tol = parse_value<double>(key, v);
  else if (key == "seed") cfg.seed = parse_value<std::uint64_t>(key, v);
  else if (key == "mode") {
    if (v == "online") cfg.mode = RunMode::Online;
    else if (v == "batch") cfg.mode = RunMode::Batch;
    else throw ConfigError(concat("mode: expected online|batch, got '", v, "'"));
  } else if (key == "log_every") cfg.log_every = parse_value<std::size_t>(key, v);
  else if (key == "threads") cfg.threads = parse_value<unsigned>(key, v);
  else if (key == "record_wall_time") cfg.record_wall_time = parse_bool(key, v);
  else throw ConfigError(concat("unknown configuration key '", key, "'"));
}

// key=value lines, '#' comments, blank lines ignored.
inline void apply_config_text(SolverConfig& cfg, std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = detail::trim(detail::strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(detail::concat("config line ", line_no, ": expected key=value"), line_no);
    const auto key = detail::trim(body.substr(0, eq));
    try {
      apply_setting(cfg, key, body.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ParseError(detail::concat("config line ", line_no, ": ", e.what()), line_no);
    }
  }
}

inline SolverConfig load_config(const std::filesystem::path& path, SolverConfig base = {}) {
  auto in = detail::open_in(path);
  apply_config_text(base, in);
  return base;
}

// Resolved values, one key=value per line, in config_keys() order.
inline void write_config(std::ostream& out, const SolverConfig& cfg) {
  out << "n=" << cfg.n << '\n'
      << "J=" << cfg.J << '\n'
      << "K=" << cfg.K << '\n'
      << "m=" << cfg.m << '\n'
      << "alpha=" << format_double(cfg.alpha) << '\n'
      << "beta=" << format_double(cfg.beta) << '\n'
      << "dist=" << to_string(cfg.dist) << '\n'
      << "C_lb=" << format_double(cfg.C_lb) << '\n'
      << "eta_x=" << format_double(cfg.eta_x) << '\n'
      << "tau=" << format_double(cfg.tau) << '\n'
      << "eta_x_schedule=" << detail::join_list(cfg.eta_x_schedule) << '\n'
      << "tau_schedule=" << detail::join_list(cfg.tau_schedule) << '\n'
      << "R=" << cfg.iht_steps() << '\n'
      << "eta_A=" << format_double(cfg.dict_step()) << '\n'
      << "eps0=" << format_double(cfg.init_distance()) << '\n'
      << "T_max=" << cfg.T_max << '\n'
      << "eps_T=" << format_double(cfg.eps_T) << '\n'
      << "zero_tol=" << format_double(cfg.zero_tol) << '\n'
      << "sample_mode=" << to_string(cfg.sample_mode) << '\n'
      << "svd_tol=" << format_double(cfg.svd_tol) << '\n'
      << "seed=" << cfg.seed << '\n'
      << "mode=" << to_string(cfg.mode) << '\n'
      << "log_every=" << cfg.log_every << '\n'
      << "threads=" << cfg.threads << '\n'
      << "record_wall_time=" << (cfg.record_wall_time ? "true" : "false") << '\n';
}

}  // namespace tnoodl

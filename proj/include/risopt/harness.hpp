#pragma once

/// \file harness.hpp
/// \brief Monte Carlo sweeps over (M, b, SNR, trial): configuration loading,
/// algorithm dispatch, CSV and gnuplot output.
///
/// Configuration format: one `key = value` per line, `#` starts a comment,
/// lists are comma separated. Phases accept radians or forms such as `25pi/36`.
/// A grid may also be written `start:step:stop`.

#include <atomic>
#include <bit>
#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "baselines.hpp"
#include "idbp.hpp"
#include "priors.hpp"

namespace risopt {

inline const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> names{"es", "idbp", "tmh", "ao1", "ao2"};
  return names;
}

struct ExperimentSpec {
  SystemConfig base;
  std::vector<double> snr_grid_db{-30, -25, -20, -15, -10, -5, 0, 5, 10, 15, 20, 25, 30};
  std::vector<int> bits_grid{2, 3, 4};
  std::vector<int> m_grid{12};
  std::vector<std::string> algorithms{"es", "idbp", "tmh", "ao1", "ao2"};
  int trials = 1;
  std::string output_path = "results.csv";
  std::string plot_path;  ///< empty: no plot script
  std::uint64_t master_seed = 1;
  std::size_t pool_budget = 2000;
  std::size_t pool_m = 16;
  double epsilon_floor = 1e-6;
  SearchConfig search;
  bool tmh_exhaustive = false;
  AoOptions ao;
  PowerModel power;
  int workers = 1;
  std::uint64_t es_cap = 10'000'000;
  /// When false the wall_time_ms column is written as 0 so reruns are byte-identical.
  bool record_wall_time = true;
};

struct ResultRow {
  std::string algorithm;
  int m = 0;
  int k = 0;
  int bits = 0;
  double snr_db = 0.0;
  int trial = 0;
  double mse = 0.0;
  double rate_bits = 0.0;
  double energy_eff = 0.0;
  double objective = 0.0;
  std::uint64_t leaf_evals = 0;
  double wall_time_ms = 0.0;
  std::uint64_t seed = 0;
  std::vector<int> phases;
  std::string error;  ///< empty on success; metrics are NaN otherwise
};

/// Validates grids, algorithm names and the exhaustive-search cap.
inline void validate_spec(const ExperimentSpec& spec) {
  auto fail = [](const std::string& w) { throw Error(ErrorKind::InvalidConfig, w); };
  const SystemConfig base = validated(spec.base);
  if (spec.snr_grid_db.empty() || spec.bits_grid.empty() || spec.m_grid.empty() ||
      spec.algorithms.empty())
    fail("grids and algorithm list must be nonempty");
  if (spec.trials < 1) fail("trials must be >= 1");
  if (spec.workers < 1) fail("workers must be >= 1");
  if (spec.pool_m < 1 || spec.pool_budget < spec.pool_m) fail("need pool_budget >= pool_m >= 1");
  for (const auto& a : spec.algorithms)
    if (std::find(known_algorithms().begin(), known_algorithms().end(), a) ==
        known_algorithms().end())
      fail("unknown algorithm '" + a + "'");
  for (int b : spec.bits_grid)
    if (b < 1) fail("bits must be >= 1");
  const int k = static_cast<int>(base.alphabet_size());
  if (spec.search.k_best < 1 || spec.search.k_best > k) fail("k_best must be in [1, K]");
  for (int m : spec.m_grid) {
    SystemConfig c = base;
    c.n_ris = m;
    validated(c);
    const bool es = std::find(spec.algorithms.begin(), spec.algorithms.end(), "es") !=
                    spec.algorithms.end();
    if ((es || spec.tmh_exhaustive) && detail::space_size(k, m, std::min<std::uint64_t>(spec.es_cap, 10'000'000)) == 0)
      fail("exhaustive search needs K^M <= " + std::to_string(std::min<std::uint64_t>(spec.es_cap, 10'000'000)));
  }
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline double parse_double(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidConfig, "bad number '" + s + "' for " + key);
  }
}

inline long long parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidConfig, "bad integer '" + s + "' for " + key);
  }
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != s.size() || s.front() == '-') throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidConfig, "bad unsigned integer '" + s + "' for " + key);
  }
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw Error(ErrorKind::InvalidConfig, "bad boolean '" + s + "' for " + key);
}

/// "1.2", "pi", "25pi/36", "-pi/2", "3*pi/4".
inline double parse_phase(std::string s, const std::string& key) {
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  const auto p = s.find("pi");
  if (p == std::string::npos) return parse_double(s, key);
  std::string coef = s.substr(0, p);
  std::string rest = s.substr(p + 2);
  if (!coef.empty() && coef.back() == '*') coef.pop_back();
  double c = 1.0;
  if (coef == "-")
    c = -1.0;
  else if (!coef.empty() && coef != "+")
    c = parse_double(coef, key);
  double d = 1.0;
  if (!rest.empty()) {
    if (rest.front() != '/') throw Error(ErrorKind::InvalidConfig, "bad phase '" + s + "' for " + key);
    d = parse_double(rest.substr(1), key);
    if (d == 0.0) throw Error(ErrorKind::InvalidConfig, "zero divisor in phase for " + key);
  }
  return c * kPi / d;
}

inline std::vector<double> parse_grid(const std::string& s, const std::string& key) {
  if (s.find(':') != std::string::npos && s.find(',') == std::string::npos) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ':')) parts.push_back(trim(cur));
    if (parts.size() != 3) throw Error(ErrorKind::InvalidConfig, "grid must be start:step:stop for " + key);
    const double a = parse_double(parts[0], key), st = parse_double(parts[1], key),
                 b = parse_double(parts[2], key);
    if (!(st > 0.0) || b < a) throw Error(ErrorKind::InvalidConfig, "empty grid for " + key);
    std::vector<double> out;
    const auto n = static_cast<long long>(std::floor((b - a) / st + 1e-9));
    for (long long i = 0; i <= n; ++i) out.push_back(a + static_cast<double>(i) * st);
    return out;
  }
  std::vector<double> out;
  for (const auto& t : split_list(s)) out.push_back(parse_double(t, key));
  return out;
}

}  // namespace detail

/// Parses the key=value format. Unknown keys are an error.
inline ExperimentSpec parse_config(std::istream& is) {
  using namespace detail;
  ExperimentSpec spec;
  SystemConfig& c = spec.base;
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (val.empty()) throw Error(ErrorKind::InvalidConfig, "line " + std::to_string(lineno) + ": empty value");
    if (!seen.insert(key).second) throw Error(ErrorKind::InvalidConfig, "duplicate key " + key);
    auto as_int = [&] { return static_cast<int>(parse_int(val, key)); };
    if (key == "n_tx") c.n_tx = as_int();
    else if (key == "n_rx") c.n_rx = as_int();
    else if (key == "n_rf_tx") c.n_rf_tx = as_int();
    else if (key == "n_rf_rx") c.n_rf_rx = as_int();
    else if (key == "n_streams") c.n_streams = as_int();
    else if (key == "n_ris") c.n_ris = as_int();
    else if (key == "n_interferers") c.n_interferers = as_int();
    else if (key == "adc_bits") c.adc_bits = as_int();
    else if (key == "symbol_power") c.symbol_power = parse_double(val, key);
    else if (key == "snr_db") c.snr_db = parse_double(val, key);
    else if (key == "direct_path_db") c.direct_path_db = parse_double(val, key);
    else if (key == "seed") c.seed = parse_u64(val, key);
    else if (key == "target_rtol") c.target_rtol = parse_double(val, key);
    else if (key == "phase_alphabet") {
      c.phase_alphabet.clear();
      for (const auto& t : split_list(val)) c.phase_alphabet.push_back(parse_phase(t, key));
    }
    else if (key == "snr_grid_db") spec.snr_grid_db = parse_grid(val, key);
    else if (key == "bits_grid" || key == "m_grid") {
      std::vector<int> g;
      for (double v : parse_grid(val, key)) {
        if (v != std::floor(v)) throw Error(ErrorKind::InvalidConfig, key + " must hold integers");
        g.push_back(static_cast<int>(v));
      }
      (key == "bits_grid" ? spec.bits_grid : spec.m_grid) = std::move(g);
    }
    else if (key == "algorithms") spec.algorithms = split_list(val);
    else if (key == "trials") spec.trials = as_int();
    else if (key == "output") spec.output_path = val;
    else if (key == "plot") spec.plot_path = val;
    else if (key == "master_seed") spec.master_seed = parse_u64(val, key);
    else if (key == "pool_budget") spec.pool_budget = parse_u64(val, key);
    else if (key == "pool_m") spec.pool_m = parse_u64(val, key);
    else if (key == "epsilon_floor") spec.epsilon_floor = parse_double(val, key);
    else if (key == "k_best") spec.search.k_best = as_int();
    else if (key == "recursive_second_pass") spec.search.recursive_second_pass = parse_bool(val, key);
    else if (key == "max_leaf_evals") spec.search.max_leaf_evals = parse_u64(val, key);
    else if (key == "policy") {
      if (val == "prior") spec.search.policy = PolicyKind::Prior;
      else if (val == "uniform") spec.search.policy = PolicyKind::Uniform;
      else throw Error(ErrorKind::InvalidConfig, "policy must be prior or uniform");
    }
    else if (key == "tmh_exhaustive") spec.tmh_exhaustive = parse_bool(val, key);
    else if (key == "ao_eps") spec.ao.eps_t = parse_double(val, key);
    else if (key == "ao_max_rounds") spec.ao.max_rounds = as_int();
    else if (key == "design_iters") spec.ao.design_iters = as_int();
    else if (key == "p_tx") spec.power.p_tx = parse_double(val, key);
    else if (key == "p_rx") spec.power.p_rx = parse_double(val, key);
    else if (key == "p_ris") spec.power.p_ris = parse_double(val, key);
    else if (key == "adc_step_energy") spec.power.c_step = parse_double(val, key);
    else if (key == "adc_sample_rate") spec.power.f_s = parse_double(val, key);
    else if (key == "workers") spec.workers = as_int();
    else if (key == "record_wall_time") spec.record_wall_time = parse_bool(val, key);
    else throw Error(ErrorKind::InvalidConfig, "unknown key '" + key + "'");
  }
  validate_spec(spec);
  return spec;
}

inline ExperimentSpec load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::InvalidConfig, "cannot open config " + path);
  return parse_config(is);
}

/// Seed of one (grid point, trial); keyed by grid values, not positions.
inline std::uint64_t trial_seed(std::uint64_t master, int m, int bits, double snr_db, int trial) {
  return stable_hash({master, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(bits),
                      std::bit_cast<std::uint64_t>(snr_db), static_cast<std::uint64_t>(trial)});
}

struct TrialPoint {
  int m;
  int bits;
  double snr_db;
  int trial;
};

/// Runs every requested algorithm on one channel draw. All algorithms share the
/// channel and the designed transceivers; AO variants refine their own copies.
inline std::vector<ResultRow> run_trial(const ExperimentSpec& spec, const TrialPoint& pt) {
  SystemConfig cfg = spec.base;
  cfg.n_ris = pt.m;
  cfg.adc_bits = pt.bits;
  cfg.snr_db = pt.snr_db;
  cfg.seed = trial_seed(spec.master_seed, pt.m, pt.bits, pt.snr_db, pt.trial);
  cfg = validated(cfg);
  const int k = static_cast<int>(cfg.alphabet_size());

  std::vector<ResultRow> rows;
  auto blank = [&](const std::string& alg) {
    ResultRow r;
    r.algorithm = alg;
    r.m = pt.m;
    r.k = k;
    r.bits = pt.bits;
    r.snr_db = pt.snr_db;
    r.trial = pt.trial;
    r.seed = cfg.seed;
    return r;
  };
  auto fail_row = [&](ResultRow r, const std::string& what) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    r.mse = r.rate_bits = r.energy_eff = r.objective = nan;
    r.error = what;
    return r;
  };

  ChannelRealization ch;
  TransceiverSet base;
  std::optional<RisObjective> obj;
  try {
    ch = synthesize_channel(cfg);
    base = design_transceivers(ch, cfg);
    obj.emplace(ch, base.w_a_h, base.w_d_tilde_h, cfg);
  } catch (const Error& e) {
    for (const auto& a : spec.algorithms) rows.push_back(fail_row(blank(a), e.what()));
    return rows;
  }

  using clock = std::chrono::steady_clock;
  for (const auto& alg : spec.algorithms) {
    ResultRow row = blank(alg);
    try {
      const auto t0 = clock::now();
      TransceiverSet t = base;
      PhaseSequence pi;
      if (alg == "es") {
        auto r = exhaustive_search(*obj, spec.es_cap);
        pi = r.best;
        row.leaf_evals = r.evaluations;
      } else if (alg == "idbp") {
        std::mt19937_64 rng(stable_hash({cfg.seed, 1}));
        const auto pool = sample_candidate_pool(*obj, k, cfg.n_ris, spec.pool_budget, spec.pool_m, rng);
        const auto prior = estimate_prior(pool, k, cfg.n_ris, spec.epsilon_floor);
        const auto tr = idbp_search(cfg, spec.search, prior, *obj);
        pi = tr.best_sequence;
        const auto space = detail::space_size(k, cfg.n_ris, spec.pool_budget);
        row.leaf_evals = (space ? space : spec.pool_budget) + tr.leaf_evaluations;
      } else if (alg == "tmh") {
        if (spec.tmh_exhaustive) {
          auto r = tmh_exhaustive(ch, base, cfg, spec.es_cap);
          pi = r.best;
          row.leaf_evals = r.evaluations;
        } else {
          pi = tmh(ch, base, cfg).phases;
          row.leaf_evals = 1;
        }
      } else if (alg == "ao1" || alg == "ao2") {
        AoState init;
        if (alg == "ao1") {
          init = ao1_init(ch, cfg);
        } else {
          std::mt19937_64 rng(stable_hash({cfg.seed, 2}));
          init = ao2_init(ch, cfg, rng);
        }
        auto r = alternating_opt(ch, cfg, init, spec.ao);
        t = std::move(r.transceivers);
        pi = std::move(r.phases);
        row.leaf_evals = r.evaluations;
      }
      const CVector phi = ris_diagonal(pi, cfg.phase_alphabet);
      t = with_phases(std::move(t), phi);
      const auto rep = evaluate_link(ch, t, phi, cfg, spec.power);
      const auto t1 = clock::now();
      row.mse = rep.mse;
      row.rate_bits = rep.rate_bits;
      row.energy_eff = rep.energy_eff;
      row.objective = rep.objective;
      row.phases = pi.phases;
      if (spec.record_wall_time)
        row.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      rows.push_back(std::move(row));
    } catch (const Error& e) {
      rows.push_back(fail_row(std::move(row), e.what()));
    }
  }
  return rows;
}

/// Sort key (algorithm, M, b, snr_db, trial).
inline bool row_less(const ResultRow& a, const ResultRow& b) {
  return std::tie(a.algorithm, a.m, a.bits, a.snr_db, a.trial) <
         std::tie(b.algorithm, b.m, b.bits, b.snr_db, b.trial);
}

/// Runs the full grid on `spec.workers` threads; the result is sorted.
inline std::vector<ResultRow> run_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  std::vector<TrialPoint> points;
  for (int m : spec.m_grid)
    for (int b : spec.bits_grid)
      for (double s : spec.snr_grid_db)
        for (int t = 0; t < spec.trials; ++t) points.push_back({m, b, s, t});

  std::vector<std::vector<ResultRow>> slots(points.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) slots[i] = run_trial(spec, points[i]);
  };
  const int n = std::max(1, std::min<int>(spec.workers, static_cast<int>(points.size())));
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  std::vector<ResultRow> rows;
  for (auto& s : slots)
    for (auto& r : s) rows.push_back(std::move(r));
  std::stable_sort(rows.begin(), rows.end(), row_less);
  return rows;
}

inline constexpr const char* kCsvHeader =
    "algorithm,M,K,b,snr_db,trial,mse,rate_bits,energy_eff,objective,leaf_evals,wall_time_ms,seed";

namespace detail {

inline std::string fmt10(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace detail

inline std::string format_csv(std::vector<ResultRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), row_less);
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    using detail::fmt10;
    os << r.algorithm << ',' << r.m << ',' << r.k << ',' << r.bits << ',' << fmt10(r.snr_db) << ','
       << r.trial << ',' << fmt10(r.mse) << ',' << fmt10(r.rate_bits) << ','
       << fmt10(r.energy_eff) << ',' << fmt10(r.objective) << ',' << r.leaf_evals << ','
       << fmt10(r.wall_time_ms) << ',' << r.seed << '\n';
  }
  return os.str();
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::InvalidConfig, "cannot write " + path);
  os << text;
  if (!os) throw Error(ErrorKind::InvalidConfig, "write failed for " + path);
}

inline void emit_csv(const std::vector<ResultRow>& rows, const std::string& path) {
  write_text(path, format_csv(rows));
}

/// Gnuplot script with inline data: mean MSE and mean rate against SNR, one
/// series per (algorithm, b). Rows with errors are skipped.
inline std::string plot_script(const std::vector<ResultRow>& rows) {
  struct Acc {
    double mse = 0, rate = 0;
    int n = 0;
  };
  std::map<std::pair<std::string, int>, std::map<double, Acc>> series;
  for (const auto& r : rows) {
    if (!r.error.empty() || !std::isfinite(r.mse) || !std::isfinite(r.rate_bits)) continue;
    auto& a = series[{r.algorithm, r.bits}][r.snr_db];
    a.mse += r.mse;
    a.rate += r.rate_bits;
    ++a.n;
  }
  std::ostringstream os;
  os << "# MSE and information rate against SNR\n";
  int idx = 0;
  std::vector<std::pair<std::string, std::string>> names;
  for (const auto& [key, pts] : series) {
    const std::string block = "$d" + std::to_string(idx++);
    names.emplace_back(block, key.first + " b=" + std::to_string(key.second));
    os << block << " << EOD\n";
    for (const auto& [snr, a] : pts)
      os << detail::fmt10(snr) << ' ' << detail::fmt10(a.mse / a.n) << ' '
         << detail::fmt10(a.rate / a.n) << '\n';
    os << "EOD\n";
  }
  os << "set terminal pngcairo size 1200,500\n"
     << "set output 'curves.png'\n"
     << "set multiplot layout 1,2\n"
     << "set xlabel 'SNR (dB)'\n"
     << "set grid\n"
     << "set key left top\n";
  auto panel = [&](const char* ylabel, int col, bool logy) {
    os << "set ylabel '" << ylabel << "'\n" << (logy ? "set logscale y\n" : "unset logscale y\n");
    if (names.empty()) {
      os << "# no data\n";
      return;
    }
    os << "plot ";
    for (std::size_t i = 0; i < names.size(); ++i)
      os << (i ? ", \\\n     " : "") << names[i].first << " using 1:" << col
         << " with linespoints title '" << names[i].second << "'";
    os << '\n';
  };
  panel("MSE", 2, true);
  panel("rate (bits/s/Hz)", 3, false);
  os << "unset multiplot\n";
  return os.str();
}

inline void emit_plot_script(const std::vector<ResultRow>& rows, const std::string& path) {
  write_text(path, plot_script(rows));
}

}  // namespace risopt

#pragma once

/// \file config.hpp
/// \brief Link parameters and the discrete phase sequence type.

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "common.hpp"

namespace risopt {

/// Wraps an angle into [0, 2pi).
inline double wrap_phase(double rad) {
  double r = std::fmod(rad, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// Dimensional and physical parameters of the RIS-assisted link.
struct SystemConfig {
  int n_tx = 48;
  int n_rx = 48;
  int n_rf_tx = 8;
  int n_rf_rx = 8;
  int n_streams = 8;
  int n_ris = 12;
  std::vector<double> phase_alphabet{25.0 * kPi / 36.0, 73.0 * kPi / 36.0, 49.0 * kPi / 36.0};
  int n_interferers = 8;
  int adc_bits = 4;
  double symbol_power = 1.0;
  double snr_db = 10.0;
  std::uint64_t seed = 1;
  /// Power of the non-RIS direct interference path relative to the desired path.
  double direct_path_db = -10.0;
  /// Singular values of R and P below this fraction of the largest are left out
  /// of the hybrid design target.
  double target_rtol = 1e-12;

  /// sigma_n^2 = p / 10^(snr/10).
  double noise_var() const { return symbol_power / std::pow(10.0, snr_db / 10.0); }

  std::size_t alphabet_size() const { return phase_alphabet.size(); }
  int n_paths() const { return n_interferers + 2; }
};

/// Returns a copy with the alphabet wrapped into [0, 2pi); throws InvalidConfig.
inline SystemConfig validated(SystemConfig cfg) {
  auto fail = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
  if (cfg.n_tx < 1 || cfg.n_rx < 1 || cfg.n_rf_tx < 1 || cfg.n_rf_rx < 1 ||
      cfg.n_streams < 1 || cfg.n_ris < 1 || cfg.adc_bits < 1)
    fail("all counts must be >= 1");
  if (cfg.n_interferers < 0) fail("n_interferers must be >= 0");
  if (cfg.phase_alphabet.empty()) fail("phase alphabet is empty");
  if (cfg.n_streams != cfg.n_rf_rx) fail("n_streams must equal n_rf_rx");
  if (cfg.n_ris < cfg.n_interferers + 2) fail("n_ris must be >= n_interferers + 2");
  if (cfg.n_rf_tx > cfg.n_tx || cfg.n_rf_rx > cfg.n_rx) fail("more RF chains than antennas");
  if (cfg.n_streams > cfg.n_ris) fail("n_streams must be <= n_ris");
  if (!(cfg.symbol_power > 0.0) || !std::isfinite(cfg.symbol_power))
    fail("symbol_power must be > 0");
  if (!std::isfinite(cfg.snr_db) || !(cfg.noise_var() > 0.0)) fail("noise_var must be > 0");
  if (!(cfg.target_rtol >= 0.0 && cfg.target_rtol < 1.0)) fail("target_rtol must be in [0, 1)");
  for (auto& ph : cfg.phase_alphabet) {
    if (!std::isfinite(ph)) fail("non-finite phase");
    ph = wrap_phase(ph);
  }
  for (std::size_t i = 0; i < cfg.phase_alphabet.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.phase_alphabet.size(); ++j)
      if (std::abs(cfg.phase_alphabet[i] - cfg.phase_alphabet[j]) < 1e-12)
        fail("duplicate phase in alphabet");
  return cfg;
}

/// A length-M assignment of alphabet indices to RIS elements.
struct PhaseSequence {
  std::vector<int> phases;
  std::optional<double> objective_value;

  std::size_t size() const { return phases.size(); }
  bool operator==(const PhaseSequence& o) const { return phases == o.phases; }
};

inline void check_alphabet(const std::vector<int>& phases, std::size_t k) {
  for (int p : phases)
    if (p < 0 || static_cast<std::size_t>(p) >= k)
      throw Error(ErrorKind::AlphabetViolation,
                  "phase index " + std::to_string(p) + " outside alphabet of size " +
                      std::to_string(k));
}

/// Diagonal of Phi: exp(j * alphabet[pi_m]).
inline CVector ris_diagonal(const std::vector<int>& phases,
                            const std::vector<double>& alphabet) {
  check_alphabet(phases, alphabet.size());
  CVector d(static_cast<Eigen::Index>(phases.size()));
  for (std::size_t m = 0; m < phases.size(); ++m)
    d(static_cast<Eigen::Index>(m)) = std::polar(1.0, alphabet[static_cast<std::size_t>(phases[m])]);
  return d;
}

inline CVector ris_diagonal(const PhaseSequence& pi, const std::vector<double>& alphabet) {
  return ris_diagonal(pi.phases, alphabet);
}

/// Index of the alphabet entry closest (on the circle) to `rad`; ties go to the lower index.
inline int nearest_phase_index(double rad, const std::vector<double>& alphabet) {
  int best = 0;
  double best_d = 1e300;
  for (std::size_t i = 0; i < alphabet.size(); ++i) {
    double d = std::abs(wrap_phase(rad - alphabet[i]));
    d = std::min(d, kTwoPi - d);
    if (d < best_d - 1e-12) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

inline std::string to_string(const PhaseSequence& pi) {
  std::ostringstream os;
  for (std::size_t i = 0; i < pi.phases.size(); ++i) os << (i ? "," : "") << pi.phases[i];
  return os.str();
}

}  // namespace risopt

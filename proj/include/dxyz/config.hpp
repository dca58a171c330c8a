// Experiment configuration: flat `key = value` text with a typed schema.
// Unknown keys and type errors are rejected with line diagnostics.  The
// canonical serialization (defaults filled in, fixed key order, output
// location and worker count excluded) feeds the provenance hash carried by
// every result record.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dxyz/model.hpp"
#include "dxyz/noise.hpp"

namespace dxyz {

inline constexpr const char* kToolVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg
                                    : msg),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_ = 0;
};

enum class ExperimentKind {
  SteadyState,
  GSweep,
  RSweep,
  MeanFieldPhase,
  Spectroscopy,
  MitigateCriticalPoint,
};

std::string experiment_name(ExperimentKind kind);
ExperimentKind experiment_from_name(const std::string& name);  // ConfigError

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::SteadyState;
  bool kind_set = false;

  // Model.
  int L = 2;
  Boundary boundary = Boundary::Periodic;
  double Jx = 0.9;
  double Jy = 1.1;
  double Jz = 1.0;
  double gamma = 1.0;
  // `g` overrides Jy via the Jy = Jx + 2 g gamma convention; setting both
  // g and Jy is rejected as ambiguous.
  bool g_set = false;
  bool jy_set = false;

  // Evolution.
  double tau = 0.01;
  double t_max = 50.0;
  double steady_tol = 1e-7;

  // Noise.
  NoiseKind noise = NoiseKind::Depolarizing;
  bool loose_pauli = false;
  bool noise_per_axis = false;
  double r0 = 0.01;
  std::vector<double> c = {1.0, 2.0};  // boost factors, each >= 1

  // Sweep grids (used by the kinds that need them).
  std::vector<double> g_values;
  std::vector<double> r_values;

  // Spectroscopy.
  double t_end = 30.0;
  int stride = 10;

  // Scaling fits.
  double w_min = 0.005;
  double w_max = 0.05;
  int extrapolation_order = 1;

  // Seed is part of the run's identity; out and workers are pure plumbing
  // and are excluded from the canonical form and the provenance hash.
  std::uint64_t seed = 1;
  std::string out;  // empty: $DXYZ_OUT_DIR, else current directory
  int workers = 1;

  ModelSpec model() const;
  NoiseModel noise_model() const;
  ScheduleOptions schedule_options() const;
  double g() const { return (Jy - Jx) / (2.0 * gamma); }
};

// Parse, filling defaults; throws ConfigError, with a line number on unknown
// keys and malformed values (semantic validation failures carry no position).
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void validate_config(const ExperimentConfig& cfg);

// Canonical `key = value` serialization in fixed key order with all defaults
// materialized; `out` and `workers` are excluded so relocating or
// parallelizing a run does not change its identity.
std::string canonical_config(const ExperimentConfig& cfg);
// FNV-1a (64-bit) of the canonical serialization, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// Shortest round-trip decimal representation (std::to_chars).
std::string format_double(double v);

}  // namespace dxyz

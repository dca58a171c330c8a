// First-order Trotter evolution of the lattice master equation with
// per-gate noise channels: rho <- e^{r w E tau} e^{G tau} rho, gate by gate
// in schedule order, applied through the local-channel kernel.

#pragma once

#include <string>
#include <vector>

#include "dxyz/model.hpp"
#include "dxyz/noise.hpp"

namespace dxyz {

struct EvolutionConfig {
  double tau = 0.01;        // Trotter step, units of 1/gamma
  double r = 0.0;           // modular error rate
  NoiseModel noise;         // noise kind attached to every gate
  double t_max = 50.0;      // evolution budget for steady-state searches
  double probe_window = 1.0;  // spacing of convergence probes
  double steady_tol = 1e-7;   // trace-norm residual ||rho(t+w) - rho(t)||_1
};

// Gate channels exponentiated once per (schedule, tau, r, noise) tuple.
struct CompiledSchedule {
  int nqubits = 0;
  double tau = 0.0;
  struct CompiledGate {
    Mat channel;             // local channel matrix (4x4 or 16x16)
    std::vector<int> sites;
  };
  std::vector<CompiledGate> gates;
};

CompiledSchedule compile_schedule(const XYZSchedule& schedule, double tau,
                                  double r, const NoiseModel& noise);

// One full Trotter step in place.
void trotter_step(Mat& rho, const CompiledSchedule& compiled);

struct SteadyResult {
  DensityMatrix state;
  double residual = 0.0;  // final window-to-window trace-norm difference
  long steps = 0;
  bool converged = false;
};

// Evolve until two probe snapshots differ by less than steady_tol in trace
// norm, or until t_max.  Non-convergence is flagged, never thrown.
SteadyResult evolve_to_steady(const DensityMatrix& rho_in,
                              const XYZSchedule& schedule,
                              const EvolutionConfig& cfg);

struct Observable {
  std::string name;
  Mat op;

  double expect(const Mat& rho) const;
};

Observable site_observable(const std::string& name, const Mat& local, int site,
                           int nqubits);
// Uniform averages (1/N) sum_l sigma_l^z and sigma_l^x.
Observable uniform_z(int nqubits);
Observable uniform_x(int nqubits);

struct TimeSeries {
  std::string name;
  double dt = 0.0;  // sample spacing
  std::vector<double> times;
  std::vector<double> values;
};

// Sample the observables every `stride` steps up to t_end (inclusive start
// at t = 0).  Returns one series per observable.
std::vector<TimeSeries> record_trajectory(const DensityMatrix& rho_in,
                                          const XYZSchedule& schedule,
                                          const EvolutionConfig& cfg,
                                          const std::vector<Observable>& obs,
                                          int stride, double t_end);

}  // namespace dxyz

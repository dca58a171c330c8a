// Mean-field dynamics of the noisy dissipative XYZ lattice.
//
// The factorized equations of motion for s = (<sx>, <sy>, <sz>) are generated
// numerically from the schedule's own gate generators: every gate touching a
// reference site of a 2x2 periodic cell (coordination number 4) is reduced to
// that site with the partner replaced by rho(s) = (1 + s.sigma)/2, and the
// per-site derivative is read off the resulting 4x4 generator.  This keeps
// the EOM consistent with the full-lattice generators by construction and
// automatically inherits each noise kind's single-site reduction.
//
// Noise enters at first order (r * sum of reduced noise generators) by
// default; setting MeanFieldOptions::tau > 0 switches to the finite-step
// effective generator including commutator cross-terms up to magnus_order.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dxyz/model.hpp"
#include "dxyz/noise.hpp"

namespace dxyz {

struct MeanFieldOptions {
  ScheduleOptions schedule;  // noise attachment convention for the cell
  double tau = 0.0;          // > 0 enables finite-step commutator cross-terms
  int magnus_order = 1;      // joint (tau, r) truncation used when tau > 0
  double rtol = 1e-10;       // integrator relative tolerance
  double atol = 1e-12;       // integrator absolute tolerance
  double t_budget = 5000.0;  // integration time budget per steady-state solve
  double rhs_tol = 1e-12;    // fixed-point residual target after polishing
  double eps_pm = 1e-6;      // paramagnetic threshold on |sx|
};

class MeanFieldModel {
 public:
  MeanFieldModel(const ModelSpec& model, const NoiseModel& noise, double r,
                 const MeanFieldOptions& opts = {});

  Eigen::Vector3d rhs(const Eigen::Vector3d& s) const;
  // Central-difference Jacobian of rhs.
  Eigen::Matrix3d jacobian(const Eigen::Vector3d& s) const;
  // Single-site effective generator closed at state s (4x4).
  Mat site_generator(const Eigen::Vector3d& s) const;

  const MeanFieldOptions& options() const { return opts_; }
  const ModelSpec& model() const { return model_; }
  const NoiseModel& noise() const { return noise_; }
  double error_rate() const { return r_; }

 private:
  ModelSpec model_;
  NoiseModel noise_;
  double r_ = 0.0;
  MeanFieldOptions opts_;
  // tau == 0 fast path: site generator is affine in s,
  // L(s) = base_ + sx X_ + sy Y_ + sz Z_.
  Mat base_, x_, y_, z_;
  // tau > 0 path: full-cell effective generator, closed at a product state.
  Mat lfull_;
};

// Free-function EOM right-hand side (constructs the model per call).
Eigen::Vector3d mf_rhs(const Eigen::Vector3d& s, const ModelSpec& model,
                       const NoiseModel& noise, double r,
                       const MeanFieldOptions& opts = {});

struct SteadyOutcome {
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  bool converged = false;    // residual below rhs_tol
  bool stable = false;       // Jacobian spectrum in the closed left half-plane
  bool limit_cycle = false;  // budget exhausted while still moving
  double residual = 0.0;     // |rhs| at the reported point
};

// Integrate from `seed` until the flow settles, then polish the fixed point
// with a damped Newton iteration.  A converged-but-unstable point (a saddle)
// is escaped along its most unstable direction and re-relaxed, so the
// returned branch is stable whenever one is reachable from the seed.
SteadyOutcome mf_steady(const MeanFieldModel& m, const Eigen::Vector3d& seed);
// Standard seeds: small symmetry-broken kick, and the symmetric axis.
Eigen::Vector3d mf_seed_broken();
Eigen::Vector3d mf_seed_symmetric();

// Integrate recording (t, s) samples every sample_dt.
std::vector<std::pair<double, Eigen::Vector3d>> mf_trajectory(
    const MeanFieldModel& m, Eigen::Vector3d s0, double t_end,
    double sample_dt);

// Fixed point on the symmetric axis sx = sy = 0; requires a noise model that
// preserves the Z2 symmetry (throws otherwise).
Eigen::Vector3d pm_fixed_point(const MeanFieldModel& m);
// Largest real part of the Jacobian spectrum at the paramagnetic point; the
// ordered phase is where this becomes positive.
double pm_leading_rate(const MeanFieldModel& m);

struct MeanFieldPoint {
  double axis_value = 0.0;
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  bool ferromagnetic = false;
  bool stable = false;
  bool converged = false;
};

struct PhaseCurve {
  std::string axis;  // "g" or "r"
  std::vector<MeanFieldPoint> points;
};

// Steady-state sweeps.  Both the symmetry-broken and symmetric seeds are
// tried at every grid point (warm-started along the sweep) and the stable
// branch is reported; per-point failures are flagged, not thrown.
PhaseCurve mf_sweep_g(const std::vector<double>& g_values, double r,
                      const ModelSpec& base, const NoiseModel& noise,
                      const MeanFieldOptions& opts = {});
PhaseCurve mf_sweep_r(const std::vector<double>& r_values,
                      const ModelSpec& model, const NoiseModel& noise,
                      const MeanFieldOptions& opts = {});

struct CriticalPoint {
  double value = 0.0;         // critical g (or r)
  double beta = 0.0;          // order-parameter exponent on the ordered side
  double fit_residual = 0.0;  // max relative power-law deviation
  bool bracketed = false;     // sign change found before bisection
};

// Pitchfork location from the paramagnetic point's stability: critical g at
// fixed r, or critical r at fixed couplings.  Requires Z2-symmetric noise.
// Couplings follow the from_g convention (Jx, Jz, gamma taken from `base`).
CriticalPoint mf_critical_g(double r, const ModelSpec& base,
                            const NoiseModel& noise,
                            const MeanFieldOptions& opts = {});
CriticalPoint mf_critical_r(const ModelSpec& model, const NoiseModel& noise,
                            const MeanFieldOptions& opts = {});

}  // namespace dxyz

// Error-mitigation estimators: Richardson (zero-noise) extrapolation,
// matrix-pencil extraction of decay spectra, spectrum extrapolation to the
// zero-noise point, and scaling-law extrapolation of critical points.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dxyz/hs.hpp"
#include "dxyz/meanfield.hpp"
#include "dxyz/trotter.hpp"

namespace dxyz {

// ===========================================================================
// Richardson extrapolation.
// ===========================================================================

struct NoisyObservations {
  std::string observable;                         // metadata label
  std::vector<std::pair<double, double>> points;  // (r_i, value_i), r_i > 0
};

struct RichardsonResult {
  double estimate = 0.0;     // fitted value at r = 0
  Eigen::VectorXd coeffs;    // polynomial coefficients, ascending in r
  double max_residual = 0.0; // worst |fit - data| over the observations
};

// Least-squares polynomial fit of degree `order` (1 or 2) evaluated at r = 0;
// with exactly order+1 points this is plain Richardson extrapolation and is
// exact on polynomial data of matching degree.
RichardsonResult richardson(const std::vector<std::pair<double, double>>& obs,
                            int order);
RichardsonResult richardson(const NoisyObservations& obs, int order);

// ===========================================================================
// Matrix-pencil spectroscopy.
// ===========================================================================

struct ExponentialMode {
  Complex lambda;          // decay rate, Re(lambda) <= 0
  double amplitude = 0.0;  // A >= 0
  double phase = 0.0;      // theta in [0, 2*pi)
  Complex coeff() const;   // A * exp(i*theta)
};

struct ExponentialModel {
  std::vector<ExponentialMode> modes;  // sorted by Re(lambda), slowest first
  double fit_residual = 0.0;           // rms reconstruction error
  int rejected_unstable = 0;           // modes dropped for Re(lambda) > tol
  bool aliasing_risk = false;          // |Im lambda| close to pi/dt

  double evaluate(double t) const;  // real part of the mode sum
};

std::vector<double> synthesize(const ExponentialModel& model,
                               const std::vector<double>& times);

struct PencilOptions {
  int pencil = -1;             // Hankel pencil parameter L; default floor(N/3)
  int modes = -1;              // fixed mode count; -1 selects rank by threshold
  double sv_threshold = 1e-8;  // relative singular-value cutoff in auto mode
  double unstable_tol = 1e-8;  // reject modes with Re(lambda) above this
};

// Fit s(t_i) = sum_a A_a exp(i theta_a) exp(lambda_a t_i) from uniformly
// sampled data: Hankel matrix -> SVD rank decision -> shifted-pencil
// eigenvalues z_a -> lambda_a = log(z_a)/dt (principal branch) -> amplitudes
// by linear least squares.
ExponentialModel matrix_pencil(const std::vector<double>& samples, double dt,
                               double t0 = 0.0, const PencilOptions& = {});
ExponentialModel matrix_pencil(const TimeSeries& series,
                               const PencilOptions& = {});

// ===========================================================================
// Spectrum extrapolation to r = 0.
// ===========================================================================

struct ExtrapolationOptions {
  double pairing_radius = -1.0;  // < 0: auto from the reference mode spacing
  int order = 1;                 // polynomial order of the extrapolation in r
  double clip_flag_tol = 1e-6;   // positive Re beyond this is flagged
};

struct SpectrumExtrapolation {
  std::vector<Complex> lambdas;   // extrapolated modes (conjugates included)
  std::vector<bool> clipped;      // Re was positive beyond tolerance and clipped
  std::vector<Complex> unmatched; // modes without a partner at every r
  bool ambiguous = false;         // two candidates inside one pairing radius
};

// Pair modes across error rates by nearest-neighbor matching in the complex
// plane (conjugate-pair consistent), then extrapolate each matched chain to
// r = 0.  Unmatched modes are reported, not extrapolated.
SpectrumExtrapolation extrapolate_spectrum(
    const std::vector<double>& rs,
    const std::vector<std::vector<Complex>>& mode_sets,
    const ExtrapolationOptions& = {});

// ===========================================================================
// Scaling-law extrapolation of the critical point.
// ===========================================================================

struct ScalingFitOptions {
  double w_min = 0.005;  // fit window |g - g_cri| in [w_min, w_max]
  double w_max = 0.05;
  bool ordered_above = true;  // ordered phase sits at g > g_cri
  bool modified = false;      // offset ansatz for symmetry-breaking noise
  int extrapolation_order = 1;
};

struct PowerLawFit {
  double g_cri = 0.0;
  double beta = 0.0;
  double amplitude = 0.0;  // proportionality constant
  double offset = 0.0;     // constant term (modified ansatz only)
  double residual = 0.0;   // rms relative misfit inside the window
  bool ok = false;
};

// Fit m(g) = C |g - g_cri|^beta (+ offset under the modified ansatz) to one
// order-parameter curve, optimizing g_cri (and beta) by golden-section with
// an inner linear least-squares solve.
PowerLawFit fit_power_law(const std::vector<double>& g,
                          const std::vector<double>& m,
                          const ScalingFitOptions& = {});

struct ScalingExtrapolation {
  std::vector<double> rs;
  std::vector<PowerLawFit> fits;  // one per error rate
  double g_cri0 = 0.0;            // extrapolated to r = 0
  double beta0 = 0.0;
  bool ok = false;
};

// Per-rate power-law fits followed by polynomial extrapolation of g_cri(r)
// and beta(r) to the zero-noise point.
ScalingExtrapolation scaling_extrapolate(
    const std::vector<double>& rs,
    const std::vector<std::vector<std::pair<double, double>>>& curves,
    const ScalingFitOptions& = {});
// Convenience overload on mean-field sweeps (order parameter |<sx>|).
ScalingExtrapolation scaling_extrapolate(const std::vector<double>& rs,
                                         const std::vector<PhaseCurve>& curves,
                                         const ScalingFitOptions& = {});

}  // namespace dxyz

// Dense spectral analysis of Lindblad superoperators: eigenpairs with
// biorthonormal left/right systems, steady states, relaxation gap, the
// spectral generalized inverse, and Rayleigh-Schroedinger-style perturbation
// series for steady states and eigenvalues.
//
// All routines assume a diagonalizable generator with a unique zero
// eigenvalue; defectiveness and degeneracy are detected and reported rather
// than silently mishandled.

#pragma once

#include <vector>

#include "dxyz/hs.hpp"

namespace dxyz {

struct SpectralDecomposition {
  int hsdim = 0;       // operators act on hsdim x hsdim matrices
  Vec eigenvalues;     // solver order
  Mat right;           // column a = |R_a>>
  Mat left;            // row a = <<L_a|, biorthonormal: left * right = 1
  int steady_index = -1;
  int zero_count = 0;  // eigenvalues with |lambda| <= 1e-10
  double biorth_residual = 0.0;   // max |left*right - 1|
  double eigvec_condition = 0.0;  // sigma_max/sigma_min of the right system
  // Indices grouped by eigenvalue proximity (|dlambda| <= 1e-8); clusters of
  // size > 1 mark (near-)degenerate eigenvalues.
  std::vector<std::vector<int>> degenerate_clusters;

  // All indices ordered by ascending -Re(lambda), steady mode first.
  std::vector<int> sorted_indices() const;
  bool is_degenerate(int index) const;
};

// Full dense eigendecomposition.  The steady pair is rescaled so that
// |R_1>> has unit trace and <<L_1| is the trace functional.
SpectralDecomposition spectrum(const Mat& superop);

// Steady state as a Hermitized, trace-one density matrix.  Throws if the
// zero eigenvalue is degenerate or the null vector is traceless.
Mat steady_state_exact(const SpectralDecomposition& dec);
Mat steady_state_exact(const Mat& superop);

// Relaxation gap Gamma = min { -Re lambda : lambda != 0 }.
double relaxation_gap(const SpectralDecomposition& dec);

// Spectral generalized inverse L^{-1} = sum_{a != steady} 1/lambda_a
// |R_a>><<L_a|, satisfying L L^{-1} = L^{-1} L = 1 - |R_1>><<L_1|.
// If min_nonzero is given it receives the smallest nonsteady |lambda|
// (values below 1e-9 signal ill conditioning).
Mat generalized_inverse(const SpectralDecomposition& dec,
                        double* min_nonzero = nullptr);

// Steady-state perturbation series under L0 + L': corrections
// rho^(k) = -L0^{-1} L' rho^(k-1), each traceless.
struct PerturbSeries {
  std::vector<Mat> corrections;  // corrections[k-1] = rho^(k)
  double contraction = 0.0;      // ||L0^{-1} L'||_2; >= 1 means no convergence
};

PerturbSeries perturb_steady_state(const SpectralDecomposition& dec,
                                   const Mat& lp, int max_order);

// Eigenvalue corrections for a nondegenerate target eigenvalue:
//   lambda^(1) = <<L_a|L'|R_a>>,
//   lambda^(2) = sum_{b != a} <<L_a|L'|R_b>><<L_b|L'|R_a>> / (lambda_a - lambda_b).
struct EigenvalueCorrection {
  Complex first{};
  Complex second{};
  // Largest |coupling| into a near-degenerate partner that had to be skipped;
  // nonzero values mean the nondegenerate reduction is unreliable.
  double skipped_coupling = 0.0;
};

EigenvalueCorrection perturb_eigenvalue(const SpectralDecomposition& dec,
                                        const Mat& lp, int index);

}  // namespace dxyz

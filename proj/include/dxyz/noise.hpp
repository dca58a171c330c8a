// Per-gate noise generators, Pauli-transfer tooling, twirling, and the
// quasi-probability error-boosting scheme.
//
// Calibration: for every noise kind the generator attached to a gate is
// rescaled so that its Pauli-basis Frobenius norm matches the depolarizing
// generator on the same support.  Equal modular error rate r therefore means
// equal noise strength across kinds.

#pragma once

#include "dxyz/hs.hpp"
#include "dxyz/model.hpp"

namespace dxyz {

enum class NoiseKind { None, Depolarizing, RandomPauli, TransverseDamping };

// ===========================================================================
// Raw generators (unscaled).
// ===========================================================================

// Depolarizing generator on k sites: E(rho) = 1/2^k Tr(rho) - rho.
Mat depolarizing_generator(int nsites);

// Single-site transverse damping (D^x + D^y)/2 with jump operators
// sigma^{x-} = (sigma_z + i sigma_y)/2 and sigma^{y-} = (sigma_z - i sigma_x)/2,
// i.e. equal-rate damping toward the -x and -y axes.  Breaks the Z2 symmetry
// generated by sigma_z conjugation.
Mat transverse_damping_generator();

// Uniform mixture of Pauli-conjugation generators [P . P] - [.] over the
// symmetry-allowed set:
//  * dissipator gates: P = Z;
//  * bond gates: nontrivial pairs commuting with Z (x) Z, i.e.
//    {IZ, ZI, ZZ, XX, XY, YX, YY}; with `loose_set` all 15 nontrivial pairs.
Mat random_pauli_generator(bool bond_gate, bool loose_set);

// ===========================================================================
// Pauli-transfer representation.
// ===========================================================================

// Pauli transfer matrix M_ab = Tr[P_a S(P_b)] / 2^k (4^k x 4^k).
Mat ptm(const Mat& superop, int nsites);

// Noise strength: Frobenius norm of the Pauli-basis matrix.
double noise_norm(const Mat& superop, int nsites);

// Commutation sign matrix w_ab = +1 if Pauli strings a and b commute,
// -1 otherwise; satisfies W^2 = 4^k I.
Eigen::MatrixXd walsh_sign_matrix(int nsites);

// A stochastic mixture of Pauli conjugations.
struct PauliChannel {
  int nsites = 1;
  Eigen::VectorXd p;  // probabilities indexed by Pauli string label

  Mat to_superop() const;
  // Diagonal of the channel's PTM: d = W p.
  Eigen::VectorXd transfer_diagonal() const;
};

// Average of [P]^dag V [P] over all Pauli strings on the support.  The result
// has a diagonal PTM; the diagonal is converted back to probabilities via the
// Walsh-Hadamard transform.  Throws if the input is so far from a channel
// that probabilities fail to normalize within tolerance.
PauliChannel pauli_twirl(const Mat& channel, int nsites);

// Quasi-probability representation of N_e = N^{-1} N' for Pauli channels.
struct QuasiProbabilityScheme {
  Eigen::VectorXd weights;  // signed, sums to 1
  double one_norm = 1.0;
  bool all_positive = true;
};

// Solve the diagonal system d_e = d'(b)/d(b) in the PTM representation and
// transform back to (possibly signed) Pauli weights.
QuasiProbabilityScheme boost_error(const PauliChannel& noisy,
                                   const PauliChannel& target);

// ===========================================================================
// Gate-attached noise model.
// ===========================================================================

struct NoiseModel {
  NoiseKind kind = NoiseKind::Depolarizing;
  bool loose_pauli_set = false;

  bool breaks_z2() const { return kind == NoiseKind::TransverseDamping; }

  // Local noise generator on the given support, norm-calibrated against
  // depolarizing (see header comment).  `bond_gate` selects the allowed
  // Pauli set for RandomPauli.
  Mat generator(int nsites, bool bond_gate) const;
  Mat generator_for(const GateGenerator& gate) const;
};

// Global Z2 symmetry superoperator: conjugation by prod_l sigma_l^z.
Mat z2_superop(int nqubits);

}  // namespace dxyz

// Hilbert-Schmidt space core: vectorization, superoperator assembly, and the
// local-channel application kernel shared by every higher-level module.
//
// Conventions (fixed project-wide):
//  * Vectorization is row-stacking: vec(X)[i*d + j] = X(i,j), so that
//    vec(A X B) = (A (x) B^T) vec(X).  All superoperators below assume it.
//  * Qubit s of an n-qubit register occupies bit (n-1-s) of a basis index,
//    i.e. site 0 is the leftmost tensor factor.
//  * Basis state 0 of a single qubit is the dissipative ground state with
//    sigma_z = -1; basis state 1 is the excited state with sigma_z = +1.
//    sigma_minus maps |1> -> |0>, so the all-ground product state has
//    magnetization -1.

#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dxyz {

using Complex = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

// ===========================================================================
// Pauli matrices in the ground-first basis (see header comment).
// ===========================================================================

namespace pauli {

Mat I();
Mat X();
Mat Y();
Mat Z();
Mat Plus();   // raising operator |0> -> |1>
Mat Minus();  // lowering operator |1> -> |0> (decay toward the ground state)

// op(0..3) = I, X, Y, Z
Mat op(int which);

// k-qubit Pauli string from base-4 digits, digit for site 0 most significant.
Mat string_op(int label, int k);

}  // namespace pauli

// ===========================================================================
// Vectorization and elementary superoperator algebra.
// ===========================================================================

Mat kron(const Mat& a, const Mat& b);

// Row-stacking vec / unvec.
Vec vectorize(const Mat& x);
Mat devectorize(const Vec& v);

// Hilbert-Schmidt inner product <<a|b>> = Tr(a^dag b) = vec(a)^dag vec(b).
Complex hs_inner(const Mat& a, const Mat& b);

// Superoperators for left/right multiplication: spre(A) vec(X) = vec(A X),
// spost(B) vec(X) = vec(X B).
Mat spre(const Mat& a);
Mat spost(const Mat& b);

// Conjugation superoperator [U]: vec(X) -> vec(U X U^dag).
Mat sconj(const Mat& u);

// Generator of the Lindblad master equation as a dense superoperator,
//   L = -i (H (x) 1 - 1 (x) H^T)
//       + sum_k rate_k [ A_k (x) A_k^* - 1/2 (A_k^dag A_k (x) 1 + 1 (x) A_k^T A_k^*) ].
// `rates` may be empty, in which case all rates default to 1.
Mat lindbladian_matrix(const Mat& H, const std::vector<Mat>& jumps,
                       const std::vector<double>& rates = {});

// True when <<1| L = 0 within tol (every Lindblad generator must satisfy it).
bool is_trace_annihilating(const Mat& superop, double tol = 1e-10);

// ===========================================================================
// Embeddings of local objects into an n-qubit register.
// ===========================================================================

// Embed a k-site operator (2^k x 2^k) acting on `sites` into 2^n x 2^n.
// sites[0] is the most significant local factor.
Mat embed_operator(const Mat& op, const std::vector<int>& sites, int nqubits);

// Embed a k-site superoperator (4^k x 4^k) into the 4^n x 4^n space.
// Primarily an oracle / assembly path; the hot path is apply_local_channel.
Mat embed_superop(const Mat& superop, const std::vector<int>& sites, int nqubits);

// Apply a k-site superoperator (k = 1 or 2) in place to an n-qubit density
// matrix without forming the 4^n x 4^n embedding.  This is the performance
// kernel of the Trotter engine.
void apply_local_channel(Mat& rho, const Mat& chan, const std::vector<int>& sites);

// Partial trace over the listed sites; returns the density matrix of the
// remaining register (site order preserved).
Mat partial_trace(const Mat& rho, const std::vector<int>& traced_sites, int nqubits);

// ===========================================================================
// Matrix functions and norms.
// ===========================================================================

// Dense matrix exponential (scaling-and-squaring with Pade approximant).
// Guarded: full-space superoperator exponentials are never formed above
// five qubits (dim > 1024 throws).
Mat dense_expm(const Mat& m);

// Principal matrix logarithm; same dimension guard as dense_expm.
Mat dense_logm(const Mat& m);

// Trace norm ||M||_1 = sum of singular values, and the trace distance
// of two density matrices, 1/2 ||a - b||_1.
double trace_norm(const Mat& m);
double trace_distance(const Mat& a, const Mat& b);

// Choi matrix of a superoperator via the row-stacking reshuffle
// C[(i,k),(j,l)] = S[(k,l),(i,j)]; completely positive maps have C >= 0.
Mat choi_matrix(const Mat& superop);

// Smallest eigenvalue of the Hermitized Choi matrix (CP check helper).
double choi_min_eigenvalue(const Mat& superop);

// ===========================================================================
// Density matrices.
// ===========================================================================

struct DensityMatrix {
  Mat m;
  int nqubits = 0;

  DensityMatrix() = default;
  DensityMatrix(Mat rho, int n);

  int dim() const { return 1 << nqubits; }

  // Unit trace (1e-10), Hermiticity (1e-10), positive semidefiniteness
  // (smallest eigenvalue > -1e-8).  Throws std::runtime_error on violation.
  void validate() const;

  static DensityMatrix maximally_mixed(int nqubits);
  static DensityMatrix basis_state(int nqubits, std::uint64_t index);
  static DensityMatrix all_ground(int nqubits);
  // Full-rank random state drawn from the Ginibre ensemble (seeded).
  static DensityMatrix random(int nqubits, std::uint64_t seed);
};

// Single-site expectation values, computed bitwise (no embedding).
double expect_z(const Mat& rho, int site, int nqubits);
double expect_x(const Mat& rho, int site, int nqubits);

}  // namespace dxyz

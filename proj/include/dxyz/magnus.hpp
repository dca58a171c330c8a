// Effective generator of one noisy Trotter cycle via the Magnus / BCH
// expansion, graded jointly in (tau, r).
//
// One cycle applies gates j = 0..N-1 in order; gate j acts as the two
// factors exp(r E_j tau) exp(G_j^id tau) — ideal evolution first, then its
// attached noise channel (the per-gate weight is folded into E_j).  This is
// exactly the product the step engine compiles.  Writing the flattened
// factor sequence as exp(Y_f tau) with Y_f in {G_j^id, r E_j}, the cycle is
//
//   exp(Y_{F-1} tau) ... exp(Y_0 tau) = exp(L_eff tau),
//
// and L_eff = L^(0) + L^(1) + L^(2) + L^(3) + O((tau+r)^4), where L^(k)
// collects all monomials tau^a r^b with a + b = k.  Ordered sums run over
// f1 >= f2 >= ... (later-applied factor on the left of each commutator) with
// the occupation multiplicity M(f1,f2,...) = prod_l m_l!, m_l the number of
// indices equal to l.

#pragma once

#include <vector>

#include "dxyz/hs.hpp"
#include "dxyz/model.hpp"
#include "dxyz/noise.hpp"

namespace dxyz {

struct MagnusGate {
  Mat ideal;  // full-space ideal generator
  Mat noise;  // full-space noise generator, weight included, not scaled by r
};

// Embed every gate of one schedule cycle into the full Hilbert-Schmidt space
// together with its attached noise generator (zero when the model is
// noiseless or the gate carries no noise weight).
std::vector<MagnusGate> magnus_gates(const XYZSchedule& schedule,
                                     const NoiseModel& noise);

struct MagnusResult {
  double tau = 0.0;
  double r = 0.0;
  std::vector<Mat> terms;  // terms[k] = grade-k contribution, k = 0..order

  // Sum of grades 0..k (defaults to all computed grades).
  Mat truncated(int order) const;
  Mat effective() const { return truncated(static_cast<int>(terms.size()) - 1); }
};

// Graded expansion of the cycle generator, orders 0..3.  The order-k partial
// sum approximates log of the exact cycle product, divided by tau, with
// residual O((tau+r)^{k+1}).
MagnusResult magnus_effective(const std::vector<MagnusGate>& gates, double tau,
                              double r, int order);

// Contract one site of a two-site superoperator against a fixed partner
// state:  keep == 0 maps X -> Tr_1[S(X (x) partner)], keep == 1 maps
// X -> Tr_0[S(partner (x) X)].  This is the single-site (mean-field)
// reduction used to close the factorized equations of motion.
Mat reduce_superop_to_site(const Mat& superop, const Mat& partner, int keep);

}  // namespace dxyz

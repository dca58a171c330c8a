// Dissipative XYZ model on an L x L square lattice: couplings, lattice
// geometry, and the Trotter gate schedule (local generators in application
// order) together with dense assembly of the full Lindbladian.
//
// Model: H = sum_bonds sum_a J_a sigma_i^a sigma_j^a with uniform single-site
// decay of rate gamma toward the sigma_z = -1 ground state.  The competition
// is parameterized by the aspect ratio g = |Jx - Jy| / (2 gamma).

#pragma once

#include <array>
#include <vector>

#include "dxyz/hs.hpp"

namespace dxyz {

enum class Boundary { Open, Periodic };

struct QubitLattice {
  int L = 2;
  Boundary boundary = Boundary::Open;

  QubitLattice() = default;
  QubitLattice(int side, Boundary b = Boundary::Open);

  int nsites() const { return L * L; }
  int site(int row, int col) const;

  struct Bond {
    int a = 0, b = 0;
    bool column = false;  // true: vertical bond (row, col)-(row+1, col)
  };

  // Each bond exactly once, column bonds first, both groups in row-major
  // order of their anchor site.  Open: 2 L (L-1) bonds; periodic: 2 L^2
  // (L >= 2); a 1 x 1 lattice has none.
  std::vector<Bond> bonds() const;
};

struct ModelSpec {
  double Jx = 0.9;
  double Jy = 1.1;
  double Jz = 1.0;
  double gamma = 1.0;

  // Convention: fix Jx and Jz, then Jy = Jx + 2 g gamma realizes a given g.
  static ModelSpec from_g(double g, double Jx = 0.9, double Jz = 1.0,
                          double gamma = 1.0);

  double g() const { return std::abs(Jx - Jy) / (2.0 * gamma); }
};

enum class GateKind { BondX, BondY, BondZ, Dissipator };
enum class GateGroup { Column, Row, Dissipation };

inline bool is_bond_gate(GateKind k) { return k != GateKind::Dissipator; }

// One local Trotter factor: the generator of either a bond Hamiltonian term
// -i [J_a sigma^a sigma^a, .] or a single-site dissipator.
struct GateGenerator {
  GateKind kind = GateKind::Dissipator;
  GateGroup group = GateGroup::Dissipation;
  std::array<int, 2> sites{0, -1};  // sites[1] = -1 for single-site gates
  Mat ideal;                        // local superoperator generator (4x4 or 16x16)
  // Fraction of one noise event budgeted to this gate.  Noise is calibrated
  // per operation block (one block = a bond with its three axis gates, or a
  // dissipator), so bond gates default to 1/3 and dissipators to 1.
  double noise_weight = 1.0;

  int nsites() const { return sites[1] < 0 ? 1 : 2; }
  std::vector<int> site_list() const;
};

struct ScheduleOptions {
  // When set, every axis gate carries a full noise event (weight 1) instead
  // of splitting one event per bond across its three axis gates.
  bool noise_per_axis_gate = false;
};

struct XYZSchedule {
  QubitLattice lattice;
  ModelSpec model;
  std::vector<GateGenerator> gates;

  int nqubits() const { return lattice.nsites(); }
};

// Build the first-order Trotter schedule in application order:
// column bonds (all x, then all y, then all z), row bonds likewise, then all
// dissipators.  Simulation paths support 1 <= L <= 3.
XYZSchedule build_xyz(const ModelSpec& model, const QubitLattice& lattice,
                      const ScheduleOptions& opts = {});

// Sum of all embedded ideal gate generators (<= 5 qubits).
Mat assemble_lindbladian(const XYZSchedule& schedule);

// Dense Lindbladian built directly from the full Hamiltonian and jump list;
// must agree with assemble_lindbladian to rounding error.
Mat exact_lindbladian(const ModelSpec& model, const QubitLattice& lattice);

// Uniform averages M = <sigma_z> and m = <sigma_x> over all sites.
double magnetization(const Mat& rho, int nqubits);
double order_parameter_x(const Mat& rho, int nqubits);

}  // namespace dxyz

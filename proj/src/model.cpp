#include "dxyz/model.hpp"

namespace dxyz {

QubitLattice::QubitLattice(int side, Boundary b) : L(side), boundary(b) {
  require(side >= 1, "lattice side must be at least 1");
}

int QubitLattice::site(int row, int col) const {
  require(row >= 0 && row < L && col >= 0 && col < L, "lattice coordinate out of range");
  return row * L + col;
}

std::vector<QubitLattice::Bond> QubitLattice::bonds() const {
  std::vector<Bond> out;
  if (L == 1) return out;
  const int rows_spanned = (boundary == Boundary::Open) ? L - 1 : L;
  for (int r = 0; r < rows_spanned; ++r)
    for (int c = 0; c < L; ++c)
      out.push_back({site(r, c), site((r + 1) % L, c), true});
  for (int r = 0; r < L; ++r)
    for (int c = 0; c < rows_spanned; ++c)
      out.push_back({site(r, c), site(r, (c + 1) % L), false});
  return out;
}

ModelSpec ModelSpec::from_g(double g, double Jx, double Jz, double gamma) {
  require(g >= 0.0, "aspect ratio g must be nonnegative");
  require(gamma > 0.0, "gamma must be positive");
  ModelSpec m;
  m.Jx = Jx;
  m.Jy = Jx + 2.0 * g * gamma;
  m.Jz = Jz;
  m.gamma = gamma;
  return m;
}

std::vector<int> GateGenerator::site_list() const {
  if (sites[1] < 0) return {sites[0]};
  return {sites[0], sites[1]};
}

namespace {

Mat bond_generator(double J, int axis) {
  const Mat s = pauli::op(axis);  // 1 = x, 2 = y, 3 = z
  return lindbladian_matrix(J * kron(s, s), {});
}

Mat dissipator_generator(double gamma) {
  return lindbladian_matrix(Mat::Zero(2, 2), {pauli::Minus()}, {gamma});
}

}  // namespace

XYZSchedule build_xyz(const ModelSpec& model, const QubitLattice& lattice,
                      const ScheduleOptions& opts) {
  require(lattice.L >= 1 && lattice.L <= 3, "simulation schedules support 1 <= L <= 3");
  require(model.gamma > 0.0, "gamma must be positive");

  XYZSchedule sched;
  sched.lattice = lattice;
  sched.model = model;

  const double bond_weight = opts.noise_per_axis_gate ? 1.0 : 1.0 / 3.0;
  const std::array<double, 3> J{model.Jx, model.Jy, model.Jz};
  const std::array<GateKind, 3> kinds{GateKind::BondX, GateKind::BondY, GateKind::BondZ};

  const auto all_bonds = lattice.bonds();
  for (bool column : {true, false}) {
    for (int axis = 0; axis < 3; ++axis) {
      for (const auto& b : all_bonds) {
        if (b.column != column) continue;
        GateGenerator g;
        g.kind = kinds[axis];
        g.group = column ? GateGroup::Column : GateGroup::Row;
        g.sites = {b.a, b.b};
        g.ideal = bond_generator(J[axis], axis + 1);
        g.noise_weight = bond_weight;
        sched.gates.push_back(std::move(g));
      }
    }
  }
  for (int s = 0; s < lattice.nsites(); ++s) {
    GateGenerator g;
    g.kind = GateKind::Dissipator;
    g.group = GateGroup::Dissipation;
    g.sites = {s, -1};
    g.ideal = dissipator_generator(model.gamma);
    g.noise_weight = 1.0;
    sched.gates.push_back(std::move(g));
  }
  return sched;
}

Mat assemble_lindbladian(const XYZSchedule& schedule) {
  const int n = schedule.nqubits();
  require(n <= 5, "dense Lindbladian assembly is limited to five qubits");
  const Eigen::Index dim = Eigen::Index(1) << n;
  Mat L = Mat::Zero(dim * dim, dim * dim);
  for (const auto& g : schedule.gates)
    L += embed_superop(g.ideal, g.site_list(), n);
  return L;
}

Mat exact_lindbladian(const ModelSpec& model, const QubitLattice& lattice) {
  const int n = lattice.nsites();
  require(n <= 5, "dense Lindbladian assembly is limited to five qubits");
  const Eigen::Index dim = Eigen::Index(1) << n;
  Mat H = Mat::Zero(dim, dim);
  const std::array<double, 3> J{model.Jx, model.Jy, model.Jz};
  for (const auto& b : lattice.bonds())
    for (int axis = 0; axis < 3; ++axis) {
      const Mat s = pauli::op(axis + 1);
      H += J[axis] * embed_operator(kron(s, s), {b.a, b.b}, n);
    }
  std::vector<Mat> jumps;
  std::vector<double> rates;
  for (int s = 0; s < n; ++s) {
    jumps.push_back(embed_operator(pauli::Minus(), {s}, n));
    rates.push_back(model.gamma);
  }
  return lindbladian_matrix(H, jumps, rates);
}

double magnetization(const Mat& rho, int nqubits) {
  double acc = 0;
  for (int s = 0; s < nqubits; ++s) acc += expect_z(rho, s, nqubits);
  return acc / nqubits;
}

double order_parameter_x(const Mat& rho, int nqubits) {
  double acc = 0;
  for (int s = 0; s < nqubits; ++s) acc += expect_x(rho, s, nqubits);
  return acc / nqubits;
}

}  // namespace dxyz

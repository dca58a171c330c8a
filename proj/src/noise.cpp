#include "dxyz/noise.hpp"

namespace dxyz {

namespace {

constexpr Complex kI{0.0, 1.0};

}  // namespace

// ===========================================================================
// Raw generators.
// ===========================================================================

Mat depolarizing_generator(int nsites) {
  require(nsites >= 1 && nsites <= 2, "noise generators support one or two sites");
  const Eigen::Index d = Eigen::Index(1) << nsites;
  const Vec vec_id = vectorize(Mat::Identity(d, d));
  return (vec_id * vec_id.adjoint()) / double(d) - Mat::Identity(d * d, d * d);
}

Mat transverse_damping_generator() {
  const Mat sx_minus = 0.5 * (pauli::Z() + kI * pauli::Y());
  const Mat sy_minus = 0.5 * (pauli::Z() - kI * pauli::X());
  const Mat dx = lindbladian_matrix(Mat::Zero(2, 2), {sx_minus});
  const Mat dy = lindbladian_matrix(Mat::Zero(2, 2), {sy_minus});
  return 0.5 * (dx + dy);
}

namespace {

// Two Pauli strings commute iff the number of positions where both carry
// distinct non-identity Paulis is even.
bool strings_commute(int a, int b, int k) {
  int anti = 0;
  for (int t = 0; t < k; ++t) {
    const int pa = (a >> (2 * t)) & 3;
    const int pb = (b >> (2 * t)) & 3;
    if (pa != 0 && pb != 0 && pa != pb) ++anti;
  }
  return anti % 2 == 0;
}

}  // namespace

Mat random_pauli_generator(bool bond_gate, bool loose_set) {
  std::vector<int> allowed;
  if (!bond_gate) {
    allowed = {3};  // sigma_z only
  } else {
    const int zz = 3 * 4 + 3;
    for (int label = 1; label < 16; ++label)
      if (loose_set || strings_commute(label, zz, 2)) allowed.push_back(label);
  }
  const int k = bond_gate ? 2 : 1;
  const Eigen::Index sd = Eigen::Index(1) << (2 * k);
  Mat gen = Mat::Zero(sd, sd);
  for (int label : allowed)
    gen += sconj(pauli::string_op(label, k)) - Mat::Identity(sd, sd);
  return gen / double(allowed.size());
}

// ===========================================================================
// Pauli-transfer representation.
// ===========================================================================

Mat ptm(const Mat& superop, int nsites) {
  require(nsites >= 1, "ptm needs at least one site");
  const Eigen::Index d = Eigen::Index(1) << nsites;
  require(superop.rows() == d * d && superop.cols() == d * d,
          "superoperator dimension does not match site count");
  const Eigen::Index nlab = d * d;
  Mat m(nlab, nlab);
  std::vector<Vec> basis(nlab);
  for (Eigen::Index b = 0; b < nlab; ++b)
    basis[b] = vectorize(pauli::string_op(int(b), nsites));
  for (Eigen::Index b = 0; b < nlab; ++b) {
    const Vec image = superop * basis[b];
    for (Eigen::Index a = 0; a < nlab; ++a)
      m(a, b) = basis[a].dot(image) / double(d);
  }
  return m;
}

double noise_norm(const Mat& superop, int nsites) {
  return ptm(superop, nsites).norm();
}

Eigen::MatrixXd walsh_sign_matrix(int nsites) {
  const Eigen::Index nlab = Eigen::Index(1) << (2 * nsites);
  Eigen::MatrixXd w(nlab, nlab);
  for (Eigen::Index a = 0; a < nlab; ++a)
    for (Eigen::Index b = 0; b < nlab; ++b)
      w(a, b) = strings_commute(int(a), int(b), nsites) ? 1.0 : -1.0;
  return w;
}

Mat PauliChannel::to_superop() const {
  const Eigen::Index nlab = p.size();
  const Eigen::Index sd = nlab;
  Mat s = Mat::Zero(sd, sd);
  for (Eigen::Index a = 0; a < nlab; ++a)
    s += p(a) * sconj(pauli::string_op(int(a), nsites));
  return s;
}

Eigen::VectorXd PauliChannel::transfer_diagonal() const {
  return walsh_sign_matrix(nsites) * p;
}

PauliChannel pauli_twirl(const Mat& channel, int nsites) {
  const Eigen::Index d = Eigen::Index(1) << nsites;
  require(channel.rows() == d * d && channel.cols() == d * d,
          "channel dimension does not match site count");
  const Eigen::Index nlab = d * d;
  Mat avg = Mat::Zero(nlab, nlab);
  for (Eigen::Index a = 0; a < nlab; ++a) {
    const Mat conj_p = sconj(pauli::string_op(int(a), nsites));
    avg += conj_p * channel * conj_p;
  }
  avg /= double(nlab);
  const Mat transfer = ptm(avg, nsites);
  Eigen::VectorXd diag(nlab);
  for (Eigen::Index a = 0; a < nlab; ++a) {
    if (std::abs(transfer(a, a).imag()) > 1e-9)
      throw std::runtime_error("twirled transfer diagonal is not real");
    diag(a) = transfer(a, a).real();
  }
  PauliChannel out;
  out.nsites = nsites;
  out.p = walsh_sign_matrix(nsites) * diag / double(nlab);
  const double total = out.p.sum();
  if (std::abs(total - 1.0) > 1e-8)
    throw std::runtime_error("twirled probabilities sum to " + std::to_string(total));
  if (out.p.minCoeff() < -1e-9)
    throw std::runtime_error("twirl produced a negative probability");
  return out;
}

QuasiProbabilityScheme boost_error(const PauliChannel& noisy,
                                   const PauliChannel& target) {
  require(noisy.nsites == target.nsites, "channel supports must match");
  require(noisy.p.size() == target.p.size(), "channel label counts must match");
  const Eigen::VectorXd dn = noisy.transfer_diagonal();
  const Eigen::VectorXd dt = target.transfer_diagonal();
  Eigen::VectorXd ratio(dn.size());
  for (Eigen::Index b = 0; b < dn.size(); ++b) {
    if (std::abs(dn(b)) < 1e-12)
      throw std::runtime_error("noisy channel is not invertible in the PTM");
    ratio(b) = dt(b) / dn(b);
  }
  QuasiProbabilityScheme out;
  out.weights = walsh_sign_matrix(noisy.nsites) * ratio / double(dn.size());
  if (std::abs(out.weights.sum() - 1.0) > 1e-8)
    throw std::runtime_error("quasi-probability weights do not sum to 1");
  out.one_norm = out.weights.cwiseAbs().sum();
  out.all_positive = out.weights.minCoeff() >= -1e-12;
  return out;
}

// ===========================================================================
// Gate-attached noise model.
// ===========================================================================

Mat NoiseModel::generator(int nsites, bool bond_gate) const {
  require(nsites >= 1 && nsites <= 2, "noise generators support one or two sites");
  const Eigen::Index sd = Eigen::Index(1) << (2 * nsites);
  switch (kind) {
    case NoiseKind::None:
      return Mat::Zero(sd, sd);
    case NoiseKind::Depolarizing:
      return depolarizing_generator(nsites);
    case NoiseKind::RandomPauli: {
      Mat gen = random_pauli_generator(bond_gate, loose_pauli_set);
      const double scale =
          noise_norm(depolarizing_generator(nsites), nsites) / noise_norm(gen, nsites);
      return scale * gen;
    }
    case NoiseKind::TransverseDamping: {
      Mat single = transverse_damping_generator();
      Mat gen;
      if (nsites == 1) {
        gen = single;
      } else {
        gen = embed_superop(single, {0}, 2) + embed_superop(single, {1}, 2);
      }
      const double scale =
          noise_norm(depolarizing_generator(nsites), nsites) / noise_norm(gen, nsites);
      return scale * gen;
    }
  }
  throw std::logic_error("unreachable noise kind");
}

Mat NoiseModel::generator_for(const GateGenerator& gate) const {
  return generator(gate.nsites(), is_bond_gate(gate.kind));
}

Mat z2_superop(int nqubits) {
  require(nqubits >= 1 && nqubits <= 5, "dense Z2 superoperator limited to five qubits");
  Mat zall = Mat::Identity(1, 1);
  for (int s = 0; s < nqubits; ++s) zall = kron(zall, pauli::Z());
  return sconj(zall);
}

}  // namespace dxyz

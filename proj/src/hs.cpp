#include "dxyz/hs.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace dxyz {

namespace {

constexpr Complex kI{0.0, 1.0};

// Bit of site s inside an n-qubit basis index (site 0 = most significant).
inline int site_bit(int nqubits, int site) { return nqubits - 1 - site; }

void check_sites(const std::vector<int>& sites, int nqubits) {
  require(!sites.empty(), "site list must not be empty");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    require(sites[i] >= 0 && sites[i] < nqubits, "site index out of range");
    for (std::size_t j = i + 1; j < sites.size(); ++j)
      require(sites[i] != sites[j], "site indices must be distinct");
  }
}

}  // namespace

// ===========================================================================
// Pauli matrices.
// ===========================================================================

namespace pauli {

Mat I() { return Mat::Identity(2, 2); }

Mat X() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

// Ground-first basis: this is the standard algebra conjugated by the bit
// swap, so sigma_y and sigma_z pick up a sign relative to the usual matrices
// while all products sigma_a sigma_b = delta_ab + i eps_abc sigma_c survive.
Mat Y() {
  Mat m(2, 2);
  m << 0, kI, -kI, 0;
  return m;
}

Mat Z() {
  Mat m(2, 2);
  m << -1, 0, 0, 1;
  return m;
}

Mat Plus() {
  Mat m = Mat::Zero(2, 2);
  m(1, 0) = 1;
  return m;
}

Mat Minus() {
  Mat m = Mat::Zero(2, 2);
  m(0, 1) = 1;
  return m;
}

Mat op(int which) {
  switch (which) {
    case 0: return I();
    case 1: return X();
    case 2: return Y();
    case 3: return Z();
    default: throw std::invalid_argument("pauli::op expects 0..3");
  }
}

Mat string_op(int label, int k) {
  require(k >= 1, "pauli string needs k >= 1");
  require(label >= 0 && label < (1 << (2 * k)), "pauli string label out of range");
  Mat m = op((label >> (2 * (k - 1))) & 3);
  for (int t = 1; t < k; ++t) m = kron(m, op((label >> (2 * (k - 1 - t))) & 3));
  return m;
}

}  // namespace pauli

// ===========================================================================
// Vectorization and superoperator algebra.
// ===========================================================================

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Vec vectorize(const Mat& x) {
  require(x.rows() == x.cols(), "vectorize expects a square matrix");
  const Eigen::Index d = x.rows();
  Vec v(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) v(i * d + j) = x(i, j);
  return v;
}

Mat devectorize(const Vec& v) {
  const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(v.size()))));
  require(d * d == v.size(), "devectorize expects a perfect-square length");
  Mat x(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = v(i * d + j);
  return x;
}

Complex hs_inner(const Mat& a, const Mat& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "hs_inner expects equal shapes");
  return (a.adjoint() * b).trace();
}

Mat spre(const Mat& a) {
  return kron(a, Mat::Identity(a.rows(), a.cols()));
}

Mat spost(const Mat& b) {
  return kron(Mat::Identity(b.rows(), b.cols()), b.transpose());
}

Mat sconj(const Mat& u) { return kron(u, u.conjugate()); }

Mat lindbladian_matrix(const Mat& H, const std::vector<Mat>& jumps,
                       const std::vector<double>& rates) {
  require(H.rows() == H.cols(), "Hamiltonian must be square");
  require(rates.empty() || rates.size() == jumps.size(),
          "rates must be empty or match the jump list");
  const Eigen::Index d = H.rows();
  const Mat id = Mat::Identity(d, d);
  Mat L = -kI * (kron(H, id) - kron(id, H.transpose()));
  for (std::size_t k = 0; k < jumps.size(); ++k) {
    const Mat& A = jumps[k];
    require(A.rows() == d && A.cols() == d, "jump operator dimension mismatch");
    const double rate = rates.empty() ? 1.0 : rates[k];
    require(rate >= 0.0, "jump rates must be nonnegative");
    const Mat AdA = A.adjoint() * A;
    L += rate * (kron(A, A.conjugate()) -
                 0.5 * (kron(AdA, id) + kron(id, AdA.transpose())));
  }
  return L;
}

bool is_trace_annihilating(const Mat& superop, double tol) {
  const auto d = static_cast<Eigen::Index>(
      std::llround(std::sqrt(double(superop.rows()))));
  require(d * d == superop.rows() && superop.rows() == superop.cols(),
          "superoperator must be d^2 x d^2");
  const Vec tr = vectorize(Mat::Identity(d, d));
  return (tr.adjoint() * superop).norm() <= tol;
}

// ===========================================================================
// Embeddings.
// ===========================================================================

namespace {

// placed[a] = bits of the k-bit local index a distributed to the global bit
// positions of `sites` (sites[0] most significant locally).
std::vector<std::uint64_t> placement_table(const std::vector<int>& sites, int nqubits) {
  const int k = static_cast<int>(sites.size());
  std::vector<std::uint64_t> placed(std::size_t(1) << k, 0);
  for (std::uint64_t a = 0; a < placed.size(); ++a) {
    std::uint64_t g = 0;
    for (int t = 0; t < k; ++t)
      if ((a >> (k - 1 - t)) & 1u) g |= std::uint64_t(1) << site_bit(nqubits, sites[t]);
    placed[a] = g;
  }
  return placed;
}

std::uint64_t site_mask(const std::vector<int>& sites, int nqubits) {
  std::uint64_t m = 0;
  for (int s : sites) m |= std::uint64_t(1) << site_bit(nqubits, s);
  return m;
}

// Extract the local k-bit index of a global basis index.
std::uint64_t local_bits(std::uint64_t g, const std::vector<int>& sites, int nqubits) {
  const int k = static_cast<int>(sites.size());
  std::uint64_t a = 0;
  for (int t = 0; t < k; ++t)
    if ((g >> site_bit(nqubits, sites[t])) & 1u) a |= std::uint64_t(1) << (k - 1 - t);
  return a;
}

}  // namespace

Mat embed_operator(const Mat& op, const std::vector<int>& sites, int nqubits) {
  check_sites(sites, nqubits);
  const int k = static_cast<int>(sites.size());
  require(op.rows() == (1 << k) && op.cols() == (1 << k),
          "operator dimension does not match site count");
  const std::uint64_t dim = std::uint64_t(1) << nqubits;
  const std::uint64_t mask = site_mask(sites, nqubits);
  const auto placed = placement_table(sites, nqubits);
  Mat out = Mat::Zero(dim, dim);
  for (std::uint64_t j = 0; j < dim; ++j) {
    const std::uint64_t env = j & ~mask;
    const std::uint64_t bj = local_bits(j, sites, nqubits);
    for (std::uint64_t bi = 0; bi < placed.size(); ++bi) {
      const Complex v = op(bi, bj);
      if (v != Complex(0.0, 0.0)) out(env | placed[bi], j) = v;
    }
  }
  return out;
}

Mat embed_superop(const Mat& superop, const std::vector<int>& sites, int nqubits) {
  check_sites(sites, nqubits);
  require(nqubits <= 5, "embedded superoperators are limited to five qubits");
  const int k = static_cast<int>(sites.size());
  const int ld = 1 << k;
  require(superop.rows() == ld * ld && superop.cols() == ld * ld,
          "superoperator dimension does not match site count");
  const std::uint64_t dim = std::uint64_t(1) << nqubits;
  const std::uint64_t mask = site_mask(sites, nqubits);
  const auto placed = placement_table(sites, nqubits);
  Mat out = Mat::Zero(dim * dim, dim * dim);
  for (std::uint64_t i = 0; i < dim; ++i) {
    const std::uint64_t env_r = i & ~mask;
    const std::uint64_t a = local_bits(i, sites, nqubits);
    for (std::uint64_t j = 0; j < dim; ++j) {
      const std::uint64_t env_c = j & ~mask;
      const std::uint64_t b = local_bits(j, sites, nqubits);
      const std::uint64_t col = i * dim + j;
      for (int ap = 0; ap < ld; ++ap)
        for (int bp = 0; bp < ld; ++bp) {
          const Complex v = superop(ap * ld + bp, a * ld + b);
          if (v != Complex(0.0, 0.0))
            out((env_r | placed[ap]) * dim + (env_c | placed[bp]), col) = v;
        }
    }
  }
  return out;
}

namespace {

// Fixed-size kernel: gather the local block, apply the channel, scatter back.
template <int K>
void apply_channel_fixed(Mat& rho, const Mat& chan, const std::vector<int>& sites,
                         int nqubits) {
  constexpr int m = 1 << K;       // local Hilbert dimension
  constexpr int loc = m * m;      // local superoperator dimension
  Eigen::Matrix<Complex, loc, loc> C = chan;
  Eigen::Matrix<Complex, loc, 1> buf, out;

  const std::uint64_t mask = site_mask(sites, nqubits);
  const std::uint64_t full = (std::uint64_t(1) << nqubits) - 1;
  const std::uint64_t env_limit = full & ~mask;
  const auto placed = placement_table(sites, nqubits);

  // Iterate every value of the complement bits via the carry trick.
  std::uint64_t e = 0;
  while (true) {
    std::uint64_t f = 0;
    while (true) {
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          buf(a * m + b) = rho(e | placed[a], f | placed[b]);
      out.noalias() = C * buf;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
          rho(e | placed[a], f | placed[b]) = out(a * m + b);
      if (f == env_limit) break;
      f = ((f | mask) + 1) & ~mask;
    }
    if (e == env_limit) break;
    e = ((e | mask) + 1) & ~mask;
  }
}

}  // namespace

void apply_local_channel(Mat& rho, const Mat& chan, const std::vector<int>& sites) {
  require(rho.rows() == rho.cols(), "density matrix must be square");
  int nqubits = 0;
  while ((Eigen::Index(1) << nqubits) < rho.rows()) ++nqubits;
  require((Eigen::Index(1) << nqubits) == rho.rows(),
          "density matrix dimension must be a power of two");
  check_sites(sites, nqubits);
  const int k = static_cast<int>(sites.size());
  require(k == 1 || k == 2, "apply_local_channel supports one- and two-site channels");
  const int ld = 1 << k;
  require(chan.rows() == ld * ld && chan.cols() == ld * ld,
          "channel dimension does not match site count");
  if (k == 1)
    apply_channel_fixed<1>(rho, chan, sites, nqubits);
  else
    apply_channel_fixed<2>(rho, chan, sites, nqubits);
}

Mat partial_trace(const Mat& rho, const std::vector<int>& traced_sites, int nqubits) {
  check_sites(traced_sites, nqubits);
  require(rho.rows() == (Eigen::Index(1) << nqubits), "density matrix dimension mismatch");
  std::vector<int> kept;
  for (int s = 0; s < nqubits; ++s)
    if (std::find(traced_sites.begin(), traced_sites.end(), s) == traced_sites.end())
      kept.push_back(s);
  const int nk = static_cast<int>(kept.size());
  const std::uint64_t kdim = std::uint64_t(1) << nk;
  const auto place_kept = placement_table(kept, nqubits);
  const auto place_traced = placement_table(traced_sites, nqubits);
  Mat out = Mat::Zero(kdim, kdim);
  for (std::uint64_t i = 0; i < kdim; ++i)
    for (std::uint64_t j = 0; j < kdim; ++j) {
      Complex acc = 0;
      for (std::uint64_t t = 0; t < place_traced.size(); ++t)
        acc += rho(place_kept[i] | place_traced[t], place_kept[j] | place_traced[t]);
      out(i, j) = acc;
    }
  return out;
}

// ===========================================================================
// Matrix functions and norms.
// ===========================================================================

Mat dense_expm(const Mat& m) {
  require(m.rows() == m.cols(), "dense_expm expects a square matrix");
  require(m.rows() <= 1024, "refusing full-space exponential above five qubits");
  return m.exp();
}

Mat dense_logm(const Mat& m) {
  require(m.rows() == m.cols(), "dense_logm expects a square matrix");
  require(m.rows() <= 1024, "refusing full-space logarithm above five qubits");
  return m.log();
}

double trace_norm(const Mat& m) {
  return Eigen::BDCSVD<Mat>(m).singularValues().sum();
}

double trace_distance(const Mat& a, const Mat& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "trace_distance expects equal shapes");
  return 0.5 * trace_norm(a - b);
}

Mat choi_matrix(const Mat& superop) {
  const auto d = static_cast<Eigen::Index>(
      std::llround(std::sqrt(double(superop.rows()))));
  require(d * d == superop.rows() && superop.rows() == superop.cols(),
          "superoperator must be d^2 x d^2");
  Mat choi(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index l = 0; l < d; ++l)
          choi(i * d + k, j * d + l) = superop(k * d + l, i * d + j);
  return choi;
}

double choi_min_eigenvalue(const Mat& superop) {
  Mat choi = choi_matrix(superop);
  choi = 0.5 * (choi + choi.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(choi, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ===========================================================================
// Density matrices.
// ===========================================================================

DensityMatrix::DensityMatrix(Mat rho, int n) : m(std::move(rho)), nqubits(n) {
  require(n >= 1, "density matrix needs at least one qubit");
  require(m.rows() == (Eigen::Index(1) << n) && m.cols() == m.rows(),
          "density matrix dimension does not match qubit count");
}

void DensityMatrix::validate() const {
  const double tr_err = std::abs(m.trace() - Complex(1.0, 0.0));
  if (tr_err > 1e-10)
    throw std::runtime_error("density matrix trace deviates from 1 by " +
                             std::to_string(tr_err));
  const double herm_err = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm_err > 1e-10)
    throw std::runtime_error("density matrix Hermiticity violated by " +
                             std::to_string(herm_err));
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.adjoint()),
                                        Eigen::EigenvaluesOnly);
  const double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -1e-8)
    throw std::runtime_error("density matrix has negative eigenvalue " +
                             std::to_string(min_eig));
}

DensityMatrix DensityMatrix::maximally_mixed(int nqubits) {
  const Eigen::Index d = Eigen::Index(1) << nqubits;
  return DensityMatrix(Mat::Identity(d, d) / double(d), nqubits);
}

DensityMatrix DensityMatrix::basis_state(int nqubits, std::uint64_t index) {
  const Eigen::Index d = Eigen::Index(1) << nqubits;
  require(index < std::uint64_t(d), "basis state index out of range");
  Mat m = Mat::Zero(d, d);
  m(index, index) = 1.0;
  return DensityMatrix(std::move(m), nqubits);
}

DensityMatrix DensityMatrix::all_ground(int nqubits) {
  return basis_state(nqubits, 0);
}

DensityMatrix DensityMatrix::random(int nqubits, std::uint64_t seed) {
  const Eigen::Index d = Eigen::Index(1) << nqubits;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat g(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) g(i, j) = Complex(gauss(rng), gauss(rng));
  Mat rho = g * g.adjoint();
  rho /= rho.trace();
  return DensityMatrix(std::move(rho), nqubits);
}

double expect_z(const Mat& rho, int site, int nqubits) {
  require(rho.rows() == (Eigen::Index(1) << nqubits), "dimension mismatch");
  require(site >= 0 && site < nqubits, "site index out of range");
  const std::uint64_t dim = std::uint64_t(1) << nqubits;
  const int bit = site_bit(nqubits, site);
  double acc = 0;
  for (std::uint64_t c = 0; c < dim; ++c) {
    const double sign = ((c >> bit) & 1u) ? 1.0 : -1.0;
    acc += sign * rho(c, c).real();
  }
  return acc;
}

double expect_x(const Mat& rho, int site, int nqubits) {
  require(rho.rows() == (Eigen::Index(1) << nqubits), "dimension mismatch");
  require(site >= 0 && site < nqubits, "site index out of range");
  const std::uint64_t dim = std::uint64_t(1) << nqubits;
  const std::uint64_t flip = std::uint64_t(1) << site_bit(nqubits, site);
  double acc = 0;
  for (std::uint64_t c = 0; c < dim; ++c) acc += rho(c ^ flip, c).real();
  return acc;
}

}  // namespace dxyz

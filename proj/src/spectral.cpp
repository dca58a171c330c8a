#include "dxyz/spectral.hpp"

#include <algorithm>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace dxyz {

namespace {

constexpr double kZeroTol = 1e-10;
constexpr double kClusterTol = 1e-8;

}  // namespace

std::vector<int> SpectralDecomposition::sorted_indices() const {
  std::vector<int> idx(eigenvalues.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return -eigenvalues(a).real() < -eigenvalues(b).real();
  });
  return idx;
}

bool SpectralDecomposition::is_degenerate(int index) const {
  for (const auto& cluster : degenerate_clusters)
    if (cluster.size() > 1 &&
        std::find(cluster.begin(), cluster.end(), index) != cluster.end())
      return true;
  return false;
}

SpectralDecomposition spectrum(const Mat& superop) {
  require(superop.rows() == superop.cols(), "superoperator must be square");
  const auto d = static_cast<Eigen::Index>(
      std::llround(std::sqrt(double(superop.rows()))));
  require(d * d == superop.rows(), "superoperator must be d^2 x d^2");

  Eigen::ComplexEigenSolver<Mat> es(superop);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigendecomposition failed to converge");

  SpectralDecomposition dec;
  dec.hsdim = int(d);
  dec.eigenvalues = es.eigenvalues();
  dec.right = es.eigenvectors();
  dec.left = dec.right.inverse();

  // Steady mode: smallest |lambda|; count near-zero eigenvalues.
  int steady = 0;
  for (Eigen::Index a = 0; a < dec.eigenvalues.size(); ++a) {
    if (std::abs(dec.eigenvalues(a)) < std::abs(dec.eigenvalues(steady)))
      steady = int(a);
    if (std::abs(dec.eigenvalues(a)) <= kZeroTol) ++dec.zero_count;
  }
  dec.steady_index = steady;

  // Rescale the steady pair: unit-trace right vector, trace-functional left.
  const Complex tr = devectorize(dec.right.col(steady)).trace();
  if (std::abs(tr) > 1e-12) {
    dec.right.col(steady) /= tr;
    dec.left.row(steady) *= tr;
  }

  dec.biorth_residual =
      (dec.left * dec.right - Mat::Identity(d * d, d * d)).cwiseAbs().maxCoeff();

  Eigen::BDCSVD<Mat> svd(dec.right);
  const auto& sv = svd.singularValues();
  dec.eigvec_condition = sv(0) / std::max(sv(sv.size() - 1), 1e-300);

  // Cluster eigenvalues by proximity.
  std::vector<int> order(dec.eigenvalues.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<char> used(order.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (used[i]) continue;
    std::vector<int> cluster{order[i]};
    used[i] = 1;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(dec.eigenvalues(order[i]) - dec.eigenvalues(order[j])) <=
          kClusterTol) {
        cluster.push_back(order[j]);
        used[j] = 1;
      }
    }
    dec.degenerate_clusters.push_back(std::move(cluster));
  }
  return dec;
}

Mat steady_state_exact(const SpectralDecomposition& dec) {
  if (dec.zero_count != 1)
    throw std::runtime_error("zero eigenvalue count is " +
                             std::to_string(dec.zero_count) +
                             "; steady state is not unique");
  Mat rho = devectorize(dec.right.col(dec.steady_index));
  const Complex tr = rho.trace();
  if (std::abs(tr) < 1e-12)
    throw std::runtime_error("null vector has vanishing trace");
  rho /= tr;
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return rho;
}

Mat steady_state_exact(const Mat& superop) {
  return steady_state_exact(spectrum(superop));
}

double relaxation_gap(const SpectralDecomposition& dec) {
  double gap = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < dec.eigenvalues.size(); ++a) {
    if (int(a) == dec.steady_index) continue;
    gap = std::min(gap, -dec.eigenvalues(a).real());
  }
  return gap;
}

Mat generalized_inverse(const SpectralDecomposition& dec, double* min_nonzero) {
  const Eigen::Index n = dec.eigenvalues.size();
  Vec inv = Vec::Zero(n);
  double smallest = std::numeric_limits<double>::infinity();
  for (Eigen::Index a = 0; a < n; ++a) {
    if (int(a) == dec.steady_index) continue;
    const double mag = std::abs(dec.eigenvalues(a));
    smallest = std::min(smallest, mag);
    inv(a) = 1.0 / dec.eigenvalues(a);
  }
  if (min_nonzero) *min_nonzero = smallest;
  return dec.right * inv.asDiagonal() * dec.left;
}

PerturbSeries perturb_steady_state(const SpectralDecomposition& dec,
                                   const Mat& lp, int max_order) {
  require(max_order >= 1, "perturbation order must be at least 1");
  require(lp.rows() == dec.eigenvalues.size() && lp.cols() == lp.rows(),
          "perturbation dimension mismatch");
  const Mat ginv = generalized_inverse(dec);
  const Mat step = -ginv * lp;

  PerturbSeries out;
  Eigen::BDCSVD<Mat> svd(step);
  out.contraction = svd.singularValues()(0);

  Vec v = dec.right.col(dec.steady_index);  // unit-trace steady vector
  for (int k = 1; k <= max_order; ++k) {
    v = step * v;
    out.corrections.push_back(devectorize(v));
  }
  return out;
}

EigenvalueCorrection perturb_eigenvalue(const SpectralDecomposition& dec,
                                        const Mat& lp, int index) {
  require(index >= 0 && index < dec.eigenvalues.size(),
          "eigenvalue index out of range");
  require(lp.rows() == dec.eigenvalues.size() && lp.cols() == lp.rows(),
          "perturbation dimension mismatch");
  if (dec.is_degenerate(index))
    throw std::runtime_error(
        "target eigenvalue sits in a degenerate cluster; "
        "nondegenerate perturbation theory does not apply");

  const Vec lp_r = lp * dec.right.col(index);

  EigenvalueCorrection out;
  out.first = (dec.left.row(index) * lp_r)(0);
  const Complex lam_a = dec.eigenvalues(index);
  Complex second = 0.0;
  for (Eigen::Index b = 0; b < dec.eigenvalues.size(); ++b) {
    if (int(b) == index) continue;
    const Complex dlam = lam_a - dec.eigenvalues(b);
    const Complex up = (dec.left.row(index) * (lp * dec.right.col(b)))(0);
    const Complex down = (dec.left.row(b) * lp_r)(0);
    if (std::abs(dlam) <= 1e-8) {
      out.skipped_coupling = std::max(out.skipped_coupling, std::abs(up * down));
      continue;
    }
    second += up * down / dlam;
  }
  out.second = second;
  return out;
}

}  // namespace dxyz

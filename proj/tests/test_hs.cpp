// Hilbert-Schmidt core: Pauli conventions, vectorization, superoperator
// algebra, embeddings, partial trace, matrix functions, and Choi positivity.

#include <doctest.h>

#include <vector>

#include "dxyz/hs.hpp"

using namespace dxyz;
using namespace dxyz::pauli;

namespace {

double mdist(const Mat& a, const Mat& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("hs") {

TEST_CASE("pauli algebra in the ground-first basis") {
  // Basis state 0 is the sigma_z = -1 ground state.
  CHECK(Z()(0, 0) == Complex(-1.0, 0.0));
  CHECK(Z()(1, 1) == Complex(1.0, 0.0));
  // Raising maps ground to excited; lowering decays toward ground.
  CHECK(Plus()(1, 0) == Complex(1.0, 0.0));
  CHECK(Minus()(0, 1) == Complex(1.0, 0.0));
  CHECK(mdist(Plus(), Mat((X() + Complex(0, 1) * Y()) / 2.0)) < 1e-15);
  CHECK(mdist(Minus(), Mat((X() - Complex(0, 1) * Y()) / 2.0)) < 1e-15);
  // The su(2) algebra survives the basis reordering.
  CHECK(mdist(Mat(X() * Y()), Mat(Complex(0, 1) * Z())) < 1e-15);
  CHECK(mdist(Mat(Y() * Z()), Mat(Complex(0, 1) * X())) < 1e-15);
  CHECK(mdist(Mat(Z() * X()), Mat(Complex(0, 1) * Y())) < 1e-15);
  for (int a = 1; a < 4; ++a) {
    CHECK(mdist(Mat(op(a) * op(a)), I()) < 1e-15);
    CHECK(std::abs(op(a).trace()) < 1e-15);
    CHECK(mdist(op(a), op(a).adjoint()) < 1e-15);
  }
  CHECK_THROWS(op(4));
}

TEST_CASE("pauli string labels use base-4 digits, site 0 most significant") {
  CHECK(mdist(string_op(0, 2), kron(I(), I())) < 1e-15);
  // label = 4*1 + 3 = 7 -> X on site 0, Z on site 1.
  CHECK(mdist(string_op(7, 2), kron(X(), Z())) < 1e-15);
  CHECK(mdist(string_op(2, 1), Y()) < 1e-15);
  // 3 sites, label 4^2*2 + 4*0 + 1 = 33 -> Y (x) I (x) X.
  CHECK(mdist(string_op(33, 3), kron(kron(Y(), I()), X())) < 1e-15);
  CHECK_THROWS(string_op(16, 2));
  CHECK_THROWS(string_op(-1, 1));
}

TEST_CASE("vectorization is row-stacking and devectorize inverts it") {
  Mat x(2, 2);
  x << Complex(1, 2), Complex(3, 4), Complex(5, 6), Complex(7, 8);
  const Vec v = vectorize(x);
  // vec(X)[i*d + j] = X(i, j).
  CHECK(v(0) == x(0, 0));
  CHECK(v(1) == x(0, 1));
  CHECK(v(2) == x(1, 0));
  CHECK(v(3) == x(1, 1));
  CHECK(mdist(devectorize(v), x) < 1e-15);

  const Mat big = Mat::Random(8, 8);
  CHECK(mdist(devectorize(vectorize(big)), big) < 1e-15);
}

TEST_CASE("spre, spost, sconj act as multiplication superoperators") {
  const Mat a = Mat::Random(4, 4);
  const Mat b = Mat::Random(4, 4);
  const Mat x = Mat::Random(4, 4);
  CHECK(mdist(devectorize(spre(a) * vectorize(x)), Mat(a * x)) < 1e-12);
  CHECK(mdist(devectorize(spost(b) * vectorize(x)), Mat(x * b)) < 1e-12);
  // vec(A X B) = (A (x) B^T) vec(X) under row stacking.
  CHECK(mdist(Mat(spre(a) * spost(b)), kron(a, b.transpose())) < 1e-12);
  CHECK(mdist(devectorize(Mat(spre(a) * spost(b)) * vectorize(x)),
              Mat(a * x * b)) < 1e-12);
  // Conjugation by a unitary.
  const Mat u = dense_expm(Complex(0, 0.37) * X());
  CHECK(mdist(sconj(u), Mat(spre(u) * spost(u.adjoint()))) < 1e-12);
}

TEST_CASE("hs_inner matches the trace form and the vectorized form") {
  const Mat a = Mat::Random(3, 3);
  const Mat b = Mat::Random(3, 3);
  const Complex direct = (a.adjoint() * b).trace();
  CHECK(std::abs(hs_inner(a, b) - direct) < 1e-12);
  CHECK(std::abs(hs_inner(a, b) - vectorize(a).dot(vectorize(b))) < 1e-12);
}

TEST_CASE("single-qubit decay lindbladian matches the hand-built matrix") {
  const double gamma = 1.7;
  const Mat L = lindbladian_matrix(Mat::Zero(2, 2), {Minus()}, {gamma});
  // Populations: |1><1| -> gamma(|0><0| - |1><1|); ground is dark.
  Mat p1 = Mat::Zero(2, 2);
  p1(1, 1) = 1;
  Mat p0 = Mat::Zero(2, 2);
  p0(0, 0) = 1;
  CHECK(mdist(devectorize(L * vectorize(p1)), Mat(gamma * (p0 - p1))) < 1e-12);
  CHECK(devectorize(L * vectorize(p0)).cwiseAbs().maxCoeff() < 1e-14);
  // Coherences decay at gamma/2.
  Mat coh = Mat::Zero(2, 2);
  coh(0, 1) = 1;
  CHECK(mdist(devectorize(L * vectorize(coh)), Mat(-0.5 * gamma * coh)) < 1e-12);
  CHECK(is_trace_annihilating(L));
  // Adding a Hamiltonian keeps the trace annihilated.
  const Mat L2 = lindbladian_matrix(0.3 * X() + 0.9 * Z(), {Minus(), Z()},
                                    {0.4, 0.2});
  CHECK(is_trace_annihilating(L2));
  CHECK_FALSE(is_trace_annihilating(spre(Z())));
  // Empty rate list defaults every rate to one.
  CHECK(mdist(lindbladian_matrix(Mat::Zero(2, 2), {Minus()}),
              lindbladian_matrix(Mat::Zero(2, 2), {Minus()}, {1.0})) < 1e-15);
}

TEST_CASE("embed_operator places factors with site 0 leftmost") {
  CHECK(mdist(embed_operator(X(), {0}, 3), kron(kron(X(), I()), I())) < 1e-15);
  CHECK(mdist(embed_operator(X(), {1}, 3), kron(kron(I(), X()), I())) < 1e-15);
  CHECK(mdist(embed_operator(X(), {2}, 3), kron(kron(I(), I()), X())) < 1e-15);
  // Two-site operator A (x) B on sites {0, 2}: A at site 0, B at site 2.
  const Mat ab = kron(X(), Z());
  CHECK(mdist(embed_operator(ab, {0, 2}, 3), kron(kron(X(), I()), Z())) < 1e-15);
  // Reversed site list transposes the roles.
  CHECK(mdist(embed_operator(ab, {2, 0}, 3), kron(kron(Z(), I()), X())) < 1e-15);
  CHECK_THROWS(embed_operator(X(), {3}, 3));
  CHECK_THROWS(embed_operator(ab, {1, 1}, 3));
}

TEST_CASE("embed_superop is conjugation-compatible with embed_operator") {
  const Mat u2 = dense_expm(Complex(0, 1) * (0.3 * kron(X(), Y()) +
                                             0.7 * kron(Z(), I())));
  for (const std::vector<int>& sites :
       {std::vector<int>{0, 1}, {1, 0}, {0, 2}, {2, 1}}) {
    const Mat lhs = embed_superop(sconj(u2), sites, 3);
    const Mat rhs = sconj(embed_operator(u2, sites, 3));
    CHECK(mdist(lhs, rhs) < 1e-12);
  }
  const Mat u1 = dense_expm(Complex(0, 1) * 0.9 * Y());
  CHECK(mdist(embed_superop(sconj(u1), {1}, 3),
              sconj(embed_operator(u1, {1}, 3))) < 1e-12);
}

TEST_CASE("apply_local_channel agrees with the dense embedding") {
  const int n = 3;
  const DensityMatrix rho0 = DensityMatrix::random(n, 41);
  // An arbitrary (not necessarily physical) superoperator stresses the index
  // bookkeeping harder than a CPTP one.
  Mat chan2 = Mat::Random(16, 16);
  Mat chan1 = Mat::Random(4, 4);
  for (const std::vector<int>& sites :
       {std::vector<int>{0, 1}, {1, 0}, {0, 2}, {2, 1}, {1, 2}, {2, 0}}) {
    Mat rho = rho0.m;
    apply_local_channel(rho, chan2, sites);
    const Mat want =
        devectorize(embed_superop(chan2, sites, n) * vectorize(rho0.m));
    CHECK(mdist(rho, want) < 1e-12);
  }
  for (int site = 0; site < n; ++site) {
    Mat rho = rho0.m;
    apply_local_channel(rho, chan1, {site});
    const Mat want =
        devectorize(embed_superop(chan1, {site}, n) * vectorize(rho0.m));
    CHECK(mdist(rho, want) < 1e-12);
  }
}

TEST_CASE("partial trace removes the right factors") {
  const Mat r0 = DensityMatrix::random(1, 7).m;
  const Mat r1 = DensityMatrix::random(1, 8).m;
  const Mat r2 = DensityMatrix::random(1, 9).m;
  const Mat prod = kron(kron(r0, r1), r2);
  CHECK(mdist(partial_trace(prod, {1}, 3), kron(r0, r2)) < 1e-12);
  CHECK(mdist(partial_trace(prod, {0, 2}, 3), r1) < 1e-12);
  CHECK(mdist(partial_trace(prod, {2}, 3), kron(r0, r1)) < 1e-12);
  // Bell state reduces to the maximally mixed state.
  Vec bell = Vec::Zero(4);
  bell(0) = 1.0 / std::sqrt(2.0);
  bell(3) = 1.0 / std::sqrt(2.0);
  const Mat rho_bell = bell * bell.adjoint();
  CHECK(mdist(partial_trace(rho_bell, {0}, 2), Mat(0.5 * I())) < 1e-12);
  // Trace is preserved.
  const Mat rnd = DensityMatrix::random(3, 3).m;
  CHECK(std::abs(partial_trace(rnd, {1}, 3).trace() - Complex(1.0)) < 1e-12);
}

TEST_CASE("dense_expm and dense_logm on known cases") {
  // Nilpotent: exp(N) = 1 + N exactly.
  Mat nil = Mat::Zero(2, 2);
  nil(0, 1) = 3.5;
  CHECK(mdist(dense_expm(nil), Mat(Mat::Identity(2, 2) + nil)) < 1e-14);
  // Rotation generator: exp(-i theta X) = cos(theta) - i sin(theta) X.
  const double th = 0.6180339887;
  const Mat rot = dense_expm(Complex(0, -th) * X());
  CHECK(mdist(rot, Mat(std::cos(th) * I() - Complex(0, 1) * std::sin(th) * X()))
        < 1e-13);
  // log(exp(K)) = K for small-norm K (principal branch).
  Mat k = 0.2 * Mat::Random(6, 6);
  CHECK(mdist(dense_logm(dense_expm(k)), k) < 1e-10);
  // Dimension guard for full-space superoperators.
  CHECK_THROWS(dense_expm(Mat::Zero(1025, 1025)));
  CHECK_THROWS(dense_logm(Mat::Zero(1025, 1025)));
}

TEST_CASE("trace norm and trace distance") {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 3.0;
  d(1, 1) = -4.0;
  CHECK(trace_norm(d) == doctest::Approx(7.0).epsilon(1e-12));
  // Orthogonal pure states are at distance one.
  Mat p0 = Mat::Zero(2, 2), p1 = Mat::Zero(2, 2);
  p0(0, 0) = 1;
  p1(1, 1) = 1;
  CHECK(trace_distance(p0, p1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(trace_distance(p0, p0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(trace_distance(p0, Mat(0.5 * Mat::Identity(2, 2)))
        == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("choi positivity separates channels from non-channels") {
  // Unitary conjugation is completely positive.
  const Mat u = dense_expm(Complex(0, 1) * (0.4 * X() + 0.3 * Z()));
  CHECK(choi_min_eigenvalue(sconj(u)) > -1e-12);
  // A finite-time decay channel is completely positive.
  const Mat chan = dense_expm(lindbladian_matrix(0.2 * X(), {Minus()}) * 0.7);
  CHECK(choi_min_eigenvalue(chan) > -1e-12);
  // The transpose map is positive but not completely positive.
  Mat transpose_map = Mat::Zero(4, 4);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Mat unit = Mat::Zero(2, 2);
      unit(i, j) = 1;
      transpose_map.col(i * 2 + j) = vectorize(Mat(unit.transpose()));
    }
  CHECK(choi_min_eigenvalue(transpose_map) < -0.4);
  // Choi matrix of the identity map is the unnormalized Bell projector.
  const Mat c = choi_matrix(Mat::Identity(4, 4));
  CHECK(std::abs(c.trace() - Complex(2.0)) < 1e-12);
  CHECK(mdist(c, c.adjoint()) < 1e-12);
}

TEST_CASE("random density matrices are reproducible and physical") {
  const DensityMatrix a = DensityMatrix::random(2, 123);
  const DensityMatrix b = DensityMatrix::random(2, 123);
  const DensityMatrix c = DensityMatrix::random(2, 124);
  CHECK(mdist(a.m, b.m) == 0.0);    // same seed, bitwise identical
  CHECK(mdist(a.m, c.m) > 1e-3);    // different seed, different state
  CHECK(std::abs(a.m.trace() - Complex(1.0)) < 1e-12);
  CHECK(mdist(a.m, a.m.adjoint()) < 1e-12);
  Eigen::SelfAdjointEigenSolver<Mat> es(a.m);
  CHECK(es.eigenvalues().minCoeff() > -1e-12);
}

TEST_CASE("expect_z and expect_x match the embedded-operator trace") {
  const int n = 3;
  const DensityMatrix rho = DensityMatrix::random(n, 5);
  for (int site = 0; site < n; ++site) {
    const double z =
        (embed_operator(Z(), {site}, n) * rho.m).trace().real();
    const double x =
        (embed_operator(X(), {site}, n) * rho.m).trace().real();
    CHECK(expect_z(rho.m, site, n) == doctest::Approx(z).epsilon(1e-12));
    CHECK(expect_x(rho.m, site, n) == doctest::Approx(x).epsilon(1e-12));
  }
  // Ground state of the register: every site reads sigma_z = -1.
  Mat ground = Mat::Zero(8, 8);
  ground(0, 0) = 1.0;
  for (int site = 0; site < n; ++site) {
    CHECK(expect_z(ground, site, n) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(expect_x(ground, site, n) == doctest::Approx(0.0).epsilon(1e-12));
  }
}

}  // TEST_SUITE("hs")

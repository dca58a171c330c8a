#include "dxyz/magnus.hpp"

#include <array>

namespace dxyz {

namespace {

Mat comm(const Mat& a, const Mat& b) { return a * b - b * a; }

// [a, [b, c]] + [c, [b, a]] — the printed third-order bracket combination.
Mat nested3(const Mat& a, const Mat& b, const Mat& c) {
  return comm(a, comm(b, c)) + comm(c, comm(b, a));
}

// The printed fourth-order bracket combination.
Mat nested4(const Mat& a, const Mat& b, const Mat& c, const Mat& d) {
  return comm(comm(comm(a, b), c), d) + comm(a, comm(comm(b, c), d)) +
         comm(a, comm(b, comm(c, d))) + comm(b, comm(c, comm(d, a)));
}

// M(j1, j2, ...) = prod_l m_l! with m_l the occupation count of index l.
double multiplicity(const std::array<int, 4>& idx, int len) {
  double m = 1.0;
  for (int i = 0; i < len; ++i) {
    int occ = 1;
    for (int k = 0; k < i; ++k)
      if (idx[k] == idx[i]) ++occ;
    m *= occ;  // running product of occupation counts builds prod m_l!
  }
  return m;
}

}  // namespace

std::vector<MagnusGate> magnus_gates(const XYZSchedule& schedule,
                                     const NoiseModel& noise) {
  const int n = schedule.nqubits();
  const int hsdim = (1 << n) * (1 << n);
  std::vector<MagnusGate> out;
  out.reserve(schedule.gates.size());
  for (const GateGenerator& g : schedule.gates) {
    MagnusGate mg;
    mg.ideal = embed_superop(g.ideal, g.site_list(), n);
    if (noise.kind != NoiseKind::None && g.noise_weight > 0.0)
      mg.noise = g.noise_weight *
                 embed_superop(noise.generator_for(g), g.site_list(), n);
    else
      mg.noise = Mat::Zero(hsdim, hsdim);
    out.push_back(std::move(mg));
  }
  return out;
}

Mat MagnusResult::truncated(int order) const {
  require(order >= 0 && order < static_cast<int>(terms.size()),
          "truncation order out of range");
  Mat sum = terms[0];
  for (int k = 1; k <= order; ++k) sum += terms[k];
  return sum;
}

MagnusResult magnus_effective(const std::vector<MagnusGate>& gates, double tau,
                              double r, int order) {
  require(!gates.empty(), "magnus_effective needs at least one gate");
  require(order >= 0 && order <= 3, "magnus expansion implemented to order 3");
  const long dim = gates[0].ideal.rows();
  for (const MagnusGate& g : gates)
    require(g.ideal.rows() == dim && g.ideal.cols() == dim &&
                g.noise.rows() == dim && g.noise.cols() == dim,
            "inconsistent gate dimensions");

  // Flatten the cycle into its elementary factors exp(Y_f tau): each gate
  // contributes its ideal generator and, when active, the r-scaled noise
  // generator applied right after it.  s[f] counts the power of r a factor
  // carries, and a k-fold bracket carries tau^{k-1} after the overall /tau,
  // so a tuple of k factors with noise count s lands in grade k - 1 + s.
  std::vector<Mat> Y;
  std::vector<int> s;
  Y.reserve(2 * gates.size());
  for (const MagnusGate& g : gates) {
    Y.push_back(g.ideal);
    s.push_back(0);
    if (r != 0.0 && g.noise.squaredNorm() > 0.0) {
      Y.push_back(r * g.noise);
      s.push_back(1);
    }
  }
  const int nf = static_cast<int>(Y.size());

  MagnusResult res;
  res.tau = tau;
  res.r = r;
  res.terms.assign(static_cast<size_t>(order) + 1, Mat::Zero(dim, dim));

  // Single factors: ideal generators land in grade 0, noise factors in 1.
  for (int f = 0; f < nf; ++f)
    if (s[f] <= order) res.terms[s[f]] += Y[f];
  if (order < 1) return res;

  // Pairs, coefficient tau / 2; diagonal commutators vanish.
  for (int f1 = 1; f1 < nf; ++f1)
    for (int f2 = 0; f2 < f1; ++f2) {
      const int grade = 1 + s[f1] + s[f2];
      if (grade <= order) res.terms[grade] += (tau / 2.0) * comm(Y[f1], Y[f2]);
    }
  if (order < 2) return res;

  // Triples, coefficient tau^2 / (6 M).
  for (int f1 = 0; f1 < nf; ++f1)
    for (int f2 = 0; f2 <= f1; ++f2)
      for (int f3 = 0; f3 <= f2; ++f3) {
        const int grade = 2 + s[f1] + s[f2] + s[f3];
        if (grade > order) continue;
        const double m = multiplicity({f1, f2, f3, 0}, 3);
        res.terms[grade] +=
            (tau * tau / 6.0 / m) * nested3(Y[f1], Y[f2], Y[f3]);
      }
  if (order < 3) return res;

  // Quadruples, coefficient tau^3 / (12 M).  Any noise factor pushes the
  // grade past 3, so only all-ideal tuples contribute.
  std::vector<int> ideal;
  for (int f = 0; f < nf; ++f)
    if (s[f] == 0) ideal.push_back(f);
  const int ni = static_cast<int>(ideal.size());
  for (int i1 = 0; i1 < ni; ++i1)
    for (int i2 = 0; i2 <= i1; ++i2)
      for (int i3 = 0; i3 <= i2; ++i3)
        for (int i4 = 0; i4 <= i3; ++i4) {
          const double m =
              multiplicity({ideal[i1], ideal[i2], ideal[i3], ideal[i4]}, 4);
          res.terms[3] +=
              (tau * tau * tau / 12.0 / m) *
              nested4(Y[ideal[i1]], Y[ideal[i2]], Y[ideal[i3]], Y[ideal[i4]]);
        }
  return res;
}

Mat reduce_superop_to_site(const Mat& superop, const Mat& partner, int keep) {
  require(superop.rows() == 16 && superop.cols() == 16,
          "reduction expects a two-site superoperator");
  require(partner.rows() == 2 && partner.cols() == 2,
          "partner must be a single-qubit matrix");
  require(keep == 0 || keep == 1, "keep must select site 0 or 1");
  Mat reduced(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Mat unit = Mat::Zero(2, 2);
      unit(a, b) = 1.0;
      const Mat in = keep == 0 ? kron(unit, partner) : kron(partner, unit);
      const Mat out = devectorize(superop * vectorize(in));
      reduced.col(a * 2 + b) = vectorize(partial_trace(out, {1 - keep}, 2));
    }
  return reduced;
}

}  // namespace dxyz

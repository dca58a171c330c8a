#include "dxyz/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "dxyz/magnus.hpp"

namespace dxyz {

namespace {

Mat qubit_state(const Eigen::Vector3d& s) {
  return 0.5 * (Mat::Identity(2, 2) + s.x() * pauli::X() + s.y() * pauli::Y() +
                s.z() * pauli::Z());
}

Eigen::Vector3d bloch_readout(const Mat& drho) {
  return {(pauli::X() * drho).trace().real(),
          (pauli::Y() * drho).trace().real(),
          (pauli::Z() * drho).trace().real()};
}

}  // namespace

MeanFieldModel::MeanFieldModel(const ModelSpec& model, const NoiseModel& noise,
                               double r, const MeanFieldOptions& opts)
    : model_(model), noise_(noise), r_(r), opts_(opts) {
  require(r >= 0.0, "error rate must be nonnegative");
  // The 2x2 periodic cell realizes coordination number 4: every site sits in
  // four bonds, so reductions at a reference site reproduce the square
  // lattice's factorized equations of motion.
  const XYZSchedule cell = build_xyz(model, QubitLattice(2, Boundary::Periodic), opts.schedule);
  if (opts_.tau == 0.0) {
    base_ = Mat::Zero(4, 4);
    x_ = Mat::Zero(4, 4);
    y_ = Mat::Zero(4, 4);
    z_ = Mat::Zero(4, 4);
    for (const GateGenerator& g : cell.gates) {
      const std::vector<int> sl = g.site_list();
      const auto pos = std::find(sl.begin(), sl.end(), 0);
      if (pos == sl.end()) continue;  // gates elsewhere trace away exactly
      Mat total = g.ideal;
      if (noise_.kind != NoiseKind::None && g.noise_weight > 0.0)
        total += (r_ * g.noise_weight) * noise_.generator_for(g);
      if (g.nsites() == 1) {
        base_ += total;
        continue;
      }
      // Reduction is linear in the partner state; decompose
      // rho(s) = 1/2 + sum_a s_a sigma_a / 2 once.
      const int keep = static_cast<int>(pos - sl.begin());
      base_ += reduce_superop_to_site(total, 0.5 * Mat::Identity(2, 2), keep);
      x_ += reduce_superop_to_site(total, 0.5 * pauli::X(), keep);
      y_ += reduce_superop_to_site(total, 0.5 * pauli::Y(), keep);
      z_ += reduce_superop_to_site(total, 0.5 * pauli::Z(), keep);
    }
  } else {
    require(opts_.tau > 0.0, "tau must be nonnegative");
    lfull_ = magnus_effective(magnus_gates(cell, noise_), opts_.tau, r_,
                              opts_.magnus_order)
                 .effective();
  }
}

Mat MeanFieldModel::site_generator(const Eigen::Vector3d& s) const {
  if (opts_.tau == 0.0)
    return base_ + s.x() * x_ + s.y() * y_ + s.z() * z_;
  const Mat rho = qubit_state(s);
  const Mat partners = kron(rho, kron(rho, rho));
  Mat gen(4, 4);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      Mat unit = Mat::Zero(2, 2);
      unit(a, b) = 1.0;
      const Mat out = devectorize(lfull_ * vectorize(kron(unit, partners)));
      gen.col(a * 2 + b) = vectorize(partial_trace(out, {1, 2, 3}, 4));
    }
  return gen;
}

Eigen::Vector3d MeanFieldModel::rhs(const Eigen::Vector3d& s) const {
  const Mat rho = qubit_state(s);
  if (opts_.tau == 0.0) {
    const Mat gen = base_ + s.x() * x_ + s.y() * y_ + s.z() * z_;
    return bloch_readout(devectorize(gen * vectorize(rho)));
  }
  const Mat prod = kron(rho, kron(rho, kron(rho, rho)));
  const Mat out = devectorize(lfull_ * vectorize(prod));
  return bloch_readout(partial_trace(out, {1, 2, 3}, 4));
}

Eigen::Matrix3d MeanFieldModel::jacobian(const Eigen::Vector3d& s) const {
  Eigen::Matrix3d j;
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d up = s, dn = s;
    up[i] += h;
    dn[i] -= h;
    j.col(i) = (rhs(up) - rhs(dn)) / (2.0 * h);
  }
  return j;
}

Eigen::Vector3d mf_rhs(const Eigen::Vector3d& s, const ModelSpec& model,
                       const NoiseModel& noise, double r,
                       const MeanFieldOptions& opts) {
  return MeanFieldModel(model, noise, r, opts).rhs(s);
}

// sx-only kick: overlaps the symmetry-breaking eigenvector for either sign
// of Jx - Jy (the unstable direction flips quadrant with the anisotropy).
Eigen::Vector3d mf_seed_broken() { return {1e-3, 0.0, -0.9}; }
Eigen::Vector3d mf_seed_symmetric() { return {0.0, 0.0, -0.9}; }

namespace {

// Dormand-Prince 5(4) embedded pair with PI-free standard step control.
struct Rk45 {
  const MeanFieldModel& m;
  double rtol, atol;

  // One adaptive step from (t, y); returns the accepted step size and
  // updates t, y, k1 (FSAL).  Returns false if the state went non-finite.
  bool step(double& t, Eigen::Vector3d& y, Eigen::Vector3d& k1, double& h) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                            a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113,
                            b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                            b6 = 11.0 / 84;
    static constexpr double d1 = 71.0 / 57600, d3 = -71.0 / 16695,
                            d4 = 71.0 / 1920, d5 = -17253.0 / 339200,
                            d6 = 22.0 / 525, d7 = -1.0 / 40;
    for (int attempt = 0; attempt < 60; ++attempt) {
      const Eigen::Vector3d k2 = m.rhs(y + h * (a21 * k1));
      const Eigen::Vector3d k3 = m.rhs(y + h * (a31 * k1 + a32 * k2));
      const Eigen::Vector3d k4 = m.rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      const Eigen::Vector3d k5 =
          m.rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      const Eigen::Vector3d k6 = m.rhs(
          y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      const Eigen::Vector3d ynew =
          y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      const Eigen::Vector3d k7 = m.rhs(ynew);
      const Eigen::Vector3d err =
          h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      if (!ynew.allFinite()) return false;
      double scaled = 0.0;
      for (int i = 0; i < 3; ++i) {
        const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
        scaled += (err[i] / sc) * (err[i] / sc);
      }
      scaled = std::sqrt(scaled / 3.0);
      const double factor =
          std::clamp(0.9 * std::pow(std::max(scaled, 1e-12), -0.2), 0.2, 5.0);
      if (scaled <= 1.0) {
        t += h;
        y = ynew;
        k1 = k7;
        h *= factor;
        return true;
      }
      h *= factor;
    }
    return false;
  }
};

}  // namespace

std::vector<std::pair<double, Eigen::Vector3d>> mf_trajectory(
    const MeanFieldModel& m, Eigen::Vector3d s, double t_end,
    double sample_dt) {
  require(t_end > 0.0 && sample_dt > 0.0, "trajectory needs positive times");
  Rk45 rk{m, m.options().rtol, m.options().atol};
  std::vector<std::pair<double, Eigen::Vector3d>> out;
  out.emplace_back(0.0, s);
  double t = 0.0, h = 1e-3, next = sample_dt;
  Eigen::Vector3d k1 = m.rhs(s);
  while (t < t_end) {
    const double t_prev = t;
    const Eigen::Vector3d y_prev = s;
    h = std::min(h, t_end - t + 1e-15);
    if (!rk.step(t, s, k1, h)) break;
    while (next <= t + 1e-15) {
      const double w = (next - t_prev) / (t - t_prev);
      out.emplace_back(next, (1.0 - w) * y_prev + w * s);
      next += sample_dt;
    }
  }
  return out;
}

namespace {

SteadyOutcome settle_polish(const MeanFieldModel& m,
                            const Eigen::Vector3d& seed) {
  const MeanFieldOptions& opts = m.options();
  SteadyOutcome out;

  // Phase 1: relax toward the attractor.
  Eigen::Vector3d s = seed;
  Eigen::Vector3d k1 = m.rhs(s);
  Rk45 rk{m, opts.rtol, opts.atol};
  double t = 0.0, h = 1e-3;
  const double settle_tol = std::max(1e-9, opts.rhs_tol);
  while (t < opts.t_budget && k1.norm() > settle_tol) {
    if (!rk.step(t, s, k1, h)) break;
    if (s.norm() > 2.0) break;  // diverged: not a physical trajectory
  }
  const double drift = m.rhs(s).norm();

  // Phase 2: damped Newton polish.
  Eigen::Vector3d best = s;
  double best_res = drift;
  Eigen::Vector3d cur = s;
  double cur_res = drift;
  for (int it = 0; it < 80 && cur_res > opts.rhs_tol; ++it) {
    const Eigen::Matrix3d j = m.jacobian(cur);
    const Eigen::Vector3d f = m.rhs(cur);
    const Eigen::Vector3d d = j.fullPivLu().solve(-f);
    if (!d.allFinite()) break;
    double lambda = 1.0;
    bool moved = false;
    while (lambda > 1e-4) {
      const Eigen::Vector3d trial = cur + lambda * d;
      const double res = m.rhs(trial).norm();
      if (res < cur_res * (1.0 - 0.25 * lambda) || res < opts.rhs_tol) {
        cur = trial;
        cur_res = res;
        moved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!moved) break;
    if (cur_res < best_res) {
      best = cur;
      best_res = cur_res;
    }
  }

  out.s = best;
  out.residual = best_res;
  out.converged = best_res <= opts.rhs_tol;
  out.limit_cycle = !out.converged && drift > 1e-6;
  if (out.converged) {
    const Eigen::EigenSolver<Eigen::Matrix3d> es(m.jacobian(best));
    out.stable = es.eigenvalues().real().maxCoeff() <= 1e-9;
  }
  return out;
}

}  // namespace

SteadyOutcome mf_steady(const MeanFieldModel& m, const Eigen::Vector3d& seed) {
  SteadyOutcome out = settle_polish(m, seed);
  // A trajectory can park on a saddle: its stable quadrant contracts first
  // and the settle check fires there.  Escape along the saddle's own most
  // unstable direction and relax again (two rounds cover saddle chains).
  for (int round = 0; round < 2 && out.converged && !out.stable; ++round) {
    const Eigen::EigenSolver<Eigen::Matrix3d> es(m.jacobian(out.s));
    int imax = 0;
    for (int i = 1; i < 3; ++i)
      if (es.eigenvalues()(i).real() > es.eigenvalues()(imax).real()) imax = i;
    Eigen::Vector3d v = es.eigenvectors().col(imax).real();
    if (v.norm() < 1e-12) v = es.eigenvectors().col(imax).imag();
    if (v.norm() < 1e-12) break;
    v.normalize();

    const auto score = [](const SteadyOutcome& o) {
      return o.converged ? (o.stable ? 2 : 1) : 0;
    };
    SteadyOutcome pick = out;
    bool improved = false;
    for (double sign : {1.0, -1.0}) {
      const SteadyOutcome trial = settle_polish(m, out.s + 1e-3 * sign * v);
      const bool better =
          score(trial) > score(pick) ||
          (score(trial) == score(pick) && score(trial) == 2 &&
           std::abs(trial.s.x()) > std::abs(pick.s.x()));
      out.limit_cycle = out.limit_cycle || trial.limit_cycle;
      if (better) {
        pick = trial;
        improved = true;
      }
    }
    if (!improved) break;  // both kicks fell back to the same saddle
    const bool cycle_seen = out.limit_cycle;
    out = pick;
    out.limit_cycle = out.limit_cycle || cycle_seen;
  }
  return out;
}

Eigen::Vector3d pm_fixed_point(const MeanFieldModel& m) {
  require(!m.noise().breaks_z2(),
          "the symmetric axis needs a symmetry-preserving noise model");
  double sz = -0.5;
  for (int it = 0; it < 100; ++it) {
    const double f = m.rhs({0.0, 0.0, sz}).z();
    if (std::abs(f) < 1e-14) break;
    const double h = 1e-7;
    const double fp =
        (m.rhs({0.0, 0.0, sz + h}).z() - m.rhs({0.0, 0.0, sz - h}).z()) /
        (2.0 * h);
    require(std::abs(fp) > 1e-14, "degenerate axis derivative");
    sz = std::clamp(sz - f / fp, -1.0, 1.0);
  }
  const Eigen::Vector3d pm(0.0, 0.0, sz);
  if (m.rhs(pm).norm() > 1e-10)
    throw std::runtime_error("paramagnetic fixed-point solve did not converge");
  return pm;
}

double pm_leading_rate(const MeanFieldModel& m) {
  const Eigen::EigenSolver<Eigen::Matrix3d> es(m.jacobian(pm_fixed_point(m)));
  return es.eigenvalues().real().maxCoeff();
}

namespace {

struct BranchSeeds {
  Eigen::Vector3d broken = mf_seed_broken();
  Eigen::Vector3d symmetric = mf_seed_symmetric();
};

MeanFieldPoint classify_point(const MeanFieldModel& m, double axis_value,
                              BranchSeeds& seeds) {
  const double eps = m.options().eps_pm;
  const SteadyOutcome broken = mf_steady(m, seeds.broken);
  const SteadyOutcome symmetric = mf_steady(m, seeds.symmetric);

  const SteadyOutcome* pick = nullptr;
  for (const SteadyOutcome* cand : {&broken, &symmetric}) {
    if (!cand->converged || !cand->stable) continue;
    if (pick == nullptr || std::abs(cand->s.x()) > std::abs(pick->s.x()))
      pick = cand;
  }
  if (pick == nullptr)
    pick = broken.residual <= symmetric.residual ? &broken : &symmetric;

  MeanFieldPoint pt;
  pt.axis_value = axis_value;
  pt.s = pick->s;
  pt.converged = pick->converged;
  pt.stable = pick->stable;
  pt.ferromagnetic = std::abs(pick->s.x()) >= eps;

  // Warm-start the next grid point along each branch; re-kick the broken
  // branch so it can escape the symmetric saddle if order re-emerges.
  if (broken.converged) {
    seeds.broken = broken.s;
    if (std::abs(seeds.broken.x()) < 1e-3) seeds.broken.x() = 1e-3;
    if (std::abs(seeds.broken.y()) < 1e-3) seeds.broken.y() = 1e-3;
  }
  if (symmetric.converged) seeds.symmetric = symmetric.s;
  return pt;
}

}  // namespace

PhaseCurve mf_sweep_g(const std::vector<double>& g_values, double r,
                      const ModelSpec& base, const NoiseModel& noise,
                      const MeanFieldOptions& opts) {
  PhaseCurve curve;
  curve.axis = "g";
  BranchSeeds seeds;
  for (double g : g_values) {
    const ModelSpec model = ModelSpec::from_g(g, base.Jx, base.Jz, base.gamma);
    curve.points.push_back(
        classify_point(MeanFieldModel(model, noise, r, opts), g, seeds));
  }
  return curve;
}

PhaseCurve mf_sweep_r(const std::vector<double>& r_values,
                      const ModelSpec& model, const NoiseModel& noise,
                      const MeanFieldOptions& opts) {
  PhaseCurve curve;
  curve.axis = "r";
  BranchSeeds seeds;
  for (double r : r_values) {
    require(r >= 0.0, "error rates must be nonnegative");
    curve.points.push_back(
        classify_point(MeanFieldModel(model, noise, r, opts), r, seeds));
  }
  return curve;
}

namespace {

// Bisect a sign change of `rate` over [lo, hi]; expands hi if needed.
bool bisect_rate(const std::function<double(double)>& rate, double lo,
                 double hi, double hi_max, double* root) {
  double flo = rate(lo);
  double fhi = rate(hi);
  while (flo * fhi > 0.0 && hi < hi_max) {
    hi *= 1.6;
    fhi = rate(hi);
  }
  if (flo * fhi > 0.0) return false;
  for (int it = 0; it < 200 && (hi - lo) > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = rate(mid);
    if (fm == 0.0) {
      lo = hi = mid;
      break;
    }
    if (flo * fm <= 0.0) {
      hi = mid;
      fhi = fm;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  *root = 0.5 * (lo + hi);
  return true;
}

// Power-law fit of the order parameter approaching the transition from the
// ordered side: |sx|(delta) ~ delta^beta over a decade of offsets.
void powerlaw_refine(const std::function<MeanFieldModel(double)>& model_at,
                     double critical, bool ordered_above, CriticalPoint* cp) {
  constexpr int npts = 9;
  std::vector<double> logd, logs;
  Eigen::Vector3d seed = mf_seed_broken();
  for (int i = npts - 1; i >= 0; --i) {
    const double expo = -2.8 + 1.0 * i / (npts - 1);
    const double delta = critical * std::pow(10.0, expo);
    const double value = ordered_above ? critical + delta : critical - delta;
    if (value < 0.0) continue;
    const MeanFieldModel m = model_at(value);
    const SteadyOutcome out = mf_steady(m, seed);
    if (!out.converged || std::abs(out.s.x()) < m.options().eps_pm) continue;
    seed = out.s;  // warm start the next (smaller-offset) point
    logd.push_back(std::log(delta));
    logs.push_back(std::log(std::abs(out.s.x())));
  }
  if (logd.size() < 3) return;
  const auto n = static_cast<Eigen::Index>(logd.size());
  Eigen::MatrixXd a(n, 2);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, 0) = logd[static_cast<size_t>(i)];
    a(i, 1) = 1.0;
    b(i) = logs[static_cast<size_t>(i)];
  }
  const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
  cp->beta = coef(0);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    worst = std::max(worst, std::abs(std::expm1(a(i, 0) * coef(0) + coef(1) -
                                                b(i))));
  cp->fit_residual = worst;
}

}  // namespace

CriticalPoint mf_critical_g(double r, const ModelSpec& base,
                            const NoiseModel& noise,
                            const MeanFieldOptions& opts) {
  require(!noise.breaks_z2(),
          "critical-point detection needs a symmetry-preserving noise model");
  const auto model_at = [&](double g) {
    return MeanFieldModel(ModelSpec::from_g(g, base.Jx, base.Jz, base.gamma),
                          noise, r, opts);
  };
  const auto rate = [&](double g) { return pm_leading_rate(model_at(g)); };
  CriticalPoint cp;
  cp.bracketed = bisect_rate(rate, 0.0, 0.2, 5.0, &cp.value);
  if (cp.bracketed) powerlaw_refine(model_at, cp.value, true, &cp);
  return cp;
}

CriticalPoint mf_critical_r(const ModelSpec& model, const NoiseModel& noise,
                            const MeanFieldOptions& opts) {
  require(!noise.breaks_z2(),
          "critical-point detection needs a symmetry-preserving noise model");
  const auto model_at = [&](double r) {
    return MeanFieldModel(model, noise, r, opts);
  };
  const auto rate = [&](double r) { return pm_leading_rate(model_at(r)); };
  CriticalPoint cp;
  cp.bracketed = bisect_rate(rate, 0.0, 0.1, 2.0, &cp.value);
  if (cp.bracketed) powerlaw_refine(model_at, cp.value, false, &cp);
  return cp;
}

}  // namespace dxyz

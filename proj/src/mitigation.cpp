#include "dxyz/mitigation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace dxyz {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_distinct(const std::vector<std::pair<double, double>>& obs) {
  for (size_t i = 0; i < obs.size(); ++i)
    for (size_t j = i + 1; j < obs.size(); ++j)
      require(std::abs(obs[i].first - obs[j].first) > 1e-15,
              "observation error rates must be distinct");
}

}  // namespace

RichardsonResult richardson(const std::vector<std::pair<double, double>>& obs,
                            int order) {
  require(order == 1 || order == 2, "richardson supports orders 1 and 2");
  require(static_cast<int>(obs.size()) >= order + 1,
          "richardson needs at least order+1 observations");
  require_distinct(obs);
  const auto n = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd a(n, order + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [r, v] = obs[static_cast<size_t>(i)];
    double pw = 1.0;
    for (int k = 0; k <= order; ++k) {
      a(i, k) = pw;
      pw *= r;
    }
    b(i) = v;
  }
  RichardsonResult res;
  res.coeffs = a.colPivHouseholderQr().solve(b);
  res.estimate = res.coeffs(0);
  res.max_residual = (a * res.coeffs - b).cwiseAbs().maxCoeff();
  return res;
}

RichardsonResult richardson(const NoisyObservations& obs, int order) {
  return richardson(obs.points, order);
}

// ===========================================================================
// Matrix pencil.
// ===========================================================================

Complex ExponentialMode::coeff() const {
  return amplitude * std::exp(Complex(0.0, phase));
}

double ExponentialModel::evaluate(double t) const {
  Complex sum = 0.0;
  for (const ExponentialMode& m : modes) sum += m.coeff() * std::exp(m.lambda * t);
  return sum.real();
}

std::vector<double> synthesize(const ExponentialModel& model,
                               const std::vector<double>& times) {
  std::vector<double> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(model.evaluate(t));
  return out;
}

ExponentialModel matrix_pencil(const std::vector<double>& samples, double dt,
                               double t0, const PencilOptions& opt) {
  require(dt > 0.0, "sampling interval must be positive");
  const int n = static_cast<int>(samples.size());
  require(n >= 4, "matrix pencil needs at least four samples");

  ExponentialModel model;
  int pencil = opt.pencil > 0 ? opt.pencil : n / 3;
  pencil = std::clamp(pencil, 1, n - 2);
  const int rows = n - pencil;
  const int cols = pencil + 1;
  Eigen::MatrixXd hankel(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int k = 0; k < cols; ++k) hankel(i, k) = samples[static_cast<size_t>(i + k)];

  Eigen::BDCSVD<Eigen::MatrixXd> svd(hankel, Eigen::ComputeThinU);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  if (smax <= 0.0) {  // identically zero signal
    model.fit_residual = 0.0;
    return model;
  }
  int p;
  if (opt.modes > 0) {
    p = opt.modes;
  } else {
    p = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > opt.sv_threshold * smax) ++p;
  }
  p = std::clamp(p, 0, std::min(rows - 1, cols - 1));
  require(p >= 1, "signal rank collapsed below the requested model order");

  // The signal subspace is spanned by the leading left singular vectors; the
  // one-row shift inside that subspace has the pole ratios as eigenvalues.
  const Eigen::MatrixXd u = svd.matrixU().leftCols(p);
  const Eigen::MatrixXd u0 = u.topRows(rows - 1);
  const Eigen::MatrixXd u1 = u.bottomRows(rows - 1);
  const Eigen::MatrixXd shift =
      u0.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(u1);
  const Eigen::EigenSolver<Eigen::MatrixXd> es(shift);

  std::vector<Complex> lambdas;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const Complex z = es.eigenvalues()(i);
    if (std::abs(z) < 1e-14) continue;  // decayed below the sampling floor
    const Complex lam = std::log(z) / dt;  // principal branch
    if (lam.real() > opt.unstable_tol) {
      ++model.rejected_unstable;
      continue;
    }
    if (std::abs(lam.imag()) > 0.95 * kPi / dt) model.aliasing_risk = true;
    lambdas.push_back(lam);
  }
  if (lambdas.empty()) return model;

  // Amplitudes and phases from a full-record least-squares solve.
  const auto nn = static_cast<Eigen::Index>(n);
  const auto mm = static_cast<Eigen::Index>(lambdas.size());
  Eigen::MatrixXcd vand(nn, mm);
  Eigen::VectorXcd rhs(nn);
  for (Eigen::Index i = 0; i < nn; ++i) {
    const double t = t0 + static_cast<double>(i) * dt;
    for (Eigen::Index a = 0; a < mm; ++a)
      vand(i, a) = std::exp(lambdas[static_cast<size_t>(a)] * t);
    rhs(i) = samples[static_cast<size_t>(i)];
  }
  const Eigen::VectorXcd c =
      vand.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);

  for (Eigen::Index a = 0; a < mm; ++a) {
    ExponentialMode mode;
    mode.lambda = lambdas[static_cast<size_t>(a)];
    mode.amplitude = std::abs(c(a));
    mode.phase = std::arg(c(a));
    if (mode.phase < 0.0) mode.phase += 2.0 * kPi;
    model.modes.push_back(mode);
  }
  std::sort(model.modes.begin(), model.modes.end(),
            [](const ExponentialMode& a, const ExponentialMode& b) {
              if (a.lambda.real() != b.lambda.real())
                return a.lambda.real() > b.lambda.real();
              return std::abs(a.lambda.imag()) < std::abs(b.lambda.imag());
            });

  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = model.evaluate(t0 + i * dt) - samples[static_cast<size_t>(i)];
    ss += d * d;
  }
  model.fit_residual = std::sqrt(ss / n);
  return model;
}

ExponentialModel matrix_pencil(const TimeSeries& series,
                               const PencilOptions& opt) {
  require(series.values.size() == series.times.size(),
          "time series arrays must align");
  const double t0 = series.times.empty() ? 0.0 : series.times.front();
  return matrix_pencil(series.values, series.dt, t0, opt);
}

// ===========================================================================
// Spectrum extrapolation.
// ===========================================================================

namespace {

// Conjugate-pair representatives: keep the upper half plane plus the reals.
std::vector<Complex> representatives(const std::vector<Complex>& modes) {
  std::vector<Complex> out;
  for (const Complex& z : modes)
    if (z.imag() >= -1e-12) out.push_back(z);
  return out;
}

Complex polyfit_at_zero(const std::vector<double>& rs,
                        const std::vector<Complex>& vals, int order) {
  const auto n = static_cast<Eigen::Index>(rs.size());
  const int deg = std::min<int>(order, static_cast<int>(rs.size()) - 1);
  Eigen::MatrixXcd a(n, deg + 1);
  Eigen::VectorXcd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double pw = 1.0;
    for (int k = 0; k <= deg; ++k) {
      a(i, k) = pw;
      pw *= rs[static_cast<size_t>(i)];
    }
    b(i) = vals[static_cast<size_t>(i)];
  }
  return a.colPivHouseholderQr().solve(b)(0);
}

}  // namespace

SpectrumExtrapolation extrapolate_spectrum(
    const std::vector<double>& rs,
    const std::vector<std::vector<Complex>>& mode_sets,
    const ExtrapolationOptions& opt) {
  require(rs.size() == mode_sets.size(), "one mode set per error rate");
  require(rs.size() >= 2, "extrapolation needs at least two error rates");

  SpectrumExtrapolation out;
  const std::vector<Complex> ref = representatives(mode_sets[0]);
  std::vector<std::vector<Complex>> cands(mode_sets.size());
  std::vector<std::vector<bool>> used(mode_sets.size());
  for (size_t k = 1; k < mode_sets.size(); ++k) {
    cands[k] = representatives(mode_sets[k]);
    used[k].assign(cands[k].size(), false);
  }

  double radius = opt.pairing_radius;
  if (radius <= 0.0) {
    double dmin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < ref.size(); ++i)
      for (size_t j = i + 1; j < ref.size(); ++j)
        dmin = std::min(dmin, std::abs(ref[i] - ref[j]));
    radius = std::isfinite(dmin) ? 0.45 * dmin
                                 : 0.25 * (1.0 + (ref.empty() ? 0.0 : std::abs(ref[0])));
  }

  // Match the slowest reference modes first: they carry the physics.
  std::vector<size_t> order(ref.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return ref[a].real() > ref[b].real();
  });

  for (size_t idx : order) {
    const Complex mu = ref[idx];
    std::vector<Complex> chain{mu};
    bool matched = true;
    std::vector<std::pair<size_t, size_t>> claims;
    for (size_t k = 1; k < mode_sets.size(); ++k) {
      double d1 = std::numeric_limits<double>::infinity();
      double d2 = d1;
      size_t best = 0;
      for (size_t c = 0; c < cands[k].size(); ++c) {
        if (used[k][c]) continue;
        const double d = std::abs(cands[k][c] - chain.back());
        if (d < d1) {
          d2 = d1;
          d1 = d;
          best = c;
        } else if (d < d2) {
          d2 = d;
        }
      }
      if (!std::isfinite(d1) || d1 > radius) {
        matched = false;
        break;
      }
      if (d2 <= radius) out.ambiguous = true;
      claims.emplace_back(k, best);
      chain.push_back(cands[k][best]);
    }
    if (!matched) {
      out.unmatched.push_back(mu);
      continue;
    }
    for (const auto& [k, c] : claims) used[k][c] = true;

    Complex lam0 = polyfit_at_zero(rs, chain, opt.order);
    bool clip = false;
    if (lam0.real() > 0.0) {
      clip = lam0.real() > opt.clip_flag_tol;
      lam0 = Complex(0.0, lam0.imag());
    }
    out.lambdas.push_back(lam0);
    out.clipped.push_back(clip);
    if (lam0.imag() > 1e-12) {
      out.lambdas.push_back(std::conj(lam0));
      out.clipped.push_back(clip);
    }
  }
  for (size_t k = 1; k < mode_sets.size(); ++k)
    for (size_t c = 0; c < cands[k].size(); ++c)
      if (!used[k][c]) out.unmatched.push_back(cands[k][c]);
  return out;
}

// ===========================================================================
// Scaling-law fits.
// ===========================================================================

namespace {

template <class F>
double golden_min(F f, double a, double b, int iters) {
  constexpr double inv_phi = 0.6180339887498949;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

struct WindowPoint {
  double x;  // curve coordinate (offset to g_cri derived per candidate)
  double m;
};

}  // namespace

PowerLawFit fit_power_law(const std::vector<double>& g,
                          const std::vector<double>& m,
                          const ScalingFitOptions& opt) {
  require(g.size() == m.size(), "curve arrays must align");
  require(g.size() >= 5, "power-law fit needs at least five points");
  require(opt.w_min > 0.0 && opt.w_max > opt.w_min, "bad fit window");

  std::vector<std::pair<double, double>> pts;
  for (size_t i = 0; i < g.size(); ++i) pts.emplace_back(g[i], m[i]);
  std::sort(pts.begin(), pts.end());
  // Orient so the ordered phase sits at increasing coordinate.
  if (!opt.ordered_above)
    for (auto& [x, y] : pts) x = -x;
  if (!opt.ordered_above) std::sort(pts.begin(), pts.end());

  PowerLawFit fit;
  double mmax = 0.0;
  for (const auto& [x, y] : pts) mmax = std::max(mmax, std::abs(y));
  if (mmax <= 0.0) return fit;  // no order anywhere: nothing to fit

  // The modified ansatz tolerates a constant background, so the onset must
  // be measured above that floor; a low percentile of the curve estimates it
  // (the plain ansatz has no floor).
  double floor_level = 0.0;
  if (opt.modified) {
    std::vector<double> mag;
    mag.reserve(pts.size());
    for (const auto& [x, y] : pts) mag.push_back(std::abs(y));
    const auto nth = mag.begin() + static_cast<long>(mag.size() / 20);
    std::nth_element(mag.begin(), nth, mag.end());
    floor_level = *nth;
  }
  const auto excess = [&](double y) {
    return std::max(std::abs(y) - floor_level, 0.0);
  };

  // Onset estimate: near a mean-field transition m^2 grows linearly, so a
  // short linear fit of m^2 just above onset lands close to the true point.
  const double eps_on = std::max(1e-8, 1e-3 * mmax);
  size_t first = pts.size();
  for (size_t i = 0; i < pts.size(); ++i)
    if (excess(pts[i].second) > eps_on) {
      first = i;
      break;
    }
  if (first == pts.size()) return fit;
  double guess = pts[first].first;
  {
    const size_t hi = std::min(pts.size(), first + 4);
    if (hi - first >= 2) {
      Eigen::MatrixXd a(static_cast<Eigen::Index>(hi - first), 2);
      Eigen::VectorXd b(static_cast<Eigen::Index>(hi - first));
      for (size_t i = first; i < hi; ++i) {
        a(static_cast<Eigen::Index>(i - first), 0) = pts[i].first;
        a(static_cast<Eigen::Index>(i - first), 1) = 1.0;
        const double ex = excess(pts[i].second);
        b(static_cast<Eigen::Index>(i - first)) = ex * ex;
      }
      const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
      if (std::abs(coef(0)) > 1e-12) {
        const double root = -coef(1) / coef(0);
        if (std::isfinite(root) && std::abs(root - guess) < opt.w_max)
          guess = root;
      }
    }
  }

  // Pin the fit window with the onset estimate, then optimize g_cri inside it.
  std::vector<WindowPoint> window;
  for (const auto& [x, y] : pts)
    if (x - guess >= opt.w_min && x - guess <= opt.w_max && std::abs(y) > 0.0)
      window.push_back({x, std::abs(y)});
  const size_t need = opt.modified ? 4 : 3;
  if (window.size() < need) return fit;
  double g_lo = guess - 0.5 * opt.w_max;
  double g_hi = window.front().x - 1e-9;  // keep every window point above g_cri
  for (const WindowPoint& wp : window) g_hi = std::min(g_hi, wp.x - 1e-9);
  if (g_hi <= g_lo) return fit;

  // Residual of the best linear-in-parameters fit at a candidate g_cri.
  const auto solve_at = [&](double gc, double beta_fixed,
                            double* amp, double* off) -> double {
    const auto n = static_cast<Eigen::Index>(window.size());
    if (!opt.modified) {
      Eigen::MatrixXd a(n, 2);
      Eigen::VectorXd b(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        a(i, 0) = std::log(window[static_cast<size_t>(i)].x - gc);
        a(i, 1) = 1.0;
        b(i) = std::log(window[static_cast<size_t>(i)].m);
      }
      const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
      if (amp) *amp = std::exp(coef(1));
      if (off) *off = coef(0);  // beta rides in the slope slot here
      return (a * coef - b).norm() / std::sqrt(static_cast<double>(n));
    }
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      a(i, 0) = std::pow(window[static_cast<size_t>(i)].x - gc, beta_fixed);
      a(i, 1) = 1.0;
      b(i) = window[static_cast<size_t>(i)].m;
    }
    const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
    if (amp) *amp = coef(0);
    if (off) *off = coef(1);
    return (a * coef - b).norm() / (std::sqrt(static_cast<double>(n)) * mmax);
  };

  const auto objective = [&](double gc) {
    if (!opt.modified) return solve_at(gc, 0.0, nullptr, nullptr);
    return solve_at(
        gc, golden_min([&](double be) { return solve_at(gc, be, nullptr, nullptr); },
                       0.05, 2.0, 50),
        nullptr, nullptr);
  };
  const double gc = golden_min(objective, g_lo, g_hi, 70);

  double amp = 0.0, second = 0.0;
  if (!opt.modified) {
    solve_at(gc, 0.0, &amp, &second);
    fit.beta = second;
    fit.amplitude = amp;
    fit.offset = 0.0;
  } else {
    fit.beta = golden_min(
        [&](double be) { return solve_at(gc, be, nullptr, nullptr); }, 0.05,
        2.0, 60);
    solve_at(gc, fit.beta, &amp, &second);
    fit.amplitude = amp;
    fit.offset = second;
  }
  fit.g_cri = opt.ordered_above ? gc : -gc;

  // Report the rms relative misfit in linear space.
  double ss = 0.0;
  for (const WindowPoint& wp : window) {
    const double pred =
        fit.amplitude * std::pow(wp.x - gc, fit.beta) + fit.offset;
    ss += (pred - wp.m) * (pred - wp.m);
  }
  fit.residual = std::sqrt(ss / static_cast<double>(window.size())) / mmax;
  fit.ok = std::isfinite(fit.g_cri) && std::isfinite(fit.beta) &&
           fit.beta > 0.0 && fit.residual < 0.5;
  return fit;
}

ScalingExtrapolation scaling_extrapolate(
    const std::vector<double>& rs,
    const std::vector<std::vector<std::pair<double, double>>>& curves,
    const ScalingFitOptions& opt) {
  require(rs.size() == curves.size(), "one curve per error rate");
  require(rs.size() >= 2, "scaling extrapolation needs at least two rates");

  ScalingExtrapolation out;
  out.rs = rs;
  out.ok = true;
  std::vector<std::pair<double, double>> gcs, betas;
  for (size_t k = 0; k < rs.size(); ++k) {
    std::vector<double> g, m;
    for (const auto& [x, y] : curves[k]) {
      g.push_back(x);
      m.push_back(y);
    }
    const PowerLawFit fit = fit_power_law(g, m, opt);
    out.fits.push_back(fit);
    out.ok = out.ok && fit.ok;
    gcs.emplace_back(rs[k], fit.g_cri);
    betas.emplace_back(rs[k], fit.beta);
  }
  const int order =
      std::min<int>(opt.extrapolation_order, static_cast<int>(rs.size()) - 1);
  if (order >= 1) {
    out.g_cri0 = richardson(gcs, order).estimate;
    out.beta0 = richardson(betas, order).estimate;
  } else {
    out.g_cri0 = gcs.front().second;
    out.beta0 = betas.front().second;
  }
  return out;
}

ScalingExtrapolation scaling_extrapolate(const std::vector<double>& rs,
                                         const std::vector<PhaseCurve>& curves,
                                         const ScalingFitOptions& opt) {
  std::vector<std::vector<std::pair<double, double>>> raw;
  raw.reserve(curves.size());
  for (const PhaseCurve& c : curves) {
    std::vector<std::pair<double, double>> pts;
    for (const MeanFieldPoint& p : c.points)
      pts.emplace_back(p.axis_value, std::abs(p.s.x()));
    raw.push_back(std::move(pts));
  }
  return scaling_extrapolate(rs, raw, opt);
}

}  // namespace dxyz

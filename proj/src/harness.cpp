#include "dxyz/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dxyz/meanfield.hpp"
#include "dxyz/mitigation.hpp"
#include "dxyz/spectral.hpp"
#include "dxyz/trotter.hpp"

namespace dxyz {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// NaN / inf have no JSON representation; store them as null.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(); }

json jcomplex(Complex z) {
  return json{{"re", jnum(z.real())}, {"im", jnum(z.imag())}};
}

// ---------------------------------------------------------------------------
// Table assembly and serialization.
// ---------------------------------------------------------------------------

struct Table {
  std::vector<std::string> columns;
  std::vector<std::string> docs;  // parallel to columns
  std::vector<std::vector<double>> rows;

  void add_column(const std::string& name, const std::string& doc) {
    columns.push_back(name);
    docs.push_back(doc);
  }
};

void write_table(const std::string& path, const ExperimentConfig& cfg,
                 const std::string& hash, const Table& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# experiment = " << experiment_name(cfg.kind) << "\n";
  out << "# config = " << hash << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    out << "# column " << t.columns[i] << ": " << t.docs[i] << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i)
    out << (i ? "\t" : "") << t.columns[i];
  out << "\n";
  for (const auto& row : t.rows) {
    if (row.size() != t.columns.size())
      throw std::runtime_error("table row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "\t" : "") << format_double(row[i]);
    out << "\n";
  }
}

void write_records(const std::string& path, const std::vector<json>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& rec : records) out << rec.dump() << "\n";
}

std::string iso_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
#if defined(_WIN32)
  gmtime_s(&tm, &now);
#else
  gmtime_r(&now, &tm);
#endif
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_meta(const std::string& path, const ExperimentConfig& cfg,
                const std::string& hash, const RunOutcome& outcome) {
  json meta{
      {"experiment", experiment_name(cfg.kind)},
      {"config_hash", hash},
      {"canonical_config", canonical_config(cfg)},
      {"tool_version", kToolVersion},
      {"generated_at", iso_timestamp()},
      {"workers", cfg.workers},
      {"points", outcome.points},
      {"failures", outcome.failures},
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << meta.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Deterministic worker pool: point-indexed work items, exceptions captured
// per point so one bad grid point cannot take down the sweep.
// ---------------------------------------------------------------------------

template <class F>
int run_points(int n, int workers, F&& body, std::vector<std::string>& errors) {
  errors.assign(std::size_t(n), "");
  std::atomic<int> next{0};
  auto drain = [&]() {
    for (int i; (i = next.fetch_add(1)) < n;) {
      try {
        body(i);
      } catch (const std::exception& e) {
        errors[std::size_t(i)] = e.what();
      } catch (...) {
        errors[std::size_t(i)] = "unrecognized exception";
      }
    }
  };
  const int nthreads = std::max(1, std::min(workers, n));
  if (nthreads <= 1) {
    drain();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(nthreads));
    for (int k = 0; k < nthreads; ++k) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
  }
  int failures = 0;
  for (const auto& e : errors)
    if (!e.empty()) ++failures;
  return failures;
}

void record_errors(const std::vector<std::string>& errors,
                   const std::string& what, std::vector<json>& records) {
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty())
      records.push_back(json{{"type", "error"},
                             {"point", int(i)},
                             {"stage", what},
                             {"message", errors[i]}});
}

// ---------------------------------------------------------------------------
// Shared experiment helpers.
// ---------------------------------------------------------------------------

// Error rates exercised by the engine experiments: the boosted list c_i * r0,
// or just {0} when the run is noiseless.
std::vector<double> boosted_rates(const ExperimentConfig& cfg) {
  if (cfg.noise == NoiseKind::None || cfg.r0 <= 0.0) return {0.0};
  std::vector<double> rs;
  rs.reserve(cfg.c.size());
  for (double ci : cfg.c) rs.push_back(ci * cfg.r0);
  return rs;
}

EvolutionConfig evolution_config(const ExperimentConfig& cfg, double r) {
  EvolutionConfig ec;
  ec.tau = cfg.tau;
  ec.r = r;
  ec.noise = cfg.noise_model();
  ec.t_max = cfg.t_max;
  ec.steady_tol = cfg.steady_tol;
  return ec;
}

struct SteadyRow {
  double M = kNaN, m = kNaN, residual = kNaN;
  double steps = kNaN, converged = 0.0;
};

// Trotter steady state; `state` is both the initial guess and, on return,
// the converged state (for warm starts within one work item).
SteadyRow run_steady(const XYZSchedule& sched, const ExperimentConfig& cfg,
                     double r, DensityMatrix& state) {
  SteadyResult res = evolve_to_steady(state, sched, evolution_config(cfg, r));
  state = res.state;
  SteadyRow row;
  row.M = magnetization(res.state.m, sched.nqubits());
  row.m = order_parameter_x(res.state.m, sched.nqubits());
  row.residual = res.residual;
  row.steps = double(res.steps);
  row.converged = res.converged ? 1.0 : 0.0;
  return row;
}

bool dense_reference_feasible(const QubitLattice& lat) {
  return lat.nsites() <= 4;  // full superoperator stays at most 256 x 256
}

// Dense steady-state reference (NaN pair when the lattice is too large).
std::pair<double, double> exact_steady_Mm(const ModelSpec& model,
                                          const QubitLattice& lat) {
  if (!dense_reference_feasible(lat)) return {kNaN, kNaN};
  Mat rho = steady_state_exact(exact_lindbladian(model, lat));
  return {magnetization(rho, lat.nsites()), order_parameter_x(rho, lat.nsites())};
}

// Richardson estimate over (r_i, y_i); NaN when there are too few points.
double zne(const std::vector<double>& rs, const std::vector<double>& ys,
           int order) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (rs[i] > 0 && std::isfinite(ys[i])) pts.emplace_back(rs[i], ys[i]);
  const int ord = std::min<int>(order, int(pts.size()) - 1);
  if (ord < 1) return kNaN;
  return richardson(pts, ord).estimate;
}

// ---------------------------------------------------------------------------
// steady-state: one steady-state solve per error rate (r = 0 always
// included as the reference row when noise is active).
// ---------------------------------------------------------------------------

void run_steady_state(const ExperimentConfig& cfg, Table& table,
                      std::vector<json>& records, RunOutcome& outcome) {
  const QubitLattice lat(cfg.L, cfg.boundary);
  const XYZSchedule sched =
      build_xyz(cfg.model(), lat, cfg.schedule_options());

  std::vector<double> rs = boosted_rates(cfg);
  if (rs.front() != 0.0) rs.insert(rs.begin(), 0.0);

  table.add_column("r", "modular error rate of the run");
  table.add_column("M", "steady-state magnetization <sigma_z> (site average)");
  table.add_column("m", "steady-state order parameter <sigma_x> (site average)");
  table.add_column("M_exact", "dense steady-state magnetization (nan when infeasible)");
  table.add_column("dist_exact", "trace distance to the dense steady state (nan when infeasible)");
  table.add_column("residual", "window-to-window trace-norm residual at stop");
  table.add_column("steps", "Trotter steps taken");
  table.add_column("converged", "1 when the residual target was met");

  Mat rho_exact;
  double M_exact = kNaN;
  if (dense_reference_feasible(lat)) {
    rho_exact = steady_state_exact(exact_lindbladian(cfg.model(), lat));
    M_exact = magnetization(rho_exact, lat.nsites());
  }

  const int n = int(rs.size());
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n));
  std::vector<std::string> errors;
  outcome.failures += run_points(
      n, cfg.workers,
      [&](int i) {
        DensityMatrix state = DensityMatrix::maximally_mixed(lat.nsites());
        SteadyRow s = run_steady(sched, cfg, rs[std::size_t(i)], state);
        double dist = kNaN;
        if (rho_exact.size() > 0) dist = trace_distance(state.m, rho_exact);
        rows[std::size_t(i)] = {rs[std::size_t(i)], s.M, s.m, M_exact,
                                dist, s.residual, s.steps, s.converged};
      },
      errors);
  outcome.points += n;
  record_errors(errors, "steady-state", records);

  std::vector<double> Ms, ms;
  for (int i = 0; i < n; ++i) {
    if (rows[std::size_t(i)].empty())
      rows[std::size_t(i)] = {rs[std::size_t(i)], kNaN, kNaN, kNaN,
                              kNaN, kNaN, kNaN, 0.0};
    table.rows.push_back(rows[std::size_t(i)]);
    Ms.push_back(rows[std::size_t(i)][1]);
    ms.push_back(rows[std::size_t(i)][2]);
    records.push_back(json{{"type", "steady-state"},
                           {"r", rs[std::size_t(i)]},
                           {"M", jnum(rows[std::size_t(i)][1])},
                           {"m", jnum(rows[std::size_t(i)][2])},
                           {"residual", jnum(rows[std::size_t(i)][5])},
                           {"steps", jnum(rows[std::size_t(i)][6])},
                           {"converged", rows[std::size_t(i)][7] > 0.5}});
  }
  const double M0 = zne(rs, Ms, cfg.extrapolation_order);
  if (std::isfinite(M0))
    records.push_back(json{{"type", "mitigated"},
                           {"observable", "M"},
                           {"order", std::min<int>(cfg.extrapolation_order,
                                                   int(rs.size()) - 1)},
                           {"estimate", jnum(M0)},
                           {"m_estimate", jnum(zne(rs, ms, cfg.extrapolation_order))}});
}

// ---------------------------------------------------------------------------
// g-sweep: engine steady states across the phase diagram at every boosted
// rate, with the dense reference and the zero-noise extrapolation per point.
// ---------------------------------------------------------------------------

void run_g_sweep(const ExperimentConfig& cfg, Table& table,
                 std::vector<json>& records, RunOutcome& outcome) {
  const QubitLattice lat(cfg.L, cfg.boundary);
  const std::vector<double> rs = boosted_rates(cfg);
  const bool noisy = rs.front() > 0.0;

  table.add_column("g", "coupling anisotropy |Jx - Jy| / (2 gamma)");
  table.add_column("M_exact", "dense steady-state magnetization (nan when infeasible)");
  table.add_column("m_exact", "dense steady-state order parameter");
  table.add_column("M_ideal", "engine steady-state magnetization at r = 0");
  table.add_column("m_ideal", "engine steady-state order parameter at r = 0");
  for (std::size_t k = 0; noisy && k < rs.size(); ++k) {
    const std::string tag = "_r" + std::to_string(k + 1);
    table.add_column("M" + tag, "magnetization at r = " + format_double(rs[k]));
    table.add_column("m" + tag, "order parameter at r = " + format_double(rs[k]));
  }
  table.add_column("M_zne", "zero-noise extrapolated magnetization (nan when < 2 rates)");
  table.add_column("m_zne", "zero-noise extrapolated order parameter");

  const int n = int(cfg.g_values.size());
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n));
  std::vector<json> point_records(static_cast<std::size_t>(n));
  std::vector<std::string> errors;
  outcome.failures += run_points(
      n, cfg.workers,
      [&](int i) {
        const double g = cfg.g_values[std::size_t(i)];
        const ModelSpec model =
            ModelSpec::from_g(g, cfg.Jx, cfg.Jz, cfg.gamma);
        const XYZSchedule sched = build_xyz(model, lat, cfg.schedule_options());

        auto [Mx, mx] = exact_steady_Mm(model, lat);
        std::vector<double> row = {g, Mx, mx};

        DensityMatrix state = DensityMatrix::maximally_mixed(lat.nsites());
        SteadyRow ideal = run_steady(sched, cfg, 0.0, state);
        row.push_back(ideal.M);
        row.push_back(ideal.m);

        json runs = json::array();
        std::vector<double> Ms, ms;
        if (noisy) {
          for (double r : rs) {
            SteadyRow s = run_steady(sched, cfg, r, state);  // warm start
            row.push_back(s.M);
            row.push_back(s.m);
            Ms.push_back(s.M);
            ms.push_back(s.m);
            runs.push_back(json{{"r", r},
                                {"M", jnum(s.M)},
                                {"m", jnum(s.m)},
                                {"residual", jnum(s.residual)},
                                {"steps", jnum(s.steps)},
                                {"converged", s.converged > 0.5}});
          }
        }
        row.push_back(zne(rs, Ms, cfg.extrapolation_order));
        row.push_back(zne(rs, ms, cfg.extrapolation_order));
        rows[std::size_t(i)] = row;
        point_records[std::size_t(i)] =
            json{{"type", "g-point"}, {"g", g},
                 {"M_exact", jnum(Mx)}, {"m_exact", jnum(mx)},
                 {"M_ideal", jnum(ideal.M)}, {"m_ideal", jnum(ideal.m)},
                 {"noisy", runs}};
      },
      errors);
  outcome.points += n;
  record_errors(errors, "g-sweep", records);

  for (int i = 0; i < n; ++i) {
    if (rows[std::size_t(i)].empty())
      rows[std::size_t(i)].assign(table.columns.size(), kNaN),
          rows[std::size_t(i)][0] = cfg.g_values[std::size_t(i)];
    table.rows.push_back(rows[std::size_t(i)]);
    if (!point_records[std::size_t(i)].is_null())
      records.push_back(point_records[std::size_t(i)]);
  }
}

// ---------------------------------------------------------------------------
// r-sweep: fixed couplings, engine steady state across an error-rate grid.
// ---------------------------------------------------------------------------

void run_r_sweep(const ExperimentConfig& cfg, Table& table,
                 std::vector<json>& records, RunOutcome& outcome) {
  const QubitLattice lat(cfg.L, cfg.boundary);
  const XYZSchedule sched = build_xyz(cfg.model(), lat, cfg.schedule_options());

  table.add_column("r", "modular error rate");
  table.add_column("M", "steady-state magnetization");
  table.add_column("m", "steady-state order parameter");
  table.add_column("residual", "window-to-window trace-norm residual at stop");
  table.add_column("steps", "Trotter steps taken");
  table.add_column("converged", "1 when the residual target was met");

  auto [Mx, mx] = exact_steady_Mm(cfg.model(), lat);

  const int n = int(cfg.r_values.size());
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(n));
  std::vector<std::string> errors;
  outcome.failures += run_points(
      n, cfg.workers,
      [&](int i) {
        DensityMatrix state = DensityMatrix::maximally_mixed(lat.nsites());
        SteadyRow s = run_steady(sched, cfg, cfg.r_values[std::size_t(i)], state);
        rows[std::size_t(i)] = {cfg.r_values[std::size_t(i)], s.M, s.m,
                                s.residual, s.steps, s.converged};
      },
      errors);
  outcome.points += n;
  record_errors(errors, "r-sweep", records);

  std::vector<double> Ms, ms;
  for (int i = 0; i < n; ++i) {
    if (rows[std::size_t(i)].empty())
      rows[std::size_t(i)] = {cfg.r_values[std::size_t(i)], kNaN, kNaN,
                              kNaN, kNaN, 0.0};
    table.rows.push_back(rows[std::size_t(i)]);
    Ms.push_back(rows[std::size_t(i)][1]);
    ms.push_back(rows[std::size_t(i)][2]);
  }
  records.push_back(json{{"type", "reference"},
                         {"M_exact", jnum(Mx)},
                         {"m_exact", jnum(mx)}});
  const double M0 = zne(cfg.r_values, Ms, cfg.extrapolation_order);
  if (std::isfinite(M0))
    records.push_back(json{{"type", "mitigated"},
                           {"observable", "M"},
                           {"estimate", jnum(M0)},
                           {"m_estimate",
                            jnum(zne(cfg.r_values, ms, cfg.extrapolation_order))}});
}

// ---------------------------------------------------------------------------
// meanfield-phase: factorized phase diagram along g (one curve per rate,
// r = 0 included as reference) or along r at fixed couplings.
// ---------------------------------------------------------------------------

void run_meanfield_phase(const ExperimentConfig& cfg, Table& table,
                         std::vector<json>& records, RunOutcome& outcome) {
  MeanFieldOptions mfo;
  mfo.schedule = cfg.schedule_options();
  const NoiseModel noise = cfg.noise_model();

  if (!cfg.g_values.empty()) {
    std::vector<double> rs = boosted_rates(cfg);
    if (rs.front() != 0.0) rs.insert(rs.begin(), 0.0);

    table.add_column("g", "coupling anisotropy |Jx - Jy| / (2 gamma)");
    for (std::size_t k = 0; k < rs.size(); ++k) {
      const std::string tag = "_r" + std::to_string(k);
      const std::string at = " at r = " + format_double(rs[k]);
      table.add_column("sx" + tag, "<sigma_x>" + at);
      table.add_column("sy" + tag, "<sigma_y>" + at);
      table.add_column("sz" + tag, "<sigma_z>" + at);
      table.add_column("ferro" + tag, "1 in the symmetry-broken phase" + at);
    }

    const int n = int(rs.size());
    std::vector<PhaseCurve> curves(static_cast<std::size_t>(n));
    std::vector<std::string> errors;
    outcome.failures += run_points(
        n, cfg.workers,
        [&](int i) {
          curves[std::size_t(i)] =
              mf_sweep_g(cfg.g_values, rs[std::size_t(i)], cfg.model(), noise, mfo);
        },
        errors);
    outcome.points += n;
    record_errors(errors, "meanfield-sweep", records);

    for (std::size_t gi = 0; gi < cfg.g_values.size(); ++gi) {
      std::vector<double> row = {cfg.g_values[gi]};
      for (const auto& curve : curves) {
        if (curve.points.size() != cfg.g_values.size()) {
          row.insert(row.end(), {kNaN, kNaN, kNaN, kNaN});
          continue;
        }
        const MeanFieldPoint& p = curve.points[gi];
        row.insert(row.end(), {p.s.x(), p.s.y(), p.s.z(),
                               p.ferromagnetic ? 1.0 : 0.0});
      }
      table.rows.push_back(row);
    }

    // Critical-point truth per rate (symmetric noise only), and scaling fits.
    if (!noise.breaks_z2()) {
      for (double r : rs) {
        CriticalPoint cp = mf_critical_g(r, cfg.model(), noise, mfo);
        records.push_back(json{{"type", "critical-g"},
                               {"r", r},
                               {"g_cri", jnum(cp.value)},
                               {"beta", jnum(cp.beta)},
                               {"fit_residual", jnum(cp.fit_residual)},
                               {"bracketed", cp.bracketed}});
      }
    }
    std::vector<double> noisy_rs;
    std::vector<PhaseCurve> noisy_curves;
    for (std::size_t k = 0; k < rs.size(); ++k)
      if (rs[k] > 0 && curves[k].points.size() == cfg.g_values.size()) {
        noisy_rs.push_back(rs[k]);
        noisy_curves.push_back(curves[k]);
      }
    if (noisy_rs.size() >= 2) {
      ScalingFitOptions sfo;
      sfo.w_min = cfg.w_min;
      sfo.w_max = cfg.w_max;
      sfo.modified = noise.breaks_z2();
      sfo.extrapolation_order = cfg.extrapolation_order;
      ScalingExtrapolation ext = scaling_extrapolate(noisy_rs, noisy_curves, sfo);
      json fits = json::array();
      for (std::size_t k = 0; k < ext.fits.size(); ++k)
        fits.push_back(json{{"r", ext.rs[k]},
                            {"g_cri", jnum(ext.fits[k].g_cri)},
                            {"beta", jnum(ext.fits[k].beta)},
                            {"residual", jnum(ext.fits[k].residual)},
                            {"ok", ext.fits[k].ok}});
      records.push_back(json{{"type", "scaling-extrapolation"},
                             {"order", cfg.extrapolation_order},
                             {"modified", sfo.modified},
                             {"g_cri0", jnum(ext.g_cri0)},
                             {"beta0", jnum(ext.beta0)},
                             {"ok", ext.ok},
                             {"fits", fits}});
    }
    return;
  }

  // r axis at fixed couplings.
  table.add_column("r", "modular error rate");
  table.add_column("sx", "<sigma_x>");
  table.add_column("sy", "<sigma_y>");
  table.add_column("sz", "<sigma_z>");
  table.add_column("ferro", "1 in the symmetry-broken phase");
  table.add_column("stable", "1 when the reported branch is linearly stable");
  table.add_column("converged", "1 when the fixed-point residual target was met");

  PhaseCurve curve = mf_sweep_r(cfg.r_values, cfg.model(), noise, mfo);
  outcome.points += int(cfg.r_values.size());
  for (const MeanFieldPoint& p : curve.points)
    table.rows.push_back({p.axis_value, p.s.x(), p.s.y(), p.s.z(),
                          p.ferromagnetic ? 1.0 : 0.0, p.stable ? 1.0 : 0.0,
                          p.converged ? 1.0 : 0.0});
  if (!noise.breaks_z2()) {
    CriticalPoint cp = mf_critical_r(cfg.model(), noise, mfo);
    records.push_back(json{{"type", "critical-r"},
                           {"g", cfg.g()},
                           {"r_cri", jnum(cp.value)},
                           {"beta", jnum(cp.beta)},
                           {"fit_residual", jnum(cp.fit_residual)},
                           {"bracketed", cp.bracketed}});
  }
}

// ---------------------------------------------------------------------------
// spectroscopy: relaxation trajectories per rate, matrix-pencil mode
// extraction, extrapolation of the mode chains to r = 0, and the dense
// reference spectrum.
// ---------------------------------------------------------------------------

// Representative modes (Im >= 0) of the slowest nonzero dense eigenvalues.
std::vector<Complex> dense_reference_modes(const Mat& l0, int count) {
  SpectralDecomposition dec = spectrum(l0);
  std::vector<Complex> out;
  for (int idx : dec.sorted_indices()) {
    Complex lam = dec.eigenvalues(idx);
    if (std::abs(lam) <= 1e-10) continue;  // steady mode
    if (lam.imag() < -1e-12) continue;     // keep one of each conjugate pair
    out.push_back(lam);
    if (int(out.size()) >= count) break;
  }
  return out;
}

void run_spectroscopy(const ExperimentConfig& cfg, Table& table,
                      std::vector<json>& records, RunOutcome& outcome) {
  const QubitLattice lat(cfg.L, cfg.boundary);
  const XYZSchedule sched = build_xyz(cfg.model(), lat, cfg.schedule_options());
  const int nq = lat.nsites();
  const std::vector<double> rs = boosted_rates(cfg);
  const bool noisy = rs.front() > 0.0;

  const std::vector<Observable> obs = {
      site_observable("sz0", pauli::Z(), 0, nq),
      site_observable("sx0", pauli::X(), 0, nq),
  };
  const DensityMatrix rho_in =
      DensityMatrix::random(nq, point_seed(cfg.seed, 0));

  const int n = int(rs.size());
  std::vector<std::vector<TimeSeries>> all_series(static_cast<std::size_t>(n));
  std::vector<std::vector<ExponentialModel>> all_models(static_cast<std::size_t>(n));
  std::vector<std::string> errors;
  outcome.failures += run_points(
      n, cfg.workers,
      [&](int i) {
        EvolutionConfig ec = evolution_config(cfg, rs[std::size_t(i)]);
        auto series =
            record_trajectory(rho_in, sched, ec, obs, cfg.stride, cfg.t_end);
        std::vector<ExponentialModel> models;
        models.reserve(series.size());
        for (const auto& s : series) models.push_back(matrix_pencil(s));
        all_series[std::size_t(i)] = std::move(series);
        all_models[std::size_t(i)] = std::move(models);
      },
      errors);
  outcome.points += n;
  record_errors(errors, "spectroscopy", records);

  for (const auto& e : errors)
    if (!e.empty())
      throw std::runtime_error("spectroscopy trajectory failed: " + e);

  // Time-series table (all runs share the sampling grid).
  table.add_column("t", "sample time");
  for (std::size_t k = 0; k < rs.size(); ++k)
    for (const auto& o : obs) {
      const std::string tag = noisy ? "_r" + std::to_string(k + 1) : "";
      table.add_column(o.name + tag,
                       "<" + o.name + "> at r = " + format_double(rs[k]));
    }
  const auto& times = all_series[0][0].times;
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    std::vector<double> row = {times[ti]};
    for (const auto& series : all_series)
      for (const auto& s : series)
        row.push_back(ti < s.values.size() ? s.values[ti] : kNaN);
    table.rows.push_back(row);
  }

  // Per-rate mode sets: union over observables, steady mode dropped,
  // near-duplicates merged.
  std::vector<std::vector<Complex>> mode_sets(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::vector<Complex> set;
    json jmodes = json::array();
    for (std::size_t oi = 0; oi < obs.size(); ++oi) {
      for (const auto& mode : all_models[std::size_t(i)][oi].modes) {
        if (std::abs(mode.lambda) <= 1e-9) continue;  // steady component
        bool dup = false;
        for (Complex z : set)
          if (std::abs(z - mode.lambda) <= 1e-6 * std::max(1.0, std::abs(z)))
            dup = true;
        if (!dup) set.push_back(mode.lambda);
        jmodes.push_back(json{{"observable", obs[oi].name},
                              {"lambda", jcomplex(mode.lambda)},
                              {"amplitude", jnum(mode.amplitude)},
                              {"phase", jnum(mode.phase)}});
      }
      records.push_back(
          json{{"type", "pencil-fit"},
               {"r", rs[std::size_t(i)]},
               {"observable", obs[oi].name},
               {"fit_residual", jnum(all_models[std::size_t(i)][oi].fit_residual)},
               {"rejected_unstable", all_models[std::size_t(i)][oi].rejected_unstable},
               {"aliasing_risk", all_models[std::size_t(i)][oi].aliasing_risk}});
    }
    mode_sets[std::size_t(i)] = std::move(set);
    records.push_back(json{{"type", "modes"},
                           {"r", rs[std::size_t(i)]},
                           {"modes", jmodes}});
  }

  // Extrapolate to r = 0 when there are at least two rates.
  std::vector<Complex> estimate;
  if (noisy && n >= 2) {
    ExtrapolationOptions eo;
    eo.order = std::min(cfg.extrapolation_order, n - 1);
    SpectrumExtrapolation ext = extrapolate_spectrum(rs, mode_sets, eo);
    estimate = ext.lambdas;
    json jl = json::array();
    for (std::size_t k = 0; k < ext.lambdas.size(); ++k)
      jl.push_back(json{{"lambda", jcomplex(ext.lambdas[k])},
                        {"clipped", bool(ext.clipped[k])}});
    json ju = json::array();
    for (Complex z : ext.unmatched) ju.push_back(jcomplex(z));
    records.push_back(json{{"type", "spectrum-extrapolation"},
                           {"order", eo.order},
                           {"lambdas", jl},
                           {"unmatched", ju},
                           {"ambiguous", ext.ambiguous}});
  } else {
    estimate = mode_sets[0];
  }

  // Dense reference and per-mode agreement.
  const Mat l0 = exact_lindbladian(cfg.model(), lat);
  const std::vector<Complex> exact = dense_reference_modes(l0, 8);
  json jexact = json::array();
  for (Complex z : exact) jexact.push_back(jcomplex(z));
  json jmatch = json::array();
  for (Complex z : estimate) {
    if (z.imag() < -1e-12) continue;  // compare representatives only
    double best = std::numeric_limits<double>::infinity();
    Complex ref{kNaN, kNaN};
    for (Complex e : exact)
      if (std::abs(z - e) < best) {
        best = std::abs(z - e);
        ref = e;
      }
    jmatch.push_back(json{{"lambda", jcomplex(z)},
                          {"nearest_exact", jcomplex(ref)},
                          {"abs_error", jnum(best)},
                          {"rel_re_error",
                           jnum(std::abs(z.real() - ref.real()) /
                                std::max(1e-300, std::abs(ref.real())))}});
  }
  records.push_back(json{{"type", "reference-spectrum"},
                         {"exact", jexact},
                         {"matched", jmatch}});
}

// ---------------------------------------------------------------------------
// mitigate-critical-point: mean-field order-parameter curves at boosted
// rates, per-rate scaling fits, and extrapolation of (g_cri, beta) to r = 0
// against the exact zero-noise pitchfork.
// ---------------------------------------------------------------------------

void run_mitigate_critical_point(const ExperimentConfig& cfg, Table& table,
                                 std::vector<json>& records,
                                 RunOutcome& outcome) {
  MeanFieldOptions mfo;
  mfo.schedule = cfg.schedule_options();
  const NoiseModel noise = cfg.noise_model();
  const std::vector<double> rs = boosted_rates(cfg);

  const int n = int(rs.size());
  std::vector<PhaseCurve> curves(static_cast<std::size_t>(n));
  std::vector<std::string> errors;
  outcome.failures += run_points(
      n, cfg.workers,
      [&](int i) {
        curves[std::size_t(i)] =
            mf_sweep_g(cfg.g_values, rs[std::size_t(i)], cfg.model(), noise, mfo);
      },
      errors);
  outcome.points += n;
  record_errors(errors, "mitigate-critical-point", records);
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("mean-field sweep failed: " + e);

  ScalingFitOptions sfo;
  sfo.w_min = cfg.w_min;
  sfo.w_max = cfg.w_max;
  sfo.modified = noise.breaks_z2();
  sfo.extrapolation_order = cfg.extrapolation_order;
  ScalingExtrapolation ext = scaling_extrapolate(rs, curves, sfo);

  table.add_column("r", "modular error rate of the curve");
  table.add_column("g_cri_fit", "critical point from the scaling-law fit");
  table.add_column("beta_fit", "order-parameter exponent from the fit");
  table.add_column("amplitude", "power-law amplitude");
  table.add_column("offset", "constant offset (modified ansatz only)");
  table.add_column("residual", "rms relative misfit inside the fit window");
  table.add_column("ok", "1 when the fit succeeded");
  table.add_column("g_cri_pm", "pitchfork location from the symmetric-branch "
                   "stability (nan for symmetry-breaking noise)");
  for (int i = 0; i < n; ++i) {
    const PowerLawFit& f = ext.fits[std::size_t(i)];
    double g_pm = kNaN;
    if (!noise.breaks_z2())
      g_pm = mf_critical_g(rs[std::size_t(i)], cfg.model(), noise, mfo).value;
    table.rows.push_back({rs[std::size_t(i)], f.g_cri, f.beta, f.amplitude,
                          f.offset, f.residual, f.ok ? 1.0 : 0.0, g_pm});
  }

  CriticalPoint truth;
  bool have_truth = false;
  if (!noise.breaks_z2()) {
    truth = mf_critical_g(0.0, cfg.model(), noise, mfo);
    have_truth = true;
  } else {
    NoiseModel clean{NoiseKind::None, false};
    truth = mf_critical_g(0.0, cfg.model(), clean, mfo);
    have_truth = true;  // noiseless limit is symmetric regardless of kind
  }
  records.push_back(json{{"type", "extrapolation"},
                         {"order", cfg.extrapolation_order},
                         {"modified", sfo.modified},
                         {"g_cri0", jnum(ext.g_cri0)},
                         {"beta0", jnum(ext.beta0)},
                         {"ok", ext.ok}});
  // Window-sensitivity diagnostic: refit inside the lower half of the window.
  // Drift of (g_cri, beta) under the shrink measures how much correction to
  // scaling leaks into the fit.
  {
    ScalingFitOptions half = sfo;
    half.w_max = std::max(2.0 * sfo.w_min, 0.5 * sfo.w_max);
    ScalingExtrapolation exth = scaling_extrapolate(rs, curves, half);
    json drifts = json::array();
    for (std::size_t k = 0; k < exth.fits.size(); ++k)
      drifts.push_back(json{{"r", rs[k]},
                            {"g_cri_shift",
                             jnum(exth.fits[k].g_cri - ext.fits[k].g_cri)},
                            {"beta_shift",
                             jnum(exth.fits[k].beta - ext.fits[k].beta)}});
    records.push_back(json{{"type", "window-sensitivity"},
                           {"w_max_half", half.w_max},
                           {"g_cri0_half", jnum(exth.g_cri0)},
                           {"beta0_half", jnum(exth.beta0)},
                           {"per_rate", drifts}});
  }
  if (have_truth)
    records.push_back(json{{"type", "reference"},
                           {"g_cri_exact", jnum(truth.value)},
                           {"beta_exact", jnum(truth.beta)},
                           {"g_cri0_error", jnum(std::abs(ext.g_cri0 - truth.value))},
                           {"beta0_error", jnum(std::abs(ext.beta0 - truth.beta))}});
}

}  // namespace

std::uint64_t point_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 0x632be59bd9b4e019ull));
}

RunOutcome run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  validate_config(cfg);
  if (cfg.kind == ExperimentKind::MitigateCriticalPoint) {
    if (cfg.noise == NoiseKind::None || cfg.r0 <= 0.0)
      throw ConfigError("mitigate-critical-point needs noise and r0 > 0");
    if (cfg.c.size() < 2)
      throw ConfigError("mitigate-critical-point needs at least two boost factors");
  }

  std::string base = cfg.out;
  if (base.empty()) {
    const char* env = std::getenv("DXYZ_OUT_DIR");
    base = (env && *env) ? env : ".";
  }
  RunOutcome outcome;
  outcome.hash = config_hash(cfg);
  const std::string dir =
      base + "/" + experiment_name(cfg.kind) + "-" + outcome.hash.substr(0, 12);
  fs::create_directories(dir);
  outcome.paths = {dir, dir + "/table.tsv", dir + "/records.jsonl",
                   dir + "/meta.json"};

  Table table;
  std::vector<json> records;
  switch (cfg.kind) {
    case ExperimentKind::SteadyState:
      run_steady_state(cfg, table, records, outcome);
      break;
    case ExperimentKind::GSweep:
      run_g_sweep(cfg, table, records, outcome);
      break;
    case ExperimentKind::RSweep:
      run_r_sweep(cfg, table, records, outcome);
      break;
    case ExperimentKind::MeanFieldPhase:
      run_meanfield_phase(cfg, table, records, outcome);
      break;
    case ExperimentKind::Spectroscopy:
      run_spectroscopy(cfg, table, records, outcome);
      break;
    case ExperimentKind::MitigateCriticalPoint:
      run_mitigate_critical_point(cfg, table, records, outcome);
      break;
  }

  write_table(outcome.paths.table, cfg, outcome.hash, table);
  write_records(outcome.paths.records, records);
  write_meta(outcome.paths.meta, cfg, outcome.hash, outcome);

  log << experiment_name(cfg.kind) << ": " << outcome.points << " points, "
      << outcome.failures << " failures\n"
      << "  " << outcome.paths.table << "\n"
      << "  " << outcome.paths.records << "\n"
      << "  " << outcome.paths.meta << "\n";
  return outcome;
}

namespace {

struct ParsedTable {
  std::string experiment;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

ParsedTable parse_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open table '" + path + "'");
  ParsedTable t;
  std::string line;
  bool header_done = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# experiment = ";
      if (line.rfind(tag, 0) == 0) t.experiment = line.substr(tag.size());
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '\t')) cells.push_back(cell);
    if (!header_done) {
      t.columns = cells;
      header_done = true;
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0')
        throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                 ": non-numeric cell '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (!header_done) throw std::runtime_error(path + ": no header row");
  return t;
}

}  // namespace

CompareReport compare_tables(const std::string& path_a,
                             const std::string& path_b) {
  CompareReport rep;
  ParsedTable a = parse_table(path_a);
  ParsedTable b = parse_table(path_b);
  if (a.experiment != b.experiment) {
    rep.message = "experiment kinds differ: '" + a.experiment + "' vs '" +
                  b.experiment + "'";
    return rep;
  }
  if (a.columns != b.columns) {
    rep.message = "column sets differ";
    return rep;
  }
  if (a.rows.size() != b.rows.size()) {
    rep.message = "row counts differ: " + std::to_string(a.rows.size()) +
                  " vs " + std::to_string(b.rows.size());
    return rep;
  }
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].size() != a.columns.size() ||
        b.rows[i].size() != b.columns.size()) {
      rep.message = "row " + std::to_string(i + 1) + " width mismatch";
      return rep;
    }
    for (std::size_t j = 0; j < a.rows[i].size(); ++j) {
      const double x = a.rows[i][j], y = b.rows[i][j];
      const bool nx = std::isnan(x), ny = std::isnan(y);
      if (nx && ny) continue;
      if (nx != ny) {
        rep.message = "nan/number mismatch in column '" + a.columns[j] +
                      "', row " + std::to_string(i + 1);
        return rep;
      }
      const double dev = std::abs(x - y);
      if (dev > rep.max_deviation) {
        rep.max_deviation = dev;
        rep.worst_column = a.columns[j];
        rep.worst_row = int(i + 1);
      }
    }
  }
  rep.compatible = true;
  rep.message = rep.max_deviation == 0.0
                    ? "tables are numerically identical"
                    : "max deviation " + format_double(rep.max_deviation) +
                          " in column '" + rep.worst_column + "', row " +
                          std::to_string(rep.worst_row);
  return rep;
}

}  // namespace dxyz

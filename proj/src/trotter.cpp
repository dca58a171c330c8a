#include "dxyz/trotter.hpp"

#include <cmath>

namespace dxyz {

CompiledSchedule compile_schedule(const XYZSchedule& schedule, double tau,
                                  double r, const NoiseModel& noise) {
  require(tau > 0.0, "Trotter step must be positive");
  require(r >= 0.0, "modular error rate must be nonnegative");

  CompiledSchedule out;
  out.nqubits = schedule.nqubits();
  out.tau = tau;
  out.gates.reserve(schedule.gates.size());
  for (const auto& g : schedule.gates) {
    Mat channel = dense_expm(g.ideal * tau);
    if (r > 0.0 && g.noise_weight > 0.0 && noise.kind != NoiseKind::None) {
      const Mat gen = noise.generator_for(g);
      channel = dense_expm(gen * (r * g.noise_weight * tau)) * channel;
    }
    out.gates.push_back({std::move(channel), g.site_list()});
  }
  return out;
}

void trotter_step(Mat& rho, const CompiledSchedule& compiled) {
  for (const auto& g : compiled.gates) apply_local_channel(rho, g.channel, g.sites);
}

SteadyResult evolve_to_steady(const DensityMatrix& rho_in,
                              const XYZSchedule& schedule,
                              const EvolutionConfig& cfg) {
  require(rho_in.nqubits == schedule.nqubits(), "state/schedule qubit mismatch");
  require(cfg.probe_window > 0.0 && cfg.t_max > 0.0, "time parameters must be positive");

  const CompiledSchedule compiled =
      compile_schedule(schedule, cfg.tau, cfg.r, cfg.noise);
  const long window_steps = std::max(1L, std::lround(cfg.probe_window / cfg.tau));
  const long max_steps = std::lround(cfg.t_max / cfg.tau);

  SteadyResult result;
  Mat rho = rho_in.m;
  Mat probe = rho;
  long steps = 0;
  double residual = std::numeric_limits<double>::infinity();
  while (steps < max_steps) {
    for (long s = 0; s < window_steps && steps < max_steps; ++s, ++steps)
      trotter_step(rho, compiled);
    residual = trace_norm(rho - probe);
    probe = rho;
    if (residual < cfg.steady_tol) {
      result.converged = true;
      break;
    }
  }
  result.state = DensityMatrix(std::move(rho), rho_in.nqubits);
  result.residual = residual;
  result.steps = steps;
  return result;
}

double Observable::expect(const Mat& rho) const {
  const Complex value = op.cwiseProduct(rho.transpose()).sum();
  if (std::abs(value.imag()) > 1e-8)
    throw std::runtime_error("observable expectation has imaginary part " +
                             std::to_string(value.imag()));
  return value.real();
}

Observable site_observable(const std::string& name, const Mat& local, int site,
                           int nqubits) {
  return Observable{name, embed_operator(local, {site}, nqubits)};
}

Observable uniform_z(int nqubits) {
  const Eigen::Index d = Eigen::Index(1) << nqubits;
  Mat op = Mat::Zero(d, d);
  for (int s = 0; s < nqubits; ++s) op += embed_operator(pauli::Z(), {s}, nqubits);
  return Observable{"uniform_z", op / double(nqubits)};
}

Observable uniform_x(int nqubits) {
  const Eigen::Index d = Eigen::Index(1) << nqubits;
  Mat op = Mat::Zero(d, d);
  for (int s = 0; s < nqubits; ++s) op += embed_operator(pauli::X(), {s}, nqubits);
  return Observable{"uniform_x", op / double(nqubits)};
}

std::vector<TimeSeries> record_trajectory(const DensityMatrix& rho_in,
                                          const XYZSchedule& schedule,
                                          const EvolutionConfig& cfg,
                                          const std::vector<Observable>& obs,
                                          int stride, double t_end) {
  require(rho_in.nqubits == schedule.nqubits(), "state/schedule qubit mismatch");
  require(stride >= 1, "stride must be at least 1");
  require(t_end > 0.0, "t_end must be positive");

  const CompiledSchedule compiled =
      compile_schedule(schedule, cfg.tau, cfg.r, cfg.noise);
  const long total_steps = std::lround(t_end / cfg.tau);

  std::vector<TimeSeries> series(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    series[i].name = obs[i].name;
    series[i].dt = cfg.tau * stride;
  }
  Mat rho = rho_in.m;
  for (long step = 0; step <= total_steps; ++step) {
    if (step % stride == 0) {
      const double t = step * cfg.tau;
      for (std::size_t i = 0; i < obs.size(); ++i) {
        series[i].times.push_back(t);
        series[i].values.push_back(obs[i].expect(rho));
      }
    }
    if (step < total_steps) trotter_step(rho, compiled);
  }
  return series;
}

}  // namespace dxyz

#include "dxyz/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dxyz {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError("expected a number, got '" + s + "'", line);
  return v;
}

long parse_int(const std::string& s, int line) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError("expected an integer, got '" + s + "'", line);
  return v;
}

bool parse_bool(const std::string& s, int line) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("expected true/false, got '" + s + "'", line);
}

// Either a comma list "a, b, c" or an inclusive range "lo:hi:count".
std::vector<double> parse_list(const std::string& s, int line) {
  std::vector<double> out;
  if (s.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string part;
    while (std::getline(ss, part, ':')) parts.push_back(trim(part));
    if (parts.size() != 3)
      throw ConfigError("range syntax is lo:hi:count, got '" + s + "'", line);
    double lo = parse_double(parts[0], line);
    double hi = parse_double(parts[1], line);
    long count = parse_int(parts[2], line);
    if (count < 1) throw ConfigError("range count must be >= 1", line);
    if (count == 1) {
      out.push_back(lo);
    } else {
      for (long i = 0; i < count; ++i)
        out.push_back(lo + (hi - lo) * double(i) / double(count - 1));
    }
    return out;
  }
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    if (part.empty()) throw ConfigError("empty list element", line);
    out.push_back(parse_double(part, line));
  }
  if (out.empty()) throw ConfigError("expected a non-empty list", line);
  return out;
}

Boundary parse_boundary(const std::string& s, int line) {
  if (s == "open") return Boundary::Open;
  if (s == "periodic") return Boundary::Periodic;
  throw ConfigError("boundary must be open or periodic, got '" + s + "'", line);
}

NoiseKind parse_noise(const std::string& s, int line) {
  if (s == "none") return NoiseKind::None;
  if (s == "depolarizing") return NoiseKind::Depolarizing;
  if (s == "random-pauli") return NoiseKind::RandomPauli;
  if (s == "transverse-damping") return NoiseKind::TransverseDamping;
  throw ConfigError(
      "noise must be one of none, depolarizing, random-pauli, "
      "transverse-damping; got '" + s + "'",
      line);
}

const char* boundary_name(Boundary b) {
  return b == Boundary::Open ? "open" : "periodic";
}

const char* noise_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::None: return "none";
    case NoiseKind::Depolarizing: return "depolarizing";
    case NoiseKind::RandomPauli: return "random-pauli";
    case NoiseKind::TransverseDamping: return "transverse-damping";
  }
  return "?";
}

std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::SteadyState: return "steady-state";
    case ExperimentKind::GSweep: return "g-sweep";
    case ExperimentKind::RSweep: return "r-sweep";
    case ExperimentKind::MeanFieldPhase: return "meanfield-phase";
    case ExperimentKind::Spectroscopy: return "spectroscopy";
    case ExperimentKind::MitigateCriticalPoint: return "mitigate-critical-point";
  }
  return "?";
}

ExperimentKind experiment_from_name(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::SteadyState, ExperimentKind::GSweep,
        ExperimentKind::RSweep, ExperimentKind::MeanFieldPhase,
        ExperimentKind::Spectroscopy, ExperimentKind::MitigateCriticalPoint}) {
    if (experiment_name(k) == name) return k;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

ModelSpec ExperimentConfig::model() const { return {Jx, Jy, Jz, gamma}; }

NoiseModel ExperimentConfig::noise_model() const {
  return {noise, loose_pauli};
}

ScheduleOptions ExperimentConfig::schedule_options() const {
  return {noise_per_axis};
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  double g_raw = 0.0;

  using Setter = std::function<void(const std::string&, int)>;
  const std::map<std::string, Setter> schema = {
      {"experiment", [&](const std::string& v, int ln) {
         try {
           cfg.kind = experiment_from_name(v);
         } catch (const ConfigError& e) {
           throw ConfigError(e.what(), ln);
         }
         cfg.kind_set = true;
       }},
      {"L", [&](const std::string& v, int ln) { cfg.L = int(parse_int(v, ln)); }},
      {"boundary", [&](const std::string& v, int ln) { cfg.boundary = parse_boundary(v, ln); }},
      {"Jx", [&](const std::string& v, int ln) { cfg.Jx = parse_double(v, ln); }},
      {"Jy", [&](const std::string& v, int ln) {
         cfg.Jy = parse_double(v, ln);
         cfg.jy_set = true;
       }},
      {"Jz", [&](const std::string& v, int ln) { cfg.Jz = parse_double(v, ln); }},
      {"gamma", [&](const std::string& v, int ln) { cfg.gamma = parse_double(v, ln); }},
      {"g", [&](const std::string& v, int ln) {
         g_raw = parse_double(v, ln);
         cfg.g_set = true;
       }},
      {"tau", [&](const std::string& v, int ln) { cfg.tau = parse_double(v, ln); }},
      {"t_max", [&](const std::string& v, int ln) { cfg.t_max = parse_double(v, ln); }},
      {"steady_tol", [&](const std::string& v, int ln) { cfg.steady_tol = parse_double(v, ln); }},
      {"noise", [&](const std::string& v, int ln) { cfg.noise = parse_noise(v, ln); }},
      {"loose_pauli", [&](const std::string& v, int ln) { cfg.loose_pauli = parse_bool(v, ln); }},
      {"noise_per_axis", [&](const std::string& v, int ln) { cfg.noise_per_axis = parse_bool(v, ln); }},
      {"r0", [&](const std::string& v, int ln) { cfg.r0 = parse_double(v, ln); }},
      {"c", [&](const std::string& v, int ln) { cfg.c = parse_list(v, ln); }},
      {"g_values", [&](const std::string& v, int ln) { cfg.g_values = parse_list(v, ln); }},
      {"r_values", [&](const std::string& v, int ln) { cfg.r_values = parse_list(v, ln); }},
      {"t_end", [&](const std::string& v, int ln) { cfg.t_end = parse_double(v, ln); }},
      {"stride", [&](const std::string& v, int ln) { cfg.stride = int(parse_int(v, ln)); }},
      {"w_min", [&](const std::string& v, int ln) { cfg.w_min = parse_double(v, ln); }},
      {"w_max", [&](const std::string& v, int ln) { cfg.w_max = parse_double(v, ln); }},
      {"extrapolation_order", [&](const std::string& v, int ln) {
         cfg.extrapolation_order = int(parse_int(v, ln));
       }},
      {"seed", [&](const std::string& v, int ln) {
         cfg.seed = std::uint64_t(parse_int(v, ln));
       }},
      {"out", [&](const std::string& v, int) { cfg.out = v; }},
      {"workers", [&](const std::string& v, int ln) { cfg.workers = int(parse_int(v, ln)); }},
  };

  std::stringstream ss(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(ss, raw)) {
    ++line_no;
    std::string line = raw;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected `key = value`, got '" + trim(raw) + "'", line_no);
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("missing key before '='", line_no);
    if (value.empty()) throw ConfigError("missing value for '" + key + "'", line_no);
    auto it = schema.find(key);
    if (it == schema.end()) throw ConfigError("unknown key '" + key + "'", line_no);
    it->second(value, line_no);
  }

  if (cfg.g_set && cfg.jy_set)
    throw ConfigError("set either g or Jy, not both (g determines Jy)");
  if (cfg.g_set) cfg.Jy = cfg.Jx + 2.0 * g_raw * cfg.gamma;

  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.L < 1 || cfg.L > 3)
    throw ConfigError("L must be 1, 2, or 3 (lattice side)");
  if (cfg.gamma <= 0) throw ConfigError("gamma must be positive");
  if (cfg.tau <= 0) throw ConfigError("tau must be positive");
  if (cfg.t_max <= 0) throw ConfigError("t_max must be positive");
  if (cfg.steady_tol <= 0) throw ConfigError("steady_tol must be positive");
  if (cfg.r0 < 0) throw ConfigError("r0 must be >= 0");
  if (cfg.c.empty()) throw ConfigError("c must list at least one boost factor");
  for (double ci : cfg.c)
    if (ci < 1.0) throw ConfigError("boost factors must be >= 1");
  for (std::size_t i = 1; i < cfg.c.size(); ++i)
    if (cfg.c[i] <= cfg.c[i - 1])
      throw ConfigError("boost factors must be strictly increasing");
  if (cfg.t_end <= 0) throw ConfigError("t_end must be positive");
  if (cfg.stride < 1) throw ConfigError("stride must be >= 1");
  if (cfg.w_min <= 0 || cfg.w_max <= cfg.w_min)
    throw ConfigError("need 0 < w_min < w_max");
  if (cfg.extrapolation_order != 1 && cfg.extrapolation_order != 2)
    throw ConfigError("extrapolation_order must be 1 or 2");
  if (cfg.workers < 1) throw ConfigError("workers must be >= 1");

  const bool needs_g_grid = cfg.kind == ExperimentKind::GSweep ||
                            cfg.kind == ExperimentKind::MitigateCriticalPoint;
  if (needs_g_grid && cfg.g_values.empty())
    throw ConfigError("experiment '" + experiment_name(cfg.kind) +
                      "' requires g_values");
  if (cfg.kind == ExperimentKind::RSweep && cfg.r_values.empty())
    throw ConfigError("experiment 'r-sweep' requires r_values");
  if (cfg.kind == ExperimentKind::MeanFieldPhase && cfg.g_values.empty() &&
      cfg.r_values.empty())
    throw ConfigError("experiment 'meanfield-phase' requires g_values or r_values");
  if (cfg.kind == ExperimentKind::MeanFieldPhase && !cfg.g_values.empty() &&
      !cfg.r_values.empty())
    throw ConfigError("meanfield-phase sweeps one axis: set g_values or r_values, not both");
  if (cfg.kind == ExperimentKind::Spectroscopy && cfg.L > 2)
    throw ConfigError("spectroscopy needs the dense reference spectrum; L <= 2");
}

std::string canonical_config(const ExperimentConfig& cfg) {
  std::string s;
  auto put = [&](const char* key, const std::string& value) {
    s += key;
    s += " = ";
    s += value;
    s += "\n";
  };
  put("experiment", experiment_name(cfg.kind));
  put("L", std::to_string(cfg.L));
  put("boundary", boundary_name(cfg.boundary));
  put("Jx", format_double(cfg.Jx));
  put("Jy", format_double(cfg.Jy));
  put("Jz", format_double(cfg.Jz));
  put("gamma", format_double(cfg.gamma));
  put("tau", format_double(cfg.tau));
  put("t_max", format_double(cfg.t_max));
  put("steady_tol", format_double(cfg.steady_tol));
  put("noise", noise_name(cfg.noise));
  put("loose_pauli", cfg.loose_pauli ? "true" : "false");
  put("noise_per_axis", cfg.noise_per_axis ? "true" : "false");
  put("r0", format_double(cfg.r0));
  put("c", format_list(cfg.c));
  if (!cfg.g_values.empty()) put("g_values", format_list(cfg.g_values));
  if (!cfg.r_values.empty()) put("r_values", format_list(cfg.r_values));
  if (cfg.kind == ExperimentKind::Spectroscopy) {
    put("t_end", format_double(cfg.t_end));
    put("stride", std::to_string(cfg.stride));
  }
  if (cfg.kind == ExperimentKind::MitigateCriticalPoint ||
      cfg.kind == ExperimentKind::MeanFieldPhase) {
    put("w_min", format_double(cfg.w_min));
    put("w_max", format_double(cfg.w_max));
    put("extrapolation_order", std::to_string(cfg.extrapolation_order));
  }
  put("seed", std::to_string(cfg.seed));
  return s;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_config(cfg);
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace dxyz

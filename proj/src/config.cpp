#include "cpesim/config.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cpesim/io.hpp"

namespace cpesim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPi = std::numbers::pi;

[[noreturn]] void fail(int line, const std::string& msg) {
  std::ostringstream out;
  out << "config error";
  if (line > 0) out << " (line " << line << ")";
  out << ": " << msg;
  throw SimError(ErrorKind::Config, out.str());
}

double parse_double(int line, const std::string& key, const std::string& value) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    fail(line, "key '" + key + "' expects a number, got '" + value + "'");
  }
  if (pos != value.size())
    fail(line, "key '" + key + "' expects a number, got '" + value + "'");
  return v;
}

int parse_int(int line, const std::string& key, const std::string& value) {
  const double v = parse_double(line, key, value);
  if (v != std::floor(v)) fail(line, "key '" + key + "' expects an integer");
  return static_cast<int>(v);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  bool regime_seen = false;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value': '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) fail(lineno, "empty key or value");

    if (key == "regime") {
      regime_seen = true;
      if (value == "gravity_gamma2")
        config.params.regime = Regime::GravityGamma2;
      else if (value == "vacuum")
        config.params.regime = Regime::VacuumNoGravity;
      else if (value == "free_boundary")
        config.params.regime = Regime::FreeBoundary;
      else
        fail(lineno, "unknown regime '" + value + "'");
    } else if (key == "mu") config.params.mu = parse_double(lineno, key, value);
    else if (key == "lambda") config.params.lambda = parse_double(lineno, key, value);
    else if (key == "gamma") config.params.gamma = parse_double(lineno, key, value);
    else if (key == "g") config.params.g = parse_double(lineno, key, value);
    else if (key == "dt") config.params.dt = parse_double(lineno, key, value);
    else if (key == "t_end") config.params.t_end = parse_double(lineno, key, value);
    else if (key == "picard_tol") config.params.picard_tol = parse_double(lineno, key, value);
    else if (key == "picard_max_iter")
      config.params.picard_max_iter = parse_int(lineno, key, value);
    else if (key == "iota") config.params.iota = parse_double(lineno, key, value);
    else if (key == "rho_floor") config.params.rho_floor = parse_double(lineno, key, value);
    else if (key == "nx") config.nx = parse_int(lineno, key, value);
    else if (key == "ny") config.ny = parse_int(lineno, key, value);
    else if (key == "nz") config.nz = parse_int(lineno, key, value);
    else if (key == "init") config.init = value;
    else if (key == "amplitude") config.amplitude = parse_double(lineno, key, value);
    else if (key == "stability_scale")
      config.stability_scale = parse_double(lineno, key, value);
    else if (key == "out_dir") config.out_dir = value;
    else if (key == "snapshot_every") config.snapshot_every = parse_int(lineno, key, value);
    else if (key == "steps") config.steps = parse_int(lineno, key, value);
    else if (key == "mode") {
      if (value != "run" && value != "mms" && value != "stability" && value != "fb" &&
          value != "check")
        fail(lineno, "unknown mode '" + value + "'");
      config.mode = value;
    } else {
      fail(lineno, "unknown key '" + key + "'");
    }
  }
  if (!regime_seen) fail(0, "regime missing (gravity_gamma2 | vacuum | free_boundary)");
  try {
    config.params.validate();
  } catch (const SimError& e) {
    fail(0, e.what());
  }
  if (config.steps < 0) fail(0, "steps must be >= 0");
  if (config.snapshot_every < 0) fail(0, "snapshot_every must be >= 0");
  return config;
}

std::string emit_config(const RunConfig& config) {
  std::ostringstream out;
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  out << "regime = " << regime_name(config.params.regime) << "\n";
  out << "mu = " << num(config.params.mu) << "\n";
  out << "lambda = " << num(config.params.lambda) << "\n";
  out << "gamma = " << num(config.params.gamma) << "\n";
  out << "g = " << num(config.params.g) << "\n";
  out << "dt = " << num(config.params.dt) << "\n";
  out << "t_end = " << num(config.params.t_end) << "\n";
  out << "picard_tol = " << num(config.params.picard_tol) << "\n";
  out << "picard_max_iter = " << config.params.picard_max_iter << "\n";
  out << "iota = " << num(config.params.iota) << "\n";
  out << "rho_floor = " << num(config.params.rho_floor) << "\n";
  out << "nx = " << config.nx << "\n";
  out << "ny = " << config.ny << "\n";
  out << "nz = " << config.nz << "\n";
  out << "init = " << config.init << "\n";
  out << "amplitude = " << num(config.amplitude) << "\n";
  out << "stability_scale = " << num(config.stability_scale) << "\n";
  out << "out_dir = " << config.out_dir << "\n";
  out << "snapshot_every = " << config.snapshot_every << "\n";
  out << "steps = " << config.steps << "\n";
  out << "mode = " << config.mode << "\n";
  return out.str();
}

namespace {

Field2 surface_preset(const Grid& grid, const RunConfig& config) {
  Field2 s(grid.ny, grid.nx);
  const double amp = config.amplitude;
  const bool vacuum = config.params.regime == Regime::VacuumNoGravity;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.x(i);
      if (config.init == "rest") {
        s(j, i) = 1.0;
      } else if (config.init == "decaying_shear") {
        s(j, i) = 1.0 + amp * std::cos(kTwoPi * x);
      } else if (config.init == "vacuum_bump") {
        const double c = 0.5 * (1.0 + std::cos(kTwoPi * x));
        s(j, i) = c * c;  // band-limited, touches zero at x = 1/2
      } else {
        throw SimError(ErrorKind::Config, "unknown init preset '" + config.init + "'");
      }
    }
  if (vacuum && config.init == "decaying_shear") s = s.max(0.0).eval();
  return s;
}

VecField3 velocity_preset(const Grid& grid, const RunConfig& config) {
  VecField3 v(grid.nx, grid.ny, grid.nz);
  const double amp = config.amplitude;
  if (config.init == "rest") return v;
  for (int k = 0; k < grid.nz; ++k) {
    const double cz = std::cos(kPi * grid.z(k));
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const double x = grid.x(i);
        const double y = grid.y(j);
        if (config.init == "decaying_shear") {
          v.x(i, j, k) = amp * std::sin(kTwoPi * y) * cz;
        } else if (config.init == "vacuum_bump") {
          v.x(i, j, k) = 0.5 * amp * std::sin(kTwoPi * y) * cz;
          v.y(i, j, k) = 0.5 * amp * std::cos(kTwoPi * x) * cz;
        }
      }
  }
  return v;
}

}  // namespace

PrimState make_initial_state(const Grid& grid, const RunConfig& config) {
  if (config.init.rfind("file:", 0) == 0) {
    const SnapshotData snap = read_snapshot(config.init.substr(5));
    return snapshot_to_state(snap, grid, config.params);
  }
  return make_state(grid, config.params, surface_preset(grid, config),
                    velocity_preset(grid, config));
}

FbState make_initial_fb_state(const Grid& grid, const RunConfig& config) {
  if (config.init.rfind("file:", 0) == 0) {
    const SnapshotData snap = read_snapshot(config.init.substr(5));
    return snapshot_to_fb_state(snap, grid, config.params);
  }
  Field2 z0(grid.ny, grid.nx);
  VecField3 v0(grid.nx, grid.ny, grid.nz);
  const double amp = config.amplitude;
  if (config.init == "rest") {
    z0.setConstant(1.0);
  } else if (config.init == "fb_wave") {
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        z0(j, i) = 1.0 + amp * std::cos(kTwoPi * grid.x(i));
    for (int k = 0; k < grid.nz; ++k) {
      const double profile = 1.0 + 0.5 * std::cos(kPi * grid.z(k));
      for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
          v0.x(i, j, k) = amp * std::sin(kTwoPi * grid.y(j)) * profile;
    }
  } else {
    throw SimError(ErrorKind::Config,
                   "unknown free-boundary init preset '" + config.init + "'");
  }
  return make_fb_state(grid, config.params, z0, v0);
}

PrimState perturbed_state(const Grid& grid, const RunConfig& config, double scale) {
  PrimState base = make_initial_state(grid, config);
  Field2 ds(grid.ny, grid.nx);
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) ds(j, i) = std::cos(kTwoPi * grid.y(j));
  Field2 surface = (base.surface_var + scale * ds).eval();
  VecField3 dv(grid.nx, grid.ny, grid.nz);
  for (int k = 0; k < grid.nz; ++k) {
    const double cz = std::cos(kPi * grid.z(k));
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i)
        dv.y(i, j, k) = std::sin(kTwoPi * grid.x(i)) * cz;
  }
  return make_state(grid, config.params, surface, base.v + scale * dv);
}

}  // namespace cpesim

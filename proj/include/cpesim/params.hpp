#pragma once

#include <string>

#include "cpesim/util.hpp"

namespace cpesim {

enum class Regime { GravityGamma2, VacuumNoGravity, FreeBoundary };

std::string regime_name(Regime r);

/// Physical constants and numerical controls shared by every module.
struct SimParams {
  double mu = 1.0;              // viscosity
  double lambda = 0.0;          // second viscosity
  double gamma = 2.0;           // adiabatic exponent
  double g = 9.8;               // gravity
  double dt = 1e-3;             // time step
  double t_end = 0.0;           // horizon (informational; steps drive runs)
  double picard_tol = 1e-10;    // relative tolerance on the iteration norm
  int picard_max_iter = 20;
  double iota = 0.0;            // parabolic regularization coefficient
  double rho_floor = 0.0;       // density floor
  Regime regime = Regime::GravityGamma2;

  /// Mass-matrix lift used by the vacuum momentum solve.
  double mass_floor() const { return std::max(rho_floor, 1e-10); }

  /// Throws SimError{Config} when a constraint is violated.
  void validate() const;
};

inline std::string regime_name(Regime r) {
  switch (r) {
    case Regime::GravityGamma2: return "gravity_gamma2";
    case Regime::VacuumNoGravity: return "vacuum";
    case Regime::FreeBoundary: return "free_boundary";
  }
  return "?";
}

inline void SimParams::validate() const {
  auto fail = [](const std::string& m) { throw SimError(ErrorKind::Config, m); };
  if (!(gamma > 1.0)) fail("gamma must be > 1");
  if (regime == Regime::GravityGamma2 && gamma != 2.0)
    fail("gravity regime requires gamma = 2");
  if (regime == Regime::FreeBoundary) {
    if (mu != 0.0 || lambda != 0.0)
      fail("free-boundary regime is inviscid: mu = lambda = 0 required");
    if (!(g > 0.0)) fail("free-boundary regime requires g > 0");
  } else {
    if (!(mu > 0.0)) fail("mu must be > 0 in the viscous regimes");
    if (!(mu + lambda > 0.0)) fail("mu + lambda must be > 0");
  }
  if (!(g >= 0.0)) fail("g must be >= 0");
  if (!(dt > 0.0)) fail("dt must be > 0");
  if (!(picard_tol > 0.0)) fail("picard_tol must be > 0");
  if (picard_max_iter < 0) fail("picard_max_iter must be >= 0");
  if (iota < 0.0) fail("iota must be >= 0");
  if (rho_floor < 0.0) fail("rho_floor must be >= 0");
  if (regime == Regime::GravityGamma2 && !(rho_floor > 0.0))
    fail("gravity regime requires rho_floor > 0 (no vacuum with gravity)");
}

}  // namespace cpesim

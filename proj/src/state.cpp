#include "cpesim/state.hpp"

#include <algorithm>
#include <cmath>

#include "cpesim/hydrostatics.hpp"
#include "cpesim/vertical.hpp"

namespace cpesim {

void project_neumann(VecField3& v) {
  const int nz = v.x.nz();
  for (Field3* comp : {&v.x, &v.y}) {
    comp->level(0) = (4.0 * comp->level(1) - comp->level(2)) / 3.0;
    comp->level(nz - 1) = (4.0 * comp->level(nz - 2) - comp->level(nz - 3)) / 3.0;
  }
}

PrimState make_state(const Grid& grid, const SimParams& params,
                     const Field2& init_surface, const VecField3& init_v) {
  if (init_surface.rows() != grid.ny || init_surface.cols() != grid.nx)
    throw SimError(ErrorKind::Shape, "surface field does not match grid");
  if (init_v.x.nx() != grid.nx || init_v.x.ny() != grid.ny || init_v.x.nz() != grid.nz)
    throw SimError(ErrorKind::Shape, "velocity field does not match grid");

  if (params.regime == Regime::VacuumNoGravity) {
    if ((init_surface < 0.0).any())
      throw SimError(ErrorKind::NegativeDensity, "sigma must be >= 0");
    const double mass = pairwise_sum((init_surface * init_surface).eval()) /
                        static_cast<double>(init_surface.size());
    if (!(mass > 0.0))
      throw SimError(ErrorKind::NegativeDensity,
                     "zero total mass: initial data must carry positive mass");
  } else if (params.regime == Regime::GravityGamma2) {
    const double min_rho = init_surface.minCoeff();  // worst level is z = 0
    if (params.rho_floor > 0.0 && min_rho < params.rho_floor)
      throw SimError(ErrorKind::NegativeDensity,
                     "initial density below floor in gravity regime");
    if (min_rho < 0.0)
      throw SimError(ErrorKind::NegativeDensity, "negative initial density");
  }

  PrimState state;
  state.surface_var = init_surface;
  state.v = init_v;
  project_neumann(state.v);
  state.time = 0.0;
  return state;
}

FbState make_fb_state(const Grid& grid, const SimParams& params, const Field2& init_z,
                      const VecField3& init_v) {
  if (params.regime != Regime::FreeBoundary)
    throw SimError(ErrorKind::Config, "free-boundary state requires fb regime");
  if (init_z.rows() != grid.ny || init_z.cols() != grid.nx)
    throw SimError(ErrorKind::Shape, "interface field does not match grid");
  if (init_v.x.nx() != grid.nx || init_v.x.ny() != grid.ny || init_v.x.nz() != grid.nz)
    throw SimError(ErrorKind::Shape, "velocity field does not match grid");
  if (!(init_z.minCoeff() > 0.0))
    throw SimError(ErrorKind::NegativeDensity, "interface height must be positive");
  return FbState{init_z, init_v, 0.0};
}

CompatibilityReport check_compatibility(const SpectralPlan& plan, const Grid& grid,
                                        const PrimState& state, const SimParams& params) {
  const VecField3& v0 = state.v;
  const Field3 rho = reconstruct_density(grid, state, params);

  VecField3 combo = plan.laplace(v0);
  combo *= params.mu;
  combo += params.mu * VecField3{d_zz(grid, v0.x, ZBoundary::Velocity),
                                 d_zz(grid, v0.y, ZBoundary::Velocity)};
  const Field3 divv = plan.div(v0);
  combo += (params.mu + params.lambda) * plan.grad(divv);

  if (params.regime == Regime::GravityGamma2) {
    // (2 xi + g z) grad_h xi
    const VecField2 gxi = plan.grad(state.surface_var);
    Field3 coeff(grid.nx, grid.ny, grid.nz);
    for (int k = 0; k < grid.nz; ++k)
      coeff.level(k) = 2.0 * state.surface_var + params.g * grid.z(k);
    combo.x -= plan.dealias(hadamard(coeff, broadcast(grid, gxi.x)));
    combo.y -= plan.dealias(hadamard(coeff, broadcast(grid, gxi.y)));
  } else {
    const Field3 pressure = pressure_from_density(rho, params.gamma);
    combo -= plan.grad(pressure);
  }

  // rho v . grad_h v
  const VecField3 gvx = plan.grad(v0.x);
  const VecField3 gvy = plan.grad(v0.y);
  combo.x -= plan.dealias(hadamard(rho, hadamard(v0.x, gvx.x) + hadamard(v0.y, gvx.y)));
  combo.y -= plan.dealias(hadamard(rho, hadamard(v0.x, gvy.x) + hadamard(v0.y, gvy.y)));

  // mass-flux form of rho w d_z v
  const WRecovery rec = params.regime == Regime::GravityGamma2
                            ? recover_w_gravity(plan, grid, state, params)
                            : recover_w_vacuum(plan, grid, state, params);
  Field3 flux = rec.mass_flux;
  if (params.regime == Regime::VacuumNoGravity) {
    // the momentum term carries sigma * (sigma w)
    flux.flat() *= broadcast(grid, state.surface_var).flat();
  }
  combo.x -= plan.dealias(hadamard(flux, d_z(grid, v0.x, ZBoundary::Velocity)));
  combo.y -= plan.dealias(hadamard(flux, d_z(grid, v0.y, ZBoundary::Velocity)));

  // V1 = combo / rho, h1 = combo / sigma; the divisor is floored so the
  // report stays finite near vacuum (a large value flags incompatibility)
  Field3 divisor(grid.nx, grid.ny, grid.nz);
  if (params.regime == Regime::GravityGamma2)
    divisor = rho;
  else
    divisor = broadcast(grid, state.surface_var);
  divisor.flat() = divisor.flat().max(1e-8);
  VecField3 resid = combo;
  resid.x.flat() /= divisor.flat();
  resid.y.flat() /= divisor.flat();

  CompatibilityReport report;
  report.residual_l2 = norm3(grid, resid);

  const double h2 = 2.0 * grid.hz;
  const int nz = grid.nz;
  double bmax = 0.0;
  for (const Field3* comp : {&v0.x, &v0.y}) {
    const Field2 bot =
        ((-3.0 * comp->level(0) + 4.0 * comp->level(1) - comp->level(2)) / h2).eval();
    const Field2 top = ((3.0 * comp->level(nz - 1) - 4.0 * comp->level(nz - 2) +
                         comp->level(nz - 3)) / h2).eval();
    bmax = std::max({bmax, bot.abs().maxCoeff(), top.abs().maxCoeff()});
  }
  report.boundary_residual = bmax;
  return report;
}

}  // namespace cpesim

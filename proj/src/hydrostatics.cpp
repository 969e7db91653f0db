#include "cpesim/hydrostatics.hpp"

#include <cmath>
#include <limits>

namespace cpesim {

Field3 reconstruct_density(const Grid& grid, const PrimState& state,
                           const SimParams& params) {
  Field3 rho(grid.nx, grid.ny, grid.nz);
  if (params.regime == Regime::GravityGamma2) {
    if (state.surface_var.minCoeff() < 0.0)
      throw SimError(ErrorKind::NegativeDensity,
                     "negative density: xi + g z / 2 < 0 at z = 0");
    for (int k = 0; k < grid.nz; ++k)
      rho.level(k) = state.surface_var + 0.5 * params.g * grid.z(k);
  } else {
    const Field2 r = (state.surface_var * state.surface_var).eval();
    for (int k = 0; k < grid.nz; ++k) rho.level(k) = r;
  }
  return rho;
}

Field3 pressure_from_density(const Field3& rho, double gamma) {
  Field3 p = rho;
  if (gamma == 2.0)
    p.flat() *= rho.flat();
  else
    p.flat() = rho.flat().max(0.0).pow(gamma);
  return p;
}

namespace {

WRecovery finish_recovery(const Grid& grid, const Field3& integrand, const Field3& rho,
                          double floor) {
  WRecovery rec;
  rec.mass_flux = vint(grid, integrand);
  rec.mass_flux *= -1.0;
  rec.w = Field3(rho.nx(), rho.ny(), rho.nz());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rec.w.flat() = (rho.flat() > floor)
                     .select(rec.mass_flux.flat() / rho.flat(),
                             Eigen::ArrayXd::Constant(rho.size(), nan));
  return rec;
}

}  // namespace

WRecovery recover_w_gravity(const SpectralPlan& plan, const Grid& grid,
                            const PrimState& state, const SimParams& params) {
  if (params.regime != Regime::GravityGamma2)
    throw SimError(ErrorKind::Config, "gravity-regime recovery on wrong regime");
  // products stay unmasked here: band-limited inputs keep them alias-free,
  // and the vacuum-form equivalence is then pointwise exact
  const Field3 vtx = vfluct(grid, state.v.x);
  const Field3 vty = vfluct(grid, state.v.y);
  const Field3 xi3 = broadcast(grid, state.surface_var);
  Field3 integrand =
      plan.div(VecField3{hadamard(xi3, vtx), hadamard(xi3, vty)});

  if (params.g != 0.0) {
    Field3 zdiv = plan.div(state.v);
    for (int k = 0; k < grid.nz; ++k) zdiv.level(k) *= grid.z(k);
    integrand += (0.5 * params.g) * vfluct(grid, zdiv);
  }
  const Field3 rho = reconstruct_density(grid, state, params);
  return finish_recovery(grid, integrand, rho, params.rho_floor);
}

WRecovery recover_w_vacuum(const SpectralPlan& plan, const Grid& grid,
                           const PrimState& state, const SimParams& params) {
  if (params.regime != Regime::VacuumNoGravity)
    throw SimError(ErrorKind::Config, "vacuum-regime recovery on wrong regime");
  const Field3 sig3 = broadcast(grid, state.surface_var);
  const Field3 divv = vfluct(grid, plan.div(state.v));
  const VecField2 gsig = plan.grad(state.surface_var);
  const Field3 gx = broadcast(grid, gsig.x);
  const Field3 gy = broadcast(grid, gsig.y);
  const Field3 vtx = vfluct(grid, state.v.x);
  const Field3 vty = vfluct(grid, state.v.y);

  Field3 integrand = hadamard(sig3, divv);
  integrand += 2.0 * (hadamard(vtx, gx) + hadamard(vty, gy));

  // w = flux / sigma where sigma exceeds the floor's square root
  Field3 sigma_as_density = sig3;
  WRecovery rec;
  rec.mass_flux = vint(grid, integrand);
  rec.mass_flux *= -1.0;
  rec.w = Field3(grid.nx, grid.ny, grid.nz);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double sfloor = std::sqrt(std::max(params.rho_floor, 0.0));
  rec.w.flat() = (sigma_as_density.flat() > sfloor)
                     .select(rec.mass_flux.flat() / sigma_as_density.flat(),
                             Eigen::ArrayXd::Constant(sig3.size(), nan));
  return rec;
}

DerivedFields derive_fields(const SpectralPlan& plan, const Grid& grid,
                            const PrimState& state, const SimParams& params) {
  DerivedFields out;
  out.rho = reconstruct_density(grid, state, params);
  out.pressure = pressure_from_density(out.rho, params.gamma);
  const WRecovery rec = params.regime == Regime::GravityGamma2
                            ? recover_w_gravity(plan, grid, state, params)
                            : recover_w_vacuum(plan, grid, state, params);
  out.mass_flux_w = rec.mass_flux;
  out.w = rec.w;
  return out;
}

double weighted_embedding_check(const SpectralPlan& plan, const Grid& grid,
                                const Field3& f, const Field3& rho, double p) {
  if (!(p >= 2.0 && p <= 6.0))
    throw SimError(ErrorKind::Config, "embedding exponent must lie in [2,6]");
  Eigen::ArrayXd per_level(grid.nz);
  for (int k = 0; k < grid.nz; ++k)
    per_level[k] =
        grid.quad_weights[k] * SpectralPlan::hmean(f.level(k).abs().pow(p).eval());
  const double lp = std::pow(pairwise_sum(per_level.data(), per_level.size()), 1.0 / p);

  const VecField3 gh = plan.grad(f);
  const Field3 gz = d_z(grid, f, ZBoundary::Generic);
  const double grad_norm = std::sqrt(inner3(grid, gh.x, gh.x) + inner3(grid, gh.y, gh.y) +
                                     inner3(grid, gz, gz));
  Field3 wf = f;
  wf.flat() *= rho.flat().max(0.0).sqrt();
  const double weighted = norm3(grid, wf);
  const double denom = grad_norm + weighted;
  if (denom == 0.0) {
    if (lp == 0.0) return 0.0;
    throw SimError(ErrorKind::Config, "zero denominator in embedding check");
  }
  return lp / denom;
}

}  // namespace cpesim

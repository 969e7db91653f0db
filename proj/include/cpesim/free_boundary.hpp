#pragma once

#include "cpesim/state.hpp"

namespace cpesim {

/// Degenerate density profile of the sigma-coordinate system:
/// rho = ((gamma-1)/gamma * g * eta * Z)^(1/(gamma-1)); vanishes at the
/// vacuum interface eta = 0 and increases monotonically toward the ground.
Field3 fb_density(const Grid& grid, const Field2& Z, const SimParams& params);

/// Ground pressure P_s = ((gamma-1)/gamma * g * Z)^(gamma/(gamma-1)).
Field2 fb_ground_pressure(const Field2& Z, const SimParams& params);

/// Transformed vertical velocity W recovered from the weighted column
/// integrals of the horizontal velocity; vanishes at eta = 0 and eta = 1.
Field3 fb_recover_W(const SpectralPlan& plan, const Grid& grid, const Field2& Z,
                    const VecField3& v, const SimParams& params);

/// Right-hand side of the interface transport law,
/// dZ/dt = -gamma/(gamma-1) * A . grad_h Z - Z * (eta-weighted div average),
/// where A is the eta^(1/(gamma-1))-weighted vertical average of v.
Field2 fb_interface_rhs(const SpectralPlan& plan, const Grid& grid, const Field2& Z,
                        const VecField3& v, const SimParams& params);

/// One SSP-RK2 step of the inviscid free-boundary system with W diagnosed at
/// every stage. Throws on interface collapse (Z <= 0) or CFL violation.
FbState fb_advance(const SpectralPlan& plan, const Grid& grid, const FbState& state,
                   const SimParams& params, double dt);

/// Column-mass functional, the discrete integral of Z^(gamma/(gamma-1));
/// conserved by the interface law.
double fb_column_mass(const Field2& Z, const SimParams& params);

/// Resamples a field given on the uniform physical grid z in [0, z_top] to
/// the uniform eta grid of the column Z(x,y) (eta = 1 - z/Z), by linear
/// interpolation; points above the interface take the interface value.
Field3 sigma_transform_to_eta(const Grid& grid, const Field3& f_phys, const Field2& Z,
                              double z_top);
Field3 sigma_transform_to_z(const Grid& grid, const Field3& f_eta, const Field2& Z,
                            double z_top);

}  // namespace cpesim

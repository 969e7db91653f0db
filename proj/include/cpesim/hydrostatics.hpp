#pragma once

#include "cpesim/state.hpp"
#include "cpesim/vertical.hpp"

namespace cpesim {

/// Stratified density from the surface variable: xi + g z / 2 with gravity
/// (gamma = 2), sigma^2 without. Throws on negative gravity-regime density.
Field3 reconstruct_density(const Grid& grid, const PrimState& state,
                           const SimParams& params);

/// P = rho^gamma, sign-safe through rho >= 0.
Field3 pressure_from_density(const Field3& rho, double gamma);

struct WRecovery {
  Field3 mass_flux;  // rho*w or sigma*w; total, zero at both ends
  Field3 w;          // NaN where density <= rho_floor
};

/// Gravity-regime vertical velocity: rho*w = -int_0^z [div_h(xi*vtilde)
/// + (g/2)*(z div_h v)~] dz'.
WRecovery recover_w_gravity(const SpectralPlan& plan, const Grid& grid,
                            const PrimState& state, const SimParams& params);

/// Vacuum-regime mass flux: sigma*w = -int_0^z [sigma*(div_h v)~
/// + 2 vtilde . grad_h sigma] dz'. The flux is total; w is partial.
WRecovery recover_w_vacuum(const SpectralPlan& plan, const Grid& grid,
                           const PrimState& state, const SimParams& params);

/// All diagnostic fields for the current regime.
DerivedFields derive_fields(const SpectralPlan& plan, const Grid& grid,
                            const PrimState& state, const SimParams& params);

/// Ratio ||f||_{L^p} / (||grad f||_2 + ||rho^{1/2} f||_2), p in [2,6].
/// Diagnostic for the weighted embedding; throws on a zero denominator with
/// nonzero numerator, returns 0 for f == 0.
double weighted_embedding_check(const SpectralPlan& plan, const Grid& grid,
                                const Field3& f, const Field3& rho, double p);

}  // namespace cpesim

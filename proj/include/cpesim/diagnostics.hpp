#pragma once

#include <vector>

#include "cpesim/state.hpp"

namespace cpesim {

/// Total mass, the discrete integral of the reconstructed density.
double total_mass(const Grid& grid, const PrimState& state, const SimParams& params);

struct EnergyReport {
  double kinetic = 0.0;
  double internal = 0.0;
  double energy = 0.0;            // kinetic + internal
  double dissipation_rate = 0.0;  // mu |grad v|^2 + (mu+lambda) |div_h v|^2
};

/// Physical energy and instantaneous dissipation rate. The vertical part of
/// |grad v|^2 uses the staggered difference form adjoint to the viscous
/// stencil, so the semi-discrete balance closes to the time-integration
/// error.
EnergyReport energy(const SpectralPlan& plan, const Grid& grid, const PrimState& state,
                    const SimParams& params);

/// Residual series r_i = |E_i + int_0^{t_i} D ds - E_0| with trapezoid time
/// integration over the records; empty when fewer than two records.
std::vector<double> energy_balance_residual(const std::vector<DiagnosticsRecord>& records);

double min_density(const Grid& grid, const PrimState& state, const SimParams& params);

struct SobolevProxies {
  double surface_h1 = 0.0;
  double surface_h2 = 0.0;
  double v_h1 = 0.0;
  double v_h2 = 0.0;
};

/// Discrete H1/H2 norms: spectral in the horizontal, difference forms in z.
SobolevProxies sobolev_proxies(const SpectralPlan& plan, const Grid& grid,
                               const PrimState& state);

DiagnosticsRecord diagnostics_record(const SpectralPlan& plan, const Grid& grid,
                                     const PrimState& state, const SimParams& params);

/// Norm series of the continuous-dependence experiments: the exact norm
/// combinations of the stability theorems, one row per step including t = 0.
struct StabilitySeries {
  std::vector<double> time;
  std::vector<double> surface_dist;      // L2 of the surface-variable difference
  std::vector<double> v_dist_weighted_a; // L2 of sqrt(rho_a) (v_a - v_b)
  std::vector<double> v_dist_weighted_b; // L2 of sqrt(rho_b) (v_a - v_b)
  std::vector<double> v_dist;            // plain L2 of v_a - v_b
  std::vector<double> grad_dist_cum;     // sqrt of int_0^t ||grad dv||^2 ds
  double growth_rate = 0.0;              // log-linear fit of the total distance
};

/// Evolves both states side by side for n_steps and records the theorem
/// norms after every step.
StabilitySeries stability_experiment(const SpectralPlan& plan, const Grid& grid,
                                     PrimState state_a, PrimState state_b,
                                     const SimParams& params, int n_steps);

}  // namespace cpesim

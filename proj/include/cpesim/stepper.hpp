#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cpesim/hydrostatics.hpp"
#include "cpesim/state.hpp"

namespace cpesim {

/// Convergence record of one Picard-iterated step. The residual is measured
/// in the discrete iteration norm: L2 of the surface variable, L2 of v, and
/// a dt-weighted L2 of grad v, applied to successive iterate differences.
struct PicardReport {
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
  std::vector<double> contraction_estimates;  // residual ratios per iteration
};

/// Optional manufactured-solution sources injected into the equations.
struct StepForcing {
  std::function<Field2(double)> continuity;     // evaluated at stage times
  std::function<VecField3(double)> momentum;    // evaluated at t + dt/2
};

/// Spatial right-hand side of the vertically averaged continuity equations,
/// exposed for tests and manufactured-solution work. The caller provides the
/// frozen coefficient fields.
Field2 continuity_rhs_gravity(const SpectralPlan& plan, const Field2& xi,
                              const VecField2& vbar, const Field2& divbar,
                              const Field2& zdivbar, double g);
Field2 continuity_rhs_vacuum(const SpectralPlan& plan, const Field2& sigma,
                             const VecField2& vbar, const Field2& divbar);

/// One SSP-RK2 step of the surface-variable transport with the velocity
/// frozen at v_in; the iota-regularization is applied as an exact per-mode
/// implicit factor after the hyperbolic stages. Throws CflError when the
/// advective CFL number exceeds 1/2.
Field2 continuity_step_gravity(const SpectralPlan& plan, const Grid& grid,
                               const Field2& xi, const VecField3& v_in,
                               const SimParams& params, double dt,
                               const std::function<Field2(double)>& forcing = {},
                               double t = 0.0);
Field2 continuity_step_vacuum(const SpectralPlan& plan, const Grid& grid,
                              const Field2& sigma, const VecField3& v_in,
                              const SimParams& params, double dt,
                              const std::function<Field2(double)>& forcing = {},
                              double t = 0.0);

/// Explicit forcing of the linearized momentum equation, assembled from the
/// frozen input state: advection, vertical transport in mass-flux form, and
/// the pressure gradient of the current regime.
VecField3 assemble_forcing(const SpectralPlan& plan, const Grid& grid,
                           const PrimState& frozen, const SimParams& params);

/// Regime lift of the mass matrix: vacuum entries below the floor are raised
/// to it; the gravity regime rejects nonpositive density instead.
Field3 lifted_mass(const SimParams& params, const Field3& rho);

/// Crank-Nicolson solve of rho dv/dt = mu lap_h v + mu d_zz v
/// + (mu+lambda) grad_h div_h v + forcing, with the Neumann condition built
/// into the boundary rows of the vertical stencil. The mass matrix is the
/// lifted pointwise density; when it is horizontally uniform the
/// per-wavenumber banded systems are solved directly, otherwise they
/// precondition a deterministic BiCGstab on the full operator.
VecField3 momentum_solve(const SpectralPlan& plan, const Grid& grid,
                         const Field3& rho_mass, const VecField3& forcing,
                         const VecField3& v_n, const SimParams& params, double dt,
                         const VecField3* initial_guess = nullptr);

/// Krylov iteration count of the most recent momentum solve on this thread
/// (0 for the direct path); solver telemetry.
int last_momentum_iterations();

/// Applies the CN left-hand operator (mass/dt - L/2 on interior levels,
/// Neumann rows at the ends). Shared by the fast solver, the Krylov loop and
/// the dense verification oracle.
VecField3 apply_cn_operator(const SpectralPlan& plan, const Grid& grid,
                            const Field3& rho_mass, const SimParams& params,
                            double dt, const VecField3& v);

/// CN right-hand side for a step from v_n with the given forcing.
VecField3 cn_rhs(const SpectralPlan& plan, const Grid& grid, const Field3& rho_mass,
                 const SimParams& params, double dt, const VecField3& v_n,
                 const VecField3& forcing);

/// Iteration norm used for the Picard stopping test.
double picard_norm(const SpectralPlan& plan, const Grid& grid, const Field2& ds,
                   const VecField3& dv, double dt);

/// One time step of the reformulated system by Picard iteration over the
/// linearized equations; coefficients are frozen at the midpoint average of
/// the previous time level and the current iterate.
PicardReport picard_advance(const SpectralPlan& plan, const Grid& grid,
                            PrimState& state, const SimParams& params,
                            const StepForcing* mms = nullptr);

using DiagnosticsSink = std::function<void(const DiagnosticsRecord&)>;

/// Advances n_steps, emitting one diagnostics record per step.
PrimState run(const SpectralPlan& plan, const Grid& grid, PrimState state,
              const SimParams& params, int n_steps, const DiagnosticsSink& sink = {},
              const StepForcing* mms = nullptr);

}  // namespace cpesim

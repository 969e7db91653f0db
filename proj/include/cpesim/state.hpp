#pragma once

#include <limits>

#include "cpesim/field.hpp"
#include "cpesim/grid.hpp"
#include "cpesim/params.hpp"
#include "cpesim/spectral.hpp"

namespace cpesim {

/// Prognostic state of the channel regimes: the z-independent surface
/// variable (xi with gravity, sigma without) stored as a 2D field, and the
/// horizontal velocity on the 3D grid. Single writer; immutable between
/// steps for any number of readers.
struct PrimState {
  Field2 surface_var;
  VecField3 v;
  double time = 0.0;
};

/// Diagnostic fields reconstructed from a PrimState. w is set to NaN where
/// the density does not exceed the floor; the mass flux is total.
struct DerivedFields {
  Field3 rho;
  Field3 pressure;
  Field3 mass_flux_w;  // rho*w (gravity) or sigma*w (vacuum)
  Field3 w;
};

struct DiagnosticsRecord {
  double time = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double dissipation_rate = 0.0;
  double min_density = 0.0;
  double l2_surface = 0.0;
  double l2_velocity = 0.0;
  int picard_iters = 0;
};

/// Free-boundary prognostics: interface height Z > 0 (eta-independent, so 2D)
/// and the horizontal velocity on the (x, y, eta) grid; eta = 0 is the upper
/// vacuum interface and eta = 1 the ground.
struct FbState {
  Field2 Z;
  VecField3 v;
  double time = 0.0;
};

/// Compatibility residuals of the initial data; report-only.
struct CompatibilityReport {
  double residual_l2 = 0.0;       // L2 norm of V1 (gravity) or h1 (vacuum)
  double boundary_residual = 0.0; // max one-sided |d_z v| at z = 0, 1
};

/// Validates shapes and regime constraints, applies the discrete Neumann
/// projection to the vertical ends of v, and returns the state at time 0.
PrimState make_state(const Grid& grid, const SimParams& params,
                     const Field2& init_surface, const VecField3& init_v);

FbState make_fb_state(const Grid& grid, const SimParams& params, const Field2& init_z,
                      const VecField3& init_v);

/// Sets the two boundary levels so the one-sided second-order derivative
/// vanishes there; interior levels are untouched.
void project_neumann(VecField3& v);

CompatibilityReport check_compatibility(const SpectralPlan& plan, const Grid& grid,
                                        const PrimState& state, const SimParams& params);

}  // namespace cpesim

#pragma once

#include "cpesim/field.hpp"
#include "cpesim/grid.hpp"

namespace cpesim {

/// Boundary treatment for vertical stencils. Velocity-type fields carry the
/// Neumann condition d_z v = 0 at z = 0,1 and use even-reflection ghosts;
/// generic fields use one-sided second-order stencils.
enum class ZBoundary { Velocity, Generic };

/// Second-order first derivative in z.
Field3 d_z(const Grid& grid, const Field3& f, ZBoundary mode);

/// Second-order second derivative in z. Interior is centered; ends use the
/// even-reflection ghost (Velocity) or a one-sided stencil (Generic; needs
/// nz >= 4 for second order, falls back to first order at nz = 3).
Field3 d_zz(const Grid& grid, const Field3& f, ZBoundary mode);

/// Vertical trapezoid average over [0,1].
Field2 vavg(const Grid& grid, const Field3& f);

/// Fluctuation about the vertical average, f - vavg(f).
Field3 vfluct(const Grid& grid, const Field3& f);

/// Cumulative trapezoid integral from 0 to z_k; shares the quadrature with
/// vavg so that vint(f) at z = 1 equals vavg(f) bit-for-bit.
Field3 vint(const Grid& grid, const Field3& f);

/// Trapezoid average of z^p-weighted integrand, int_0^1 z^p f dz.
Field2 vavg_weighted(const Grid& grid, const Field3& f, double p);

/// Cumulative trapezoid integral of the z^p-weighted integrand.
Field3 vint_weighted(const Grid& grid, const Field3& f, double p);

/// Broadcast a horizontal field over all levels.
Field3 broadcast(const Grid& grid, const Field2& f);

/// Horizontal-plane L2 inner product of 3D fields with vertical trapezoid
/// weights: the discrete integral over the full domain.
double inner3(const Grid& grid, const Field3& a, const Field3& b);
double norm3(const Grid& grid, const Field3& a);
double inner3(const Grid& grid, const VecField3& a, const VecField3& b);
double norm3(const Grid& grid, const VecField3& a);
double norm2(const Field2& a);

/// Dirichlet form of the vertical Laplacian: sum over cells of (df)^2 / hz,
/// horizontally averaged. This is the discrete integral of |d_z f|^2 that is
/// exactly adjoint to the even-reflection d_zz stencil.
double vertical_dirichlet_form(const Grid& grid, const Field3& f);

}  // namespace cpesim

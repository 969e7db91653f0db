#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "cpesim/state.hpp"
#include "cpesim/stepper.hpp"

namespace cpesim {

/// Separable trigonometric atom
///   coeff * Tx(2 pi kx x) * Ty(2 pi ky y) * z^pz * Tz(pi mz z) * Tt(wt t),
/// each T either cos or sin. Closed under products, derivatives and vertical
/// integration, which keeps the manufactured-solution machinery exact.
struct TrigAtom {
  double coeff = 0.0;
  int kx = 0; bool sin_x = false;
  int ky = 0; bool sin_y = false;
  int pz = 0; int mz = 0; bool sin_z = false;
  double wt = 0.0; bool sin_t = false;
};

/// Finite sum of atoms with exact symbolic calculus.
class SymField {
 public:
  SymField() = default;
  static SymField constant(double c);
  /// c * trig(2 pi k u) factors along each direction; zero frequency with
  /// sin collapses to zero.
  static SymField atom(const TrigAtom& a);

  SymField operator+(const SymField& o) const;
  SymField operator-(const SymField& o) const;
  SymField operator*(const SymField& o) const;
  SymField scaled(double s) const;

  SymField dx() const;
  SymField dy() const;
  SymField dz() const;
  SymField dt() const;

  /// Exact vertical average over [0,1]; result is z-independent.
  SymField vavg() const;
  /// Exact cumulative vertical integral from 0 to z.
  SymField vint() const;
  /// Fluctuation about the vertical average.
  SymField vtilde() const { return *this - vavg(); }

  double eval(double x, double y, double z, double t) const;
  Field3 eval_grid(const Grid& grid, double t) const;
  Field2 eval_surface(const Grid& grid, double t) const;  // at z = 0

  size_t term_count() const { return atoms_.size(); }
  const std::vector<TrigAtom>& atoms() const { return atoms_; }

 private:
  void merge();
  std::vector<TrigAtom> atoms_;
};

/// Manufactured solution of the reformulated systems: the surface variable
/// (xi or sigma) must be z-independent, the velocity Neumann-compatible.
struct MmsSpec {
  SymField surface;
  SymField vx, vy;
};

/// Symbolic residual forcings obtained by pushing the spec through the exact
/// PDE operators of the current regime.
struct MmsSymbolic {
  SymField continuity;
  SymField momentum_x, momentum_y;
};

MmsSymbolic mms_residual(const MmsSpec& spec, const SimParams& params);

/// Grid evaluators packaged for the stepper. Throws when the spec violates
/// the vertical boundary conditions.
StepForcing make_mms_source(const Grid& grid, const MmsSpec& spec,
                            const SimParams& params);

/// Checks d_z v = 0 at z = 0,1 for the spec velocity.
void check_mms_boundary(const MmsSpec& spec);

struct ConvergenceReport {
  std::vector<double> orders;  // pairwise log-ratio slopes
  double min_order = 0.0;
  bool monotone = false;
  bool exact = false;  // all errors at roundoff; order meaningless
};

/// Observed order from errors at a ladder of resolutions h (or dt); flags
/// non-monotone sequences.
ConvergenceReport convergence_order(const std::vector<double>& scales,
                                    const std::vector<double>& errors);

/// Dense LU reference for the momentum solver: assembles the full CN
/// operator by applying it to unit vectors and solves directly. Small grids
/// only (nx*ny*nz <= 4096).
VecField3 dense_momentum_solve(const SpectralPlan& plan, const Grid& grid,
                               const Field3& rho, const VecField3& forcing,
                               const VecField3& v_n, const SimParams& params,
                               double dt);

}  // namespace cpesim

#include "cpesim/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <sstream>

#include "cpesim/banded.hpp"
#include "cpesim/diagnostics.hpp"
#include "cpesim/vertical.hpp"

namespace cpesim {

namespace {

constexpr double kCflLimit = 0.5;
constexpr double kKrylovTol = 5e-14;
constexpr int kKrylovMaxIter = 400;

double hmax_abs(const Field2& f) { return f.abs().maxCoeff(); }

void check_cfl(const Grid& grid, const VecField2& vbar, double dt) {
  const double cx = hmax_abs(vbar.x) * dt * grid.nx;
  const double cy = hmax_abs(vbar.y) * dt * grid.ny;
  const double c = std::max(cx, cy);
  if (c > kCflLimit) {
    std::ostringstream msg;
    const double suggested = 0.9 * kCflLimit * dt / c;
    msg << "CFL violation: advective number " << c << " > " << kCflLimit
        << "; suggested dt <= " << suggested;
    throw CflError(msg.str(), suggested);
  }
}

struct FrozenCoeffs {
  VecField2 vbar;
  Field2 divbar;
  Field2 zdivbar;
};

FrozenCoeffs freeze_coeffs(const SpectralPlan& plan, const Grid& grid,
                           const VecField3& v_in) {
  FrozenCoeffs c;
  c.vbar = {vavg(grid, v_in.x), vavg(grid, v_in.y)};
  Field3 div3 = plan.div(v_in);
  c.divbar = vavg(grid, div3);
  for (int k = 0; k < grid.nz; ++k) div3.level(k) *= grid.z(k);
  c.zdivbar = vavg(grid, div3);
  return c;
}

Field2 apply_iota(const SpectralPlan& plan, const Field2& f, double iota, double dt) {
  Spec s = plan.to_spectral(f);
  for (int j = 0; j < plan.ny(); ++j)
    for (int i = 0; i < plan.nxh(); ++i) {
      const double k2 = plan.kx()[i] * plan.kx()[i] + plan.ky()[j] * plan.ky()[j];
      s(j, i) /= 1.0 + iota * k2 * dt;
    }
  return plan.from_spectral(s);
}

/// Full viscous operator mu lap_h + (mu+lambda) grad div + mu d_zz with the
/// Neumann condition encoded by even-reflection ghosts at the vertical ends.
/// This stencil is exactly self-adjoint under the trapezoid weights, which
/// closes the discrete energy balance of the CN step.
VecField3 apply_viscous(const SpectralPlan& plan, const Grid& grid, double mu,
                        double lambda, const VecField3& v) {
  VecField3 out = plan.viscous_h(v, mu, lambda);
  const double h2 = grid.hz * grid.hz;
  const int nz = grid.nz;
  for (int k = 1; k + 1 < nz; ++k) {
    out.x.level(k) += mu * (v.x.level(k + 1) - 2.0 * v.x.level(k) + v.x.level(k - 1)) / h2;
    out.y.level(k) += mu * (v.y.level(k + 1) - 2.0 * v.y.level(k) + v.y.level(k - 1)) / h2;
  }
  out.x.level(0) += mu * 2.0 * (v.x.level(1) - v.x.level(0)) / h2;
  out.y.level(0) += mu * 2.0 * (v.y.level(1) - v.y.level(0)) / h2;
  out.x.level(nz - 1) += mu * 2.0 * (v.x.level(nz - 2) - v.x.level(nz - 1)) / h2;
  out.y.level(nz - 1) += mu * 2.0 * (v.y.level(nz - 2) - v.y.level(nz - 1)) / h2;
  return out;
}

/// Banded factorizations of the per-wavenumber CN systems with the
/// horizontally uniform mass profile mbar(z). Unknowns interleave the two
/// velocity components level by level; all factorizations live in one flat
/// buffer and the solve walks spectral rows for cache locality.
class PerModeSolver {
 public:
  PerModeSolver(const SpectralPlan& plan, const Grid& grid, const Eigen::ArrayXd& mbar,
                double mu, double lambda, double dt)
      : grid_(grid), n_(2 * grid.nz),
        rows_(2 * kBand + kBand + 1),
        ab_(Eigen::MatrixXd::Zero(rows_, static_cast<Eigen::Index>(n_) * plan.ny() * plan.nxh())),
        piv_(Eigen::VectorXi::Zero(static_cast<Eigen::Index>(n_) * plan.ny() * plan.nxh())) {
    const int nz = grid.nz;
    const double h2 = grid.hz * grid.hz;
    const int cx = plan.nx() / 2, cy = plan.ny() / 2;
    const int nxh = plan.nxh();
    parallel_for(0, plan.ny(), [&](std::ptrdiff_t jb, std::ptrdiff_t je) {
      for (std::ptrdiff_t j = jb; j < je; ++j) {
        const int my = j <= cy ? static_cast<int>(j) : static_cast<int>(j) - plan.ny();
        for (int i = 0; i < nxh; ++i) {
          const double kx = plan.kx()[i];
          const double ky = plan.ky()[j];
          const double kk = kx * kx + ky * ky;
          // the grad-div block follows the derivative mask (Nyquist annihilated)
          const bool deriv_ok = i < cx && std::abs(my) < cy;
          const double kxd = deriv_ok ? kx : 0.0;
          const double kyd = deriv_ok ? ky : 0.0;
          const Eigen::Index base = (j * nxh + i) * n_;
          auto at = [&](int r, int c) -> double& {
            return ab_(kBand + kBand + r - c, base + c);
          };
          for (int k = 0; k < nz; ++k) {
            const int rx = 2 * k, ry = 2 * k + 1;
            // even-reflection stencil: boundary rows couple the first
            // interior level with twice the interior weight
            const double vert_off = (k == 0 || k == nz - 1) ? -mu / h2 : -0.5 * mu / h2;
            const double diag_common = mbar[k] / dt + 0.5 * mu * kk + mu / h2;
            at(rx, rx) = diag_common + 0.5 * (mu + lambda) * kxd * kxd;
            at(ry, ry) = diag_common + 0.5 * (mu + lambda) * kyd * kyd;
            at(rx, ry) = 0.5 * (mu + lambda) * kxd * kyd;
            at(ry, rx) = 0.5 * (mu + lambda) * kxd * kyd;
            if (k > 0) {
              at(rx, rx - 2) = k == nz - 1 ? vert_off : -0.5 * mu / h2;
              at(ry, ry - 2) = k == nz - 1 ? vert_off : -0.5 * mu / h2;
            }
            if (k < nz - 1) {
              at(rx, rx + 2) = k == 0 ? vert_off : -0.5 * mu / h2;
              at(ry, ry + 2) = k == 0 ? vert_off : -0.5 * mu / h2;
            }
          }
          if (!factor(base))
            throw SimError(ErrorKind::SingularSystem,
                           "singular implicit momentum system (mu, mu+lambda and "
                           "the mass profile all vanish)");
        }
      }
    });
  }

  /// Solves A v = rhs for all wavenumbers; rhs and result in physical space.
  VecField3 solve(const SpectralPlan& plan, const VecField3& rhs) const {
    const int nz = grid_.nz;
    const int nxh = plan.nxh();
    std::vector<Spec> sx(nz), sy(nz);
    for (int k = 0; k < nz; ++k) {
      sx[k] = plan.to_spectral(Field2(rhs.x.level(k)));
      sy[k] = plan.to_spectral(Field2(rhs.y.level(k)));
    }
    parallel_for(0, plan.ny(), [&](std::ptrdiff_t jb, std::ptrdiff_t je) {
      Eigen::VectorXd re(n_), im(n_);
      // row-blocked: one contiguous copy per level keeps the per-mode
      // gathers inside an L1-resident buffer
      Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic> block(nxh, n_);
      for (std::ptrdiff_t j = jb; j < je; ++j) {
        for (int k = 0; k < nz; ++k) {
          block.col(2 * k) = sx[k].row(j).transpose();
          block.col(2 * k + 1) = sy[k].row(j).transpose();
        }
        for (int i = 0; i < nxh; ++i) {
          const Eigen::Index base = (j * nxh + i) * n_;
          for (int c = 0; c < n_; ++c) {
            re[c] = block(i, c).real();
            im[c] = block(i, c).imag();
          }
          back_solve(base, re, im);
          for (int c = 0; c < n_; ++c) block(i, c) = {re[c], im[c]};
        }
        for (int k = 0; k < nz; ++k) {
          sx[k].row(j) = block.col(2 * k).transpose();
          sy[k].row(j) = block.col(2 * k + 1).transpose();
        }
      }
    });
    VecField3 out(grid_.nx, grid_.ny, grid_.nz);
    for (int k = 0; k < nz; ++k) {
      out.x.level(k) = plan.from_spectral(sx[k]);
      out.y.level(k) = plan.from_spectral(sy[k]);
    }
    return out;
  }

 private:
  static constexpr int kBand = 2;

  bool factor(Eigen::Index base) {
    const int band = 2 * kBand;
    for (int col = 0; col < n_; ++col) {
      int pivot_row = col;
      double pivot_mag = std::abs(ab_(band, base + col));
      const int last_row = std::min(col + kBand, n_ - 1);
      for (int r = col + 1; r <= last_row; ++r) {
        const double mag = std::abs(ab_(band + r - col, base + col));
        if (mag > pivot_mag) {
          pivot_mag = mag;
          pivot_row = r;
        }
      }
      if (pivot_mag == 0.0) return false;
      piv_[base + col] = pivot_row;
      const int last_col = std::min(n_ - 1, col + band);
      if (pivot_row != col)
        for (int j = col; j <= last_col; ++j)
          std::swap(ab_(band + col - j, base + j), ab_(band + pivot_row - j, base + j));
      const double pivot = ab_(band, base + col);
      for (int r = col + 1; r <= last_row; ++r) {
        const double m = ab_(band + r - col, base + col) / pivot;
        ab_(band + r - col, base + col) = m;
        for (int j = col + 1; j <= last_col; ++j)
          ab_(band + r - j, base + j) -= m * ab_(band + col - j, base + j);
      }
    }
    return true;
  }

  void back_solve(Eigen::Index base, Eigen::VectorXd& b, Eigen::VectorXd& c) const {
    const int band = 2 * kBand;
    for (int col = 0; col < n_; ++col) {
      const int pr = piv_[base + col];
      if (pr != col) {
        std::swap(b[col], b[pr]);
        std::swap(c[col], c[pr]);
      }
      const int last_row = std::min(col + kBand, n_ - 1);
      for (int r = col + 1; r <= last_row; ++r) {
        const double m = ab_(band + r - col, base + col);
        b[r] -= m * b[col];
        c[r] -= m * c[col];
      }
    }
    for (int row = n_ - 1; row >= 0; --row) {
      const int last_col = std::min(row + band, n_ - 1);
      double accb = b[row], accc = c[row];
      for (int j = row + 1; j <= last_col; ++j) {
        const double m = ab_(band + row - j, base + j);
        accb -= m * b[j];
        accc -= m * c[j];
      }
      const double d = ab_(band, base + row);
      b[row] = accb / d;
      c[row] = accc / d;
    }
  }

  Grid grid_;
  int n_;
  int rows_;
  Eigen::MatrixXd ab_;   // band storage, one block of n_ columns per mode
  Eigen::VectorXi piv_;
};

double dot_flat(const VecField3& a, const VecField3& b) {
  return pairwise_dot(a.x.flat().data(), b.x.flat().data(), a.x.size()) +
         pairwise_dot(a.y.flat().data(), b.y.flat().data(), a.y.size());
}

double norm_flat(const VecField3& a) { return std::sqrt(dot_flat(a, a)); }

thread_local int g_last_momentum_iters = 0;

// The per-mode factorizations depend only on the grid, the viscosity pair,
// dt and the horizontal-mean mass profile; the latter is conserved along a
// run, so one factorization usually serves every step.
struct SolverCache {
  const SpectralPlan* plan = nullptr;
  int nx = 0, ny = 0, nz = 0;
  double mu = 0.0, lambda = 0.0, dt = 0.0;
  Eigen::ArrayXd mbar;
  std::unique_ptr<PerModeSolver> solver;
};

thread_local SolverCache g_solver_cache;

const PerModeSolver& cached_solver(const SpectralPlan& plan, const Grid& grid,
                                   const Eigen::ArrayXd& mbar, double mu,
                                   double lambda, double dt) {
  SolverCache& c = g_solver_cache;
  const bool hit = c.solver && c.plan == &plan && c.nx == grid.nx && c.ny == grid.ny &&
                   c.nz == grid.nz && c.mu == mu && c.lambda == lambda && c.dt == dt &&
                   c.mbar.size() == mbar.size() && (c.mbar == mbar).all();
  if (!hit) {
    c.plan = &plan;
    c.nx = grid.nx; c.ny = grid.ny; c.nz = grid.nz;
    c.mu = mu; c.lambda = lambda; c.dt = dt;
    c.mbar = mbar;
    c.solver = std::make_unique<PerModeSolver>(plan, grid, mbar, mu, lambda, dt);
  }
  return *c.solver;
}

}  // namespace

int last_momentum_iterations() { return g_last_momentum_iters; }

Field2 continuity_rhs_gravity(const SpectralPlan& plan, const Field2& xi,
                              const VecField2& vbar, const Field2& divbar,
                              const Field2& zdivbar, double g) {
  const VecField2 gxi = plan.grad(xi);
  Field2 products = (vbar.x * gxi.x + vbar.y * gxi.y + xi * divbar).eval();
  return (-plan.dealias(products) - 0.5 * g * zdivbar).eval();
}

Field2 continuity_rhs_vacuum(const SpectralPlan& plan, const Field2& sigma,
                             const VecField2& vbar, const Field2& divbar) {
  const VecField2 gs = plan.grad(sigma);
  Field2 products = (vbar.x * gs.x + vbar.y * gs.y + 0.5 * sigma * divbar).eval();
  return (-plan.dealias(products)).eval();
}

namespace {

template <typename Rhs>
Field2 ssprk2_surface(const SpectralPlan& plan, const Grid& grid, const Field2& s0,
                      const SimParams& params, double dt, const Rhs& rhs,
                      const std::function<Field2(double)>& forcing, double t) {
  Field2 r0 = rhs(s0);
  if (forcing) r0 += forcing(t);
  const Field2 s1 = (s0 + dt * r0).eval();
  Field2 r1 = rhs(s1);
  if (forcing) r1 += forcing(t + dt);
  Field2 out = (s0 + 0.5 * dt * (r0 + r1)).eval();
  if (params.iota > 0.0) out = apply_iota(plan, out, params.iota, dt);
  return out;
}

}  // namespace

Field2 continuity_step_gravity(const SpectralPlan& plan, const Grid& grid,
                               const Field2& xi, const VecField3& v_in,
                               const SimParams& params, double dt,
                               const std::function<Field2(double)>& forcing, double t) {
  const FrozenCoeffs c = freeze_coeffs(plan, grid, v_in);
  check_cfl(grid, c.vbar, dt);
  return ssprk2_surface(plan, grid, xi, params, dt,
                        [&](const Field2& s) {
                          return continuity_rhs_gravity(plan, s, c.vbar, c.divbar,
                                                        c.zdivbar, params.g);
                        },
                        forcing, t);
}

Field2 continuity_step_vacuum(const SpectralPlan& plan, const Grid& grid,
                              const Field2& sigma, const VecField3& v_in,
                              const SimParams& params, double dt,
                              const std::function<Field2(double)>& forcing, double t) {
  const FrozenCoeffs c = freeze_coeffs(plan, grid, v_in);
  check_cfl(grid, c.vbar, dt);
  return ssprk2_surface(plan, grid, sigma, params, dt,
                        [&](const Field2& s) {
                          return continuity_rhs_vacuum(plan, s, c.vbar, c.divbar);
                        },
                        forcing, t);
}

VecField3 assemble_forcing(const SpectralPlan& plan, const Grid& grid,
                           const PrimState& frozen, const SimParams& params) {
  const Field3 rho = reconstruct_density(grid, frozen, params);
  const VecField3& v = frozen.v;

  // rho (v . grad_h) v
  const VecField3 gvx = plan.grad(v.x);
  const VecField3 gvy = plan.grad(v.y);
  Field3 adv_x = hadamard(rho, hadamard(v.x, gvx.x) + hadamard(v.y, gvx.y));
  Field3 adv_y = hadamard(rho, hadamard(v.x, gvy.x) + hadamard(v.y, gvy.y));

  // vertical transport in mass-flux form
  Field3 flux(grid.nx, grid.ny, grid.nz);
  if (params.regime == Regime::GravityGamma2) {
    flux = recover_w_gravity(plan, grid, frozen, params).mass_flux;
  } else {
    flux = recover_w_vacuum(plan, grid, frozen, params).mass_flux;
    flux.flat() *= broadcast(grid, frozen.surface_var).flat();  // sigma*(sigma w)
  }
  Field3 vert_x = hadamard(flux, d_z(grid, v.x, ZBoundary::Velocity));
  Field3 vert_y = hadamard(flux, d_z(grid, v.y, ZBoundary::Velocity));

  // pressure gradient
  Field3 press_x(grid.nx, grid.ny, grid.nz), press_y(grid.nx, grid.ny, grid.nz);
  if (params.regime == Regime::GravityGamma2) {
    const VecField2 gxi = plan.grad(frozen.surface_var);
    for (int k = 0; k < grid.nz; ++k) {
      const Field2 coeff = (2.0 * frozen.surface_var + params.g * grid.z(k)).eval();
      press_x.level(k) = coeff * gxi.x;
      press_y.level(k) = coeff * gxi.y;
    }
  } else {
    // 2 gamma sigma^(2 gamma - 1) grad sigma, sign-safe through sigma^2
    const Field2 sig = frozen.surface_var;
    Field2 coeff = (2.0 * params.gamma * sig *
                    (sig * sig).max(0.0).pow(params.gamma - 1.0)).eval();
    const VecField2 gs = plan.grad(sig);
    const Field2 px = (coeff * gs.x).eval();
    const Field2 py = (coeff * gs.y).eval();
    for (int k = 0; k < grid.nz; ++k) {
      press_x.level(k) = px;
      press_y.level(k) = py;
    }
  }

  VecField3 out(grid.nx, grid.ny, grid.nz);
  out.x = plan.dealias(adv_x + vert_x + press_x);
  out.y = plan.dealias(adv_y + vert_y + press_y);
  out *= -1.0;
  return out;
}

VecField3 apply_cn_operator(const SpectralPlan& plan, const Grid& grid,
                            const Field3& rho_mass, const SimParams& params,
                            double dt, const VecField3& v) {
  VecField3 out = apply_viscous(plan, grid, params.mu, params.lambda, v);
  out *= -0.5;
  for (int k = 0; k < grid.nz; ++k) {
    out.x.level(k) += rho_mass.level(k) * v.x.level(k) / dt;
    out.y.level(k) += rho_mass.level(k) * v.y.level(k) / dt;
  }
  return out;
}

VecField3 cn_rhs(const SpectralPlan& plan, const Grid& grid, const Field3& rho_mass,
                 const SimParams& params, double dt, const VecField3& v_n,
                 const VecField3& forcing) {
  VecField3 out = apply_viscous(plan, grid, params.mu, params.lambda, v_n);
  out *= 0.5;
  for (int k = 0; k < grid.nz; ++k) {
    out.x.level(k) += rho_mass.level(k) * v_n.x.level(k) / dt + forcing.x.level(k);
    out.y.level(k) += rho_mass.level(k) * v_n.y.level(k) / dt + forcing.y.level(k);
  }
  return out;
}

Field3 lifted_mass(const SimParams& params, const Field3& rho) {
  Field3 mass = rho;
  if (params.regime == Regime::VacuumNoGravity) {
    mass.flat() = mass.flat().max(params.mass_floor());
  } else if (params.regime == Regime::GravityGamma2) {
    if (!(rho.flat().minCoeff() > 0.0))
      throw SimError(ErrorKind::NegativeDensity,
                     "gravity-regime momentum solve requires positive density");
  }
  return mass;
}

VecField3 momentum_solve(const SpectralPlan& plan, const Grid& grid,
                         const Field3& rho_mass, const VecField3& forcing,
                         const VecField3& v_n, const SimParams& params, double dt,
                         const VecField3* initial_guess) {
  const Field3 mass = lifted_mass(params, rho_mass);

  Eigen::ArrayXd mbar(grid.nz);
  double fluct = 0.0;
  for (int k = 0; k < grid.nz; ++k) {
    mbar[k] = SpectralPlan::hmean(Field2(mass.level(k)));
    fluct = std::max(fluct, (mass.level(k) - mbar[k]).abs().maxCoeff());
  }
  const double mscale = std::max(mbar.abs().maxCoeff(), 1e-300);

  const PerModeSolver& solver =
      cached_solver(plan, grid, mbar, params.mu, params.lambda, dt);
  const VecField3 rhs = cn_rhs(plan, grid, mass, params, dt, v_n, forcing);

  VecField3 v;
  g_last_momentum_iters = 0;
  if (fluct <= 1e-13 * mscale) {
    v = solver.solve(plan, rhs);
  } else {
    // Preconditioned BiCGstab on the variable-mass operator; the per-mode
    // factorizations serve as the preconditioner. All reductions are
    // fixed-order, so the iteration is deterministic.
    auto apply = [&](const VecField3& u) {
      return apply_cn_operator(plan, grid, mass, params, dt, u);
    };
    const double bnorm = norm_flat(rhs);
    const double tol = kKrylovTol * std::max(bnorm, 1e-300);
    VecField3 x = initial_guess ? *initial_guess : v_n;
    VecField3 r = rhs - apply(x);
    if (norm_flat(r) > tol) {
      const VecField3 rhat = r;
      VecField3 p = r;
      bool done = false;
      double rho_prev = dot_flat(rhat, r);
      for (int it = 0; it < kKrylovMaxIter && !done; ++it) {
        g_last_momentum_iters = it + 1;
        if (rho_prev == 0.0)
          throw SimError(ErrorKind::SingularSystem, "momentum solver breakdown");
        const VecField3 phat = solver.solve(plan, p);
        const VecField3 av = apply(phat);
        const double denom = dot_flat(rhat, av);
        if (denom == 0.0)
          throw SimError(ErrorKind::SingularSystem, "momentum solver breakdown");
        const double alpha = rho_prev / denom;
        VecField3 s = r - alpha * av;
        if (norm_flat(s) <= tol) {
          x += alpha * phat;
          done = true;
          break;
        }
        const VecField3 shat = solver.solve(plan, s);
        const VecField3 t = apply(shat);
        const double tt = dot_flat(t, t);
        if (tt == 0.0)
          throw SimError(ErrorKind::SingularSystem, "momentum solver breakdown");
        const double omega = dot_flat(t, s) / tt;
        x += alpha * phat + omega * shat;
        r = s - omega * t;
        if (norm_flat(r) <= tol) {
          done = true;
          break;
        }
        const double rho_next = dot_flat(rhat, r);
        const double beta = (rho_next / rho_prev) * (alpha / omega);
        p = r + beta * (p - omega * av);
        rho_prev = rho_next;
      }
      if (!done)
        throw SimError(ErrorKind::SingularSystem,
                       "momentum solver did not reach tolerance");
    }
    v = x;
  }

  const VecField3 resid = rhs - apply_cn_operator(plan, grid, mass, params, dt, v);
  const double rel = norm_flat(resid) / std::max(norm_flat(rhs), 1e-300);
  if (!(rel <= 1e-10))
    throw SimError(ErrorKind::SingularSystem, "momentum solve residual too large");
  return v;
}

double picard_norm(const SpectralPlan& plan, const Grid& grid, const Field2& ds,
                   const VecField3& dv, double dt) {
  Eigen::ArrayXd per_level(grid.nz);
  for (int k = 0; k < grid.nz; ++k)
    per_level[k] = grid.quad_weights[k] * (plan.grad_norm_sq(Field2(dv.x.level(k))) +
                                           plan.grad_norm_sq(Field2(dv.y.level(k))));
  const double grad_sq = pairwise_sum(per_level.data(), per_level.size()) +
                         vertical_dirichlet_form(grid, dv.x) +
                         vertical_dirichlet_form(grid, dv.y);
  const double n2 = norm2(ds);
  const double n3 = norm3(grid, dv);
  return std::sqrt(n2 * n2 + n3 * n3 + dt * grad_sq);
}

PicardReport picard_advance(const SpectralPlan& plan, const Grid& grid,
                            PrimState& state, const SimParams& params,
                            const StepForcing* mms) {
  const double dt = params.dt;
  const PrimState start = state;
  PrimState prev = start;  // iterate 0 seeds with the previous time level
  PicardReport report;

  const bool gravity = params.regime == Regime::GravityGamma2;
  const std::function<Field2(double)> cont_forcing =
      mms && mms->continuity ? mms->continuity : std::function<Field2(double)>{};

  for (int iter = 1; iter <= params.picard_max_iter; ++iter) {
    // frozen input: midpoint average of the previous level and the iterate
    PrimState mid;
    mid.surface_var = (0.5 * (start.surface_var + prev.surface_var)).eval();
    mid.v = 0.5 * (start.v + prev.v);
    mid.time = start.time + 0.5 * dt;

    Field2 s_new = gravity
                       ? continuity_step_gravity(plan, grid, start.surface_var, mid.v,
                                                 params, dt, cont_forcing, start.time)
                       : continuity_step_vacuum(plan, grid, start.surface_var, mid.v,
                                                params, dt, cont_forcing, start.time);

    const Field3 rho_mid = reconstruct_density(grid, mid, params);
    VecField3 forcing = assemble_forcing(plan, grid, mid, params);
    if (mms && mms->momentum) forcing += mms->momentum(start.time + 0.5 * dt);
    // warm-start the Krylov solve from the previous iterate's velocity
    VecField3 v_new = momentum_solve(plan, grid, rho_mid, forcing, start.v, params,
                                     dt, iter > 1 ? &prev.v : nullptr);

    const double diff = picard_norm(plan, grid, (s_new - prev.surface_var).eval(),
                                    v_new - prev.v, dt);
    const double scale = picard_norm(plan, grid, s_new, v_new, dt);
    report.residual_history.push_back(diff);
    if (report.residual_history.size() >= 2) {
      const double prev_res = report.residual_history[report.residual_history.size() - 2];
      if (prev_res > 0.0)
        report.contraction_estimates.push_back(diff / prev_res);
    }
    prev.surface_var = std::move(s_new);
    prev.v = std::move(v_new);
    report.iterations = iter;
    report.final_residual = diff;
    if (diff <= params.picard_tol * std::max(scale, 1e-12)) {
      report.converged = true;
      break;
    }
  }

  if (!report.converged) {
    std::ostringstream msg;
    msg << "Picard iteration did not converge in " << params.picard_max_iter
        << " iterations (last residual "
        << (report.residual_history.empty() ? 0.0 : report.final_residual) << ")";
    throw PicardError(msg.str(), report.residual_history);
  }

  state.surface_var = std::move(prev.surface_var);
  state.v = std::move(prev.v);
  state.time = start.time + dt;
  return report;
}

PrimState run(const SpectralPlan& plan, const Grid& grid, PrimState state,
              const SimParams& params, int n_steps, const DiagnosticsSink& sink,
              const StepForcing* mms) {
  for (int step = 0; step < n_steps; ++step) {
    const PicardReport report = picard_advance(plan, grid, state, params, mms);
    if (sink) {
      DiagnosticsRecord rec = diagnostics_record(plan, grid, state, params);
      rec.picard_iters = report.iterations;
      sink(rec);
    }
  }
  return state;
}

}  // namespace cpesim

#include "cpesim/free_boundary.hpp"

#include <cmath>
#include <sstream>

#include "cpesim/vertical.hpp"

namespace cpesim {

namespace {

constexpr double kCflLimit = 0.5;

void require_positive(const Field2& Z, const char* where) {
  if (!(Z.minCoeff() > 0.0)) {
    std::ostringstream msg;
    msg << "interface collapse: Z <= 0 in " << where;
    throw SimError(ErrorKind::NegativeDensity, msg.str());
  }
}

struct WeightedAverages {
  VecField2 vbar;   // (eta^p v) averaged over eta
  Field2 divbar;    // (eta^p div_h v) averaged over eta
};

WeightedAverages weighted_averages(const SpectralPlan& plan, const Grid& grid,
                                   const VecField3& v, double p) {
  WeightedAverages wa;
  wa.vbar = {vavg_weighted(grid, v.x, p), vavg_weighted(grid, v.y, p)};
  wa.divbar = vavg_weighted(grid, plan.div(v), p);
  return wa;
}

}  // namespace

Field3 fb_density(const Grid& grid, const Field2& Z, const SimParams& params) {
  require_positive(Z, "fb_density");
  const double gamma = params.gamma;
  const double coeff = (gamma - 1.0) / gamma * params.g;
  const double expo = 1.0 / (gamma - 1.0);
  Field3 rho(grid.nx, grid.ny, grid.nz);
  for (int k = 0; k < grid.nz; ++k)
    rho.level(k) = (coeff * grid.z(k) * Z).pow(expo);
  return rho;
}

Field2 fb_ground_pressure(const Field2& Z, const SimParams& params) {
  require_positive(Z, "fb_ground_pressure");
  const double gamma = params.gamma;
  return ((gamma - 1.0) / gamma * params.g * Z).pow(gamma / (gamma - 1.0)).eval();
}

Field3 fb_recover_W(const SpectralPlan& plan, const Grid& grid, const Field2& Z,
                    const VecField3& v, const SimParams& params) {
  require_positive(Z, "fb_recover_W");
  const double gamma = params.gamma;
  const double p = 1.0 / (gamma - 1.0);
  const double a = gamma / (gamma - 1.0);

  const WeightedAverages wa = weighted_averages(plan, grid, v, p);
  const VecField2 gZ = plan.grad(Z);
  const Field2 bracket = plan.dealias(
      (gamma * (wa.vbar.x * gZ.x + wa.vbar.y * gZ.y) + (gamma - 1.0) * wa.divbar * Z)
          .eval());

  const Field3 cum_x = vint_weighted(grid, v.x, p);
  const Field3 cum_y = vint_weighted(grid, v.y, p);
  const Field3 cum_div = vint_weighted(grid, plan.div(v), p);

  Field3 w(grid.nx, grid.ny, grid.nz);
  w.level(0).setZero();  // limit value at the vacuum interface
  for (int k = 1; k < grid.nz; ++k) {
    const double eta = grid.z(k);
    const Field2 numerator = plan.dealias(
        (std::pow(eta, a) * bracket - gamma * (cum_x.level(k) * gZ.x + cum_y.level(k) * gZ.y) -
         (gamma - 1.0) * Z * cum_div.level(k))
            .eval());
    w.level(k) = numerator / ((gamma - 1.0) * std::pow(eta, p) * Z);
  }
  return w;
}

Field2 fb_interface_rhs(const SpectralPlan& plan, const Grid& grid, const Field2& Z,
                        const VecField3& v, const SimParams& params) {
  require_positive(Z, "fb_interface_rhs");
  const double gamma = params.gamma;
  const double p = 1.0 / (gamma - 1.0);
  const WeightedAverages wa = weighted_averages(plan, grid, v, p);
  const VecField2 gZ = plan.grad(Z);
  const Field2 rhs = (gamma / (gamma - 1.0) * (wa.vbar.x * gZ.x + wa.vbar.y * gZ.y) +
                      Z * wa.divbar).eval();
  return (-plan.dealias(rhs)).eval();
}

namespace {

struct FbRates {
  Field2 z_dot;
  VecField3 v_dot;
};

FbRates fb_rates(const SpectralPlan& plan, const Grid& grid, const Field2& Z,
                 const VecField3& v, const SimParams& params, double dt) {
  // CFL guard on the horizontal advection speeds and the transformed
  // vertical velocity
  const Field3 w = fb_recover_W(plan, grid, Z, v, params);
  const double cx = v.x.flat().abs().maxCoeff() * dt * grid.nx;
  const double cy = v.y.flat().abs().maxCoeff() * dt * grid.ny;
  const double ceta = w.flat().abs().maxCoeff() * dt / grid.hz;
  const double c = std::max({cx, cy, ceta});
  if (c > kCflLimit) {
    const double suggested = 0.9 * kCflLimit * dt / c;
    std::ostringstream msg;
    msg << "CFL violation in free-boundary step: advective number " << c
        << "; suggested dt <= " << suggested;
    throw CflError(msg.str(), suggested);
  }

  FbRates rates;
  rates.z_dot = fb_interface_rhs(plan, grid, Z, v, params);

  const VecField2 gZ = plan.grad(Z);
  const VecField3 gvx = plan.grad(v.x);
  const VecField3 gvy = plan.grad(v.y);
  const Field3 dvx = d_z(grid, v.x, ZBoundary::Generic);
  const Field3 dvy = d_z(grid, v.y, ZBoundary::Generic);

  rates.v_dot = VecField3(grid.nx, grid.ny, grid.nz);
  rates.v_dot.x = plan.dealias(hadamard(v.x, gvx.x) + hadamard(v.y, gvx.y) +
                               hadamard(w, dvx));
  rates.v_dot.y = plan.dealias(hadamard(v.x, gvy.x) + hadamard(v.y, gvy.y) +
                               hadamard(w, dvy));
  rates.v_dot *= -1.0;
  for (int k = 0; k < grid.nz; ++k) {
    rates.v_dot.x.level(k) -= params.g * gZ.x;
    rates.v_dot.y.level(k) -= params.g * gZ.y;
  }
  return rates;
}

}  // namespace

FbState fb_advance(const SpectralPlan& plan, const Grid& grid, const FbState& state,
                   const SimParams& params, double dt) {
  const FbRates r0 = fb_rates(plan, grid, state.Z, state.v, params, dt);
  Field2 z1 = (state.Z + dt * r0.z_dot).eval();
  VecField3 v1 = state.v + dt * r0.v_dot;
  require_positive(z1, "fb_advance stage");

  const FbRates r1 = fb_rates(plan, grid, z1, v1, params, dt);
  FbState out;
  out.Z = (state.Z + 0.5 * dt * (r0.z_dot + r1.z_dot)).eval();
  out.v = state.v + 0.5 * dt * (r0.v_dot + r1.v_dot);
  require_positive(out.Z, "fb_advance");
  out.time = state.time + dt;
  return out;
}

double fb_column_mass(const Field2& Z, const SimParams& params) {
  const double a = params.gamma / (params.gamma - 1.0);
  return pairwise_sum(Z.pow(a).eval()) / static_cast<double>(Z.size());
}

Field3 sigma_transform_to_eta(const Grid& grid, const Field3& f_phys, const Field2& Z,
                              double z_top) {
  require_positive(Z, "sigma_transform");
  Field3 out(grid.nx, grid.ny, grid.nz);
  const double dz_phys = z_top / (grid.nz - 1);
  for (int k = 0; k < grid.nz; ++k) {
    const double eta = grid.z(k);
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const double z = Z(j, i) * (1.0 - eta);
        const double pos = std::min(z / dz_phys, static_cast<double>(grid.nz - 1));
        const int k0 = static_cast<int>(pos);
        const int k1 = std::min(k0 + 1, grid.nz - 1);
        const double frac = pos - k0;
        out(i, j, k) = (1.0 - frac) * f_phys(i, j, k0) + frac * f_phys(i, j, k1);
      }
  }
  return out;
}

Field3 sigma_transform_to_z(const Grid& grid, const Field3& f_eta, const Field2& Z,
                            double z_top) {
  require_positive(Z, "sigma_transform");
  Field3 out(grid.nx, grid.ny, grid.nz);
  const double dz_phys = z_top / (grid.nz - 1);
  for (int k = 0; k < grid.nz; ++k) {
    const double z = k * dz_phys;
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        const double eta = std::max(0.0, std::min(1.0, 1.0 - z / Z(j, i)));
        const double pos = eta / grid.hz;
        const int k0 = std::min(static_cast<int>(pos), grid.nz - 1);
        const int k1 = std::min(k0 + 1, grid.nz - 1);
        const double frac = pos - k0;
        out(i, j, k) = (1.0 - frac) * f_eta(i, j, k0) + frac * f_eta(i, j, k1);
      }
  }
  return out;
}

}  // namespace cpesim

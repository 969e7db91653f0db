#include "cpesim/diagnostics.hpp"

#include <cmath>

#include "cpesim/hydrostatics.hpp"
#include "cpesim/stepper.hpp"
#include "cpesim/vertical.hpp"

namespace cpesim {

double total_mass(const Grid& grid, const PrimState& state, const SimParams& params) {
  const Field3 rho = reconstruct_density(grid, state, params);
  Eigen::ArrayXd per_level(grid.nz);
  for (int k = 0; k < grid.nz; ++k)
    per_level[k] = grid.quad_weights[k] * SpectralPlan::hmean(Field2(rho.level(k)));
  return pairwise_sum(per_level.data(), per_level.size());
}

EnergyReport energy(const SpectralPlan& plan, const Grid& grid, const PrimState& state,
                    const SimParams& params) {
  const Field3 rho = reconstruct_density(grid, state, params);
  EnergyReport rep;
  rep.kinetic = 0.5 * (inner3(grid, hadamard(rho, state.v.x), state.v.x) +
                       inner3(grid, hadamard(rho, state.v.y), state.v.y));
  const Field3 pressure = pressure_from_density(rho, params.gamma);
  Eigen::ArrayXd per_level(grid.nz);
  for (int k = 0; k < grid.nz; ++k)
    per_level[k] = grid.quad_weights[k] * SpectralPlan::hmean(Field2(pressure.level(k)));
  rep.internal = pairwise_sum(per_level.data(), per_level.size()) / (params.gamma - 1.0);
  rep.energy = rep.kinetic + rep.internal;

  const VecField3 gx = plan.grad(state.v.x);
  const VecField3 gy = plan.grad(state.v.y);
  const double grad_h_sq = inner3(grid, gx.x, gx.x) + inner3(grid, gx.y, gx.y) +
                           inner3(grid, gy.x, gy.x) + inner3(grid, gy.y, gy.y);
  const double grad_z_sq = vertical_dirichlet_form(grid, state.v.x) +
                           vertical_dirichlet_form(grid, state.v.y);
  const Field3 divv = plan.div(state.v);
  rep.dissipation_rate = params.mu * (grad_h_sq + grad_z_sq) +
                         (params.mu + params.lambda) * inner3(grid, divv, divv);
  return rep;
}

std::vector<double> energy_balance_residual(const std::vector<DiagnosticsRecord>& records) {
  std::vector<double> out;
  if (records.size() < 2) return out;
  double dissipated = 0.0;
  const double e0 = records.front().energy;
  for (size_t i = 1; i < records.size(); ++i) {
    const double dt = records[i].time - records[i - 1].time;
    dissipated += 0.5 * dt * (records[i].dissipation_rate + records[i - 1].dissipation_rate);
    out.push_back(std::abs(records[i].energy + dissipated - e0));
  }
  return out;
}

double min_density(const Grid& grid, const PrimState& state, const SimParams& params) {
  const Field3 rho = reconstruct_density(grid, state, params);
  return rho.flat().minCoeff();
}

SobolevProxies sobolev_proxies(const SpectralPlan& plan, const Grid& grid,
                               const PrimState& state) {
  SobolevProxies out;
  const VecField2 gs = plan.grad(state.surface_var);
  const Field2 ls = plan.laplace(state.surface_var);
  const double s0 = norm2(state.surface_var), s1 = std::hypot(norm2(gs.x), norm2(gs.y));
  const double s2 = norm2(ls);
  out.surface_h1 = std::sqrt(s0 * s0 + s1 * s1);
  out.surface_h2 = std::sqrt(s0 * s0 + s1 * s1 + s2 * s2);

  double v0sq = 0.0, v1sq = 0.0, v2sq = 0.0;
  for (const Field3* comp : {&state.v.x, &state.v.y}) {
    v0sq += inner3(grid, *comp, *comp);
    const VecField3 g = plan.grad(*comp);
    v1sq += inner3(grid, g.x, g.x) + inner3(grid, g.y, g.y) +
            vertical_dirichlet_form(grid, *comp);
    const Field3 lap = plan.laplace(*comp);
    const Field3 zz = d_zz(grid, *comp, ZBoundary::Velocity);
    v2sq += inner3(grid, lap, lap) + inner3(grid, zz, zz);
  }
  out.v_h1 = std::sqrt(v0sq + v1sq);
  out.v_h2 = std::sqrt(v0sq + v1sq + v2sq);
  return out;
}

DiagnosticsRecord diagnostics_record(const SpectralPlan& plan, const Grid& grid,
                                     const PrimState& state, const SimParams& params) {
  DiagnosticsRecord rec;
  rec.time = state.time;
  rec.mass = total_mass(grid, state, params);
  const EnergyReport e = energy(plan, grid, state, params);
  rec.energy = e.energy;
  rec.dissipation_rate = e.dissipation_rate;
  rec.min_density = min_density(grid, state, params);
  rec.l2_surface = norm2(state.surface_var);
  rec.l2_velocity = norm3(grid, state.v);
  return rec;
}

namespace {

void record_row(const SpectralPlan& plan, const Grid& grid, const PrimState& a,
                const PrimState& b, const SimParams& params, double grad_cum_sq,
                StabilitySeries& out) {
  const Field2 ds = (a.surface_var - b.surface_var).eval();
  const VecField3 dv = a.v - b.v;
  Field3 rho_a = reconstruct_density(grid, a, params);
  Field3 rho_b = reconstruct_density(grid, b, params);
  rho_a.flat() = rho_a.flat().max(0.0).sqrt();
  rho_b.flat() = rho_b.flat().max(0.0).sqrt();
  VecField3 wa = dv, wb = dv;
  wa.x.flat() *= rho_a.flat(); wa.y.flat() *= rho_a.flat();
  wb.x.flat() *= rho_b.flat(); wb.y.flat() *= rho_b.flat();

  out.time.push_back(a.time);
  out.surface_dist.push_back(norm2(ds));
  out.v_dist_weighted_a.push_back(norm3(grid, wa));
  out.v_dist_weighted_b.push_back(norm3(grid, wb));
  out.v_dist.push_back(norm3(grid, dv));
  out.grad_dist_cum.push_back(std::sqrt(grad_cum_sq));
}

double grad_sq(const SpectralPlan& plan, const Grid& grid, const VecField3& dv) {
  const VecField3 gx = plan.grad(dv.x);
  const VecField3 gy = plan.grad(dv.y);
  return inner3(grid, gx.x, gx.x) + inner3(grid, gx.y, gx.y) +
         inner3(grid, gy.x, gy.x) + inner3(grid, gy.y, gy.y) +
         vertical_dirichlet_form(grid, dv.x) + vertical_dirichlet_form(grid, dv.y);
}

}  // namespace

StabilitySeries stability_experiment(const SpectralPlan& plan, const Grid& grid,
                                     PrimState state_a, PrimState state_b,
                                     const SimParams& params, int n_steps) {
  StabilitySeries out;
  double cum = 0.0;
  record_row(plan, grid, state_a, state_b, params, cum, out);
  for (int step = 0; step < n_steps; ++step) {
    picard_advance(plan, grid, state_a, params);
    picard_advance(plan, grid, state_b, params);
    cum += params.dt * grad_sq(plan, grid, state_a.v - state_b.v);
    record_row(plan, grid, state_a, state_b, params, cum, out);
  }

  // log-linear growth rate of the combined theorem distance
  std::vector<double> ts, ys;
  for (size_t i = 0; i < out.time.size(); ++i) {
    const double total =
        out.surface_dist[i] + out.v_dist_weighted_a[i] + out.grad_dist_cum[i];
    if (total > 0.0) {
      ts.push_back(out.time[i]);
      ys.push_back(std::log(total));
    }
  }
  if (ts.size() >= 2) {
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double n = static_cast<double>(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
      st += ts[i]; sy += ys[i]; stt += ts[i] * ts[i]; sty += ts[i] * ys[i];
    }
    const double denom = n * stt - st * st;
    if (denom != 0.0) out.growth_rate = (n * sty - st * sy) / denom;
  }
  return out;
}

}  // namespace cpesim

#include "cpesim/vertical.hpp"

#include <cmath>

namespace cpesim {

Field3 d_z(const Grid& grid, const Field3& f, ZBoundary mode) {
  const int nz = grid.nz;
  const double h = grid.hz;
  Field3 out(f.nx(), f.ny(), f.nz());
  for (int k = 1; k + 1 < nz; ++k)
    out.level(k) = (f.level(k + 1) - f.level(k - 1)) / (2.0 * h);
  if (mode == ZBoundary::Velocity) {
    // even reflection: ghost f[-1] = f[1], so the centered difference is 0
    out.level(0).setZero();
    out.level(nz - 1).setZero();
  } else {
    out.level(0) = (-3.0 * f.level(0) + 4.0 * f.level(1) - f.level(2)) / (2.0 * h);
    out.level(nz - 1) =
        (3.0 * f.level(nz - 1) - 4.0 * f.level(nz - 2) + f.level(nz - 3)) / (2.0 * h);
  }
  return out;
}

Field3 d_zz(const Grid& grid, const Field3& f, ZBoundary mode) {
  const int nz = grid.nz;
  const double h2 = grid.hz * grid.hz;
  Field3 out(f.nx(), f.ny(), f.nz());
  for (int k = 1; k + 1 < nz; ++k)
    out.level(k) = (f.level(k + 1) - 2.0 * f.level(k) + f.level(k - 1)) / h2;
  if (mode == ZBoundary::Velocity) {
    out.level(0) = 2.0 * (f.level(1) - f.level(0)) / h2;
    out.level(nz - 1) = 2.0 * (f.level(nz - 2) - f.level(nz - 1)) / h2;
  } else if (nz >= 4) {
    out.level(0) =
        (2.0 * f.level(0) - 5.0 * f.level(1) + 4.0 * f.level(2) - f.level(3)) / h2;
    out.level(nz - 1) = (2.0 * f.level(nz - 1) - 5.0 * f.level(nz - 2) +
                         4.0 * f.level(nz - 3) - f.level(nz - 4)) / h2;
  } else {
    out.level(0) = (f.level(0) - 2.0 * f.level(1) + f.level(2)) / h2;
    out.level(nz - 1) = out.level(0);
  }
  return out;
}

Field2 vavg(const Grid& grid, const Field3& f) {
  Field2 out = Field2::Zero(f.ny(), f.nx());
  for (int k = 0; k < grid.nz; ++k) out += grid.quad_weights[k] * f.level(k);
  return out;
}

Field3 vfluct(const Grid& grid, const Field3& f) {
  const Field2 bar = vavg(grid, f);
  Field3 out = f;
  for (int k = 0; k < grid.nz; ++k) out.level(k) -= bar;
  return out;
}

Field3 vint(const Grid& grid, const Field3& f) {
  Field3 out(f.nx(), f.ny(), f.nz());
  out.level(0).setZero();
  for (int k = 1; k < grid.nz; ++k)
    out.level(k) = out.level(k - 1) + (grid.hz / 2.0) * (f.level(k - 1) + f.level(k));
  return out;
}

Field2 vavg_weighted(const Grid& grid, const Field3& f, double p) {
  Field2 out = Field2::Zero(f.ny(), f.nx());
  for (int k = 0; k < grid.nz; ++k) {
    const double w = grid.quad_weights[k] * std::pow(grid.z(k), p);
    if (w != 0.0) out += w * f.level(k);
  }
  return out;
}

Field3 vint_weighted(const Grid& grid, const Field3& f, double p) {
  Field3 out(f.nx(), f.ny(), f.nz());
  out.level(0).setZero();
  for (int k = 1; k < grid.nz; ++k) {
    const double wa = std::pow(grid.z(k - 1), p);
    const double wb = std::pow(grid.z(k), p);
    out.level(k) = out.level(k - 1) +
                   (grid.hz / 2.0) * (wa * f.level(k - 1) + wb * f.level(k));
  }
  return out;
}

Field3 broadcast(const Grid& grid, const Field2& f) {
  Field3 out(static_cast<int>(f.cols()), static_cast<int>(f.rows()), grid.nz);
  for (int k = 0; k < grid.nz; ++k) out.level(k) = f;
  return out;
}

double inner3(const Grid& grid, const Field3& a, const Field3& b) {
  const double plane = static_cast<double>(a.plane_size());
  Eigen::ArrayXd per_level(grid.nz);
  for (int k = 0; k < grid.nz; ++k)
    per_level[k] = grid.quad_weights[k] *
                   pairwise_sum((a.level(k) * b.level(k)).eval()) / plane;
  return pairwise_sum(per_level.data(), per_level.size());
}

double norm3(const Grid& grid, const Field3& a) {
  return std::sqrt(std::max(0.0, inner3(grid, a, a)));
}

double inner3(const Grid& grid, const VecField3& a, const VecField3& b) {
  return inner3(grid, a.x, b.x) + inner3(grid, a.y, b.y);
}

double norm3(const Grid& grid, const VecField3& a) {
  return std::sqrt(std::max(0.0, inner3(grid, a, a)));
}

double norm2(const Field2& a) {
  return std::sqrt(pairwise_sum((a * a).eval()) / static_cast<double>(a.size()));
}

double vertical_dirichlet_form(const Grid& grid, const Field3& f) {
  Eigen::ArrayXd per_cell(grid.nz - 1);
  const double plane = static_cast<double>(f.plane_size());
  for (int k = 0; k + 1 < grid.nz; ++k) {
    const Field2 df = (f.level(k + 1) - f.level(k)).eval();
    per_cell[k] = pairwise_sum((df * df).eval()) / plane / grid.hz;
  }
  return pairwise_sum(per_cell.data(), per_cell.size());
}

}  // namespace cpesim

#pragma once

#include <Eigen/Dense>

#include "cpesim/util.hpp"

namespace cpesim {

/// Periodic [0,1)^2 horizontal collocation grid times the closed vertical
/// interval [0,1] with nz uniformly spaced levels. Vertical integrals use the
/// trapezoid weights stored here; every vertical operator shares them.
struct Grid {
  int nx = 0, ny = 0, nz = 0;
  double hz = 0.0;
  Eigen::ArrayXd z_levels;      // nz values {0, hz, ..., 1}
  Eigen::ArrayXd quad_weights;  // hz/2 at the ends, hz inside

  double x(int i) const { return static_cast<double>(i) / nx; }
  double y(int j) const { return static_cast<double>(j) / ny; }
  double z(int k) const { return z_levels[k]; }
};

inline Grid make_grid(int nx, int ny, int nz) {
  if (nx < 4 || ny < 4 || nx % 2 != 0 || ny % 2 != 0)
    throw SimError(ErrorKind::Config, "nx, ny must be even and >= 4");
  if (nz < 3) throw SimError(ErrorKind::Config, "nz must be >= 3");
  Grid grid;
  grid.nx = nx;
  grid.ny = ny;
  grid.nz = nz;
  grid.hz = 1.0 / (nz - 1);
  grid.z_levels = Eigen::ArrayXd::LinSpaced(nz, 0.0, 1.0);
  grid.quad_weights = Eigen::ArrayXd::Constant(nz, grid.hz);
  grid.quad_weights[0] = grid.hz / 2.0;
  grid.quad_weights[nz - 1] = grid.hz / 2.0;
  return grid;
}

}  // namespace cpesim

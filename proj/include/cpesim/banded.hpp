#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "cpesim/util.hpp"

namespace cpesim {

/// Banded LU with partial pivoting, LAPACK-style band storage. Entry (i, j)
/// with -kl <= j - i <= ku lives at ab(kl + ku + i - j, j); the extra kl rows
/// on top hold pivoting fill, so U may have bandwidth kl + ku.
class BandedLU {
 public:
  BandedLU(int n, int kl, int ku)
      : n_(n), kl_(kl), ku_(ku),
        ab_(Eigen::MatrixXd::Zero(2 * kl + ku + 1, n)),
        piv_(Eigen::VectorXi::Zero(n)) {}

  double& at(int i, int j) { return ab_(kl_ + ku_ + i - j, j); }

  /// Factor in place; returns false on exact singularity.
  bool factor() {
    const int band = kl_ + ku_;
    for (int col = 0; col < n_; ++col) {
      int pivot_row = col;
      double pivot_mag = std::abs(ab_(band, col));
      const int last_row = std::min(col + kl_, n_ - 1);
      for (int r = col + 1; r <= last_row; ++r) {
        const double mag = std::abs(ab_(band + r - col, col));
        if (mag > pivot_mag) {
          pivot_mag = mag;
          pivot_row = r;
        }
      }
      if (pivot_mag == 0.0) return false;
      piv_[col] = pivot_row;
      const int last_col = std::min(n_ - 1, col + band);
      if (pivot_row != col)
        for (int j = col; j <= last_col; ++j)
          std::swap(ab_(band + col - j, j), ab_(band + pivot_row - j, j));
      const double pivot = ab_(band, col);
      for (int r = col + 1; r <= last_row; ++r) {
        const double m = ab_(band + r - col, col) / pivot;
        ab_(band + r - col, col) = m;
        for (int j = col + 1; j <= last_col; ++j)
          ab_(band + r - j, j) -= m * ab_(band + col - j, j);
      }
    }
    return true;
  }

  /// Solve A x = b in place (factor() must have succeeded).
  void solve(Eigen::Ref<Eigen::VectorXd> b) const {
    const int band = kl_ + ku_;
    for (int col = 0; col < n_; ++col) {
      if (piv_[col] != col) std::swap(b[col], b[piv_[col]]);
      const int last_row = std::min(col + kl_, n_ - 1);
      for (int r = col + 1; r <= last_row; ++r)
        b[r] -= ab_(band + r - col, col) * b[col];
    }
    for (int row = n_ - 1; row >= 0; --row) {
      const int last_col = std::min(row + band, n_ - 1);
      double acc = b[row];
      for (int j = row + 1; j <= last_col; ++j) acc -= ab_(band + row - j, j) * b[j];
      b[row] = acc / ab_(band, row);
    }
  }

 private:
  int n_, kl_, ku_;
  Eigen::MatrixXd ab_;
  Eigen::VectorXi piv_;
};

}  // namespace cpesim

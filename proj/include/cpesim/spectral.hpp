#pragma once

#include <complex>

#include <Eigen/Dense>

#include "cpesim/field.hpp"
#include "cpesim/grid.hpp"

struct fftw_plan_s;

namespace cpesim {

using Spec = Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                          Eigen::RowMajor>;  // ny rows x (nx/2+1) cols

/// Fourier collocation plan on the periodic horizontal torus. Holds the FFTW
/// plans, integer wavenumber tables scaled by 2*pi, and the 2/3-rule mask.
/// Transform methods are const and safe to call concurrently.
class SpectralPlan {
 public:
  SpectralPlan(int nx, int ny);
  explicit SpectralPlan(const Grid& grid) : SpectralPlan(grid.nx, grid.ny) {}
  ~SpectralPlan();
  SpectralPlan(const SpectralPlan&) = delete;
  SpectralPlan& operator=(const SpectralPlan&) = delete;

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nxh() const { return nx_ / 2 + 1; }

  const Eigen::ArrayXd& kx() const { return kx_; }  // 2*pi*i, i = 0..nx/2
  const Eigen::ArrayXd& ky() const { return ky_; }  // 2*pi*signed(j)
  /// True where |mode| <= floor(n/3) in both directions.
  const Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>&
  dealias_mask() const { return mask_; }

  Spec to_spectral(const Field2& f) const;
  Field2 from_spectral(const Spec& s) const;

  /// Spectral horizontal derivatives; exact for resolved modes, Nyquist
  /// derivative modes are annihilated.
  VecField2 grad(const Field2& f) const;
  Field2 div(const Field2& ux, const Field2& uy) const;
  Field2 laplace(const Field2& f) const;

  /// 2/3-rule truncation of a product.
  Field2 dealias(const Field2& f) const;

  /// Level-by-level application over 3D fields.
  VecField3 grad(const Field3& f) const;
  Field3 div(const VecField3& u) const;
  Field3 laplace(const Field3& f) const;
  VecField3 laplace(const VecField3& u) const {
    return {laplace(u.x), laplace(u.y)};
  }
  Field3 dealias(const Field3& f) const;

  /// Fused horizontal viscous operator mu lap_h u + (mu+lambda) grad_h div_h u
  /// in a single spectral round trip per level; the hot path of the implicit
  /// momentum solve.
  VecField3 viscous_h(const VecField3& u, double mu, double lambda) const;

  /// Collocation norm of the horizontal gradient via Parseval, one forward
  /// transform and no inverse.
  double grad_norm_sq(const Field2& f) const;

  /// Collocation mean over the horizontal plane (exact quadrature on the
  /// torus); deterministic pairwise reduction.
  static double hmean(const Field2& f) {
    return pairwise_sum(f) / static_cast<double>(f.size());
  }

 private:
  int nx_, ny_;
  Eigen::ArrayXd kx_, ky_;
  Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> mask_;
  Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> deriv_mask_;
  fftw_plan_s* fwd_ = nullptr;
  fftw_plan_s* inv_ = nullptr;
};

}  // namespace cpesim

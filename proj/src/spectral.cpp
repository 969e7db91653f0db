#include "cpesim/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>

namespace cpesim {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

SpectralPlan::SpectralPlan(int nx, int ny) : nx_(nx), ny_(ny) {
  kx_ = Eigen::ArrayXd(nxh());
  for (int i = 0; i < nxh(); ++i) kx_[i] = kTwoPi * i;
  ky_ = Eigen::ArrayXd(ny_);
  for (int j = 0; j < ny_; ++j) ky_[j] = kTwoPi * (j <= ny_ / 2 ? j : j - ny_);

  const int cx = nx_ / 3, cy = ny_ / 3;
  mask_.resize(ny_, nxh());
  deriv_mask_.resize(ny_, nxh());
  for (int j = 0; j < ny_; ++j) {
    const int my = j <= ny_ / 2 ? j : j - ny_;
    for (int i = 0; i < nxh(); ++i) {
      mask_(j, i) = (i <= cx && std::abs(my) <= cy) ? 1.0 : 0.0;
      // A derivative of the Nyquist cosine is not representable on the grid.
      deriv_mask_(j, i) = (i < nx_ / 2 && std::abs(my) < ny_ / 2) ? 1.0 : 0.0;
    }
  }

  Field2 rbuf(ny_, nx_);
  Spec cbuf(ny_, nxh());
  fwd_ = fftw_plan_dft_r2c_2d(ny_, nx_, rbuf.data(),
                              reinterpret_cast<fftw_complex*>(cbuf.data()),
                              FFTW_ESTIMATE | FFTW_UNALIGNED);
  inv_ = fftw_plan_dft_c2r_2d(ny_, nx_, reinterpret_cast<fftw_complex*>(cbuf.data()),
                              rbuf.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
}

SpectralPlan::~SpectralPlan() {
  if (fwd_) fftw_destroy_plan(fwd_);
  if (inv_) fftw_destroy_plan(inv_);
}

Spec SpectralPlan::to_spectral(const Field2& f) const {
  Field2 in = f;  // r2c may not preserve its input
  Spec out(ny_, nxh());
  fftw_execute_dft_r2c(fwd_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  out /= static_cast<double>(nx_) * ny_;
  return out;
}

Field2 SpectralPlan::from_spectral(const Spec& s) const {
  Spec in = s;  // c2r destroys its input
  Field2 out(ny_, nx_);
  fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  return out;
}

VecField2 SpectralPlan::grad(const Field2& f) const {
  const Spec s = to_spectral(f);
  Spec gx(ny_, nxh()), gy(ny_, nxh());
  const std::complex<double> iunit(0.0, 1.0);
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nxh(); ++i) {
      const std::complex<double> v = s(j, i) * deriv_mask_(j, i);
      gx(j, i) = iunit * kx_[i] * v;
      gy(j, i) = iunit * ky_[j] * v;
    }
  return {from_spectral(gx), from_spectral(gy)};
}

Field2 SpectralPlan::div(const Field2& ux, const Field2& uy) const {
  const Spec sx = to_spectral(ux);
  const Spec sy = to_spectral(uy);
  Spec d(ny_, nxh());
  const std::complex<double> iunit(0.0, 1.0);
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nxh(); ++i)
      d(j, i) = iunit * deriv_mask_(j, i) * (kx_[i] * sx(j, i) + ky_[j] * sy(j, i));
  return from_spectral(d);
}

Field2 SpectralPlan::laplace(const Field2& f) const {
  const Spec s = to_spectral(f);
  Spec d(ny_, nxh());
  for (int j = 0; j < ny_; ++j)
    for (int i = 0; i < nxh(); ++i)
      d(j, i) = -(kx_[i] * kx_[i] + ky_[j] * ky_[j]) * s(j, i);
  return from_spectral(d);
}

Field2 SpectralPlan::dealias(const Field2& f) const {
  Spec s = to_spectral(f);
  s *= mask_.cast<std::complex<double>>();
  return from_spectral(s);
}

VecField3 SpectralPlan::grad(const Field3& f) const {
  VecField3 out(f.nx(), f.ny(), f.nz());
  parallel_for(0, f.nz(), [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    for (std::ptrdiff_t k = b; k < e; ++k) {
      const VecField2 g = grad(Field2(f.level(static_cast<int>(k))));
      out.x.level(static_cast<int>(k)) = g.x;
      out.y.level(static_cast<int>(k)) = g.y;
    }
  });
  return out;
}

Field3 SpectralPlan::div(const VecField3& u) const {
  Field3 out(u.x.nx(), u.x.ny(), u.x.nz());
  parallel_for(0, u.x.nz(), [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    for (std::ptrdiff_t k = b; k < e; ++k)
      out.level(static_cast<int>(k)) =
          div(Field2(u.x.level(static_cast<int>(k))), Field2(u.y.level(static_cast<int>(k))));
  });
  return out;
}

Field3 SpectralPlan::laplace(const Field3& f) const {
  Field3 out(f.nx(), f.ny(), f.nz());
  parallel_for(0, f.nz(), [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    for (std::ptrdiff_t k = b; k < e; ++k)
      out.level(static_cast<int>(k)) = laplace(Field2(f.level(static_cast<int>(k))));
  });
  return out;
}

Field3 SpectralPlan::dealias(const Field3& f) const {
  Field3 out(f.nx(), f.ny(), f.nz());
  parallel_for(0, f.nz(), [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    for (std::ptrdiff_t k = b; k < e; ++k)
      out.level(static_cast<int>(k)) = dealias(Field2(f.level(static_cast<int>(k))));
  });
  return out;
}

double SpectralPlan::grad_norm_sq(const Field2& f) const {
  const Spec s = to_spectral(f);
  Eigen::ArrayXd per_row(ny_);
  for (int j = 0; j < ny_; ++j) {
    double acc = 0.0;
    for (int i = 0; i < nxh(); ++i) {
      const double kk = deriv_mask_(j, i) * (kx_[i] * kx_[i] + ky_[j] * ky_[j]);
      const double m = kk * std::norm(s(j, i));
      acc += (i == 0 || i == nx_ / 2) ? m : 2.0 * m;
    }
    per_row[j] = acc;
  }
  return pairwise_sum(per_row.data(), per_row.size());
}

VecField3 SpectralPlan::viscous_h(const VecField3& u, double mu, double lambda) const {
  VecField3 out(u.x.nx(), u.x.ny(), u.x.nz());
  const double norm = 1.0 / (static_cast<double>(nx_) * ny_);
  parallel_for(0, u.x.nz(), [&](std::ptrdiff_t kb, std::ptrdiff_t ke) {
    Field2 rx(ny_, nx_), ry(ny_, nx_);
    Spec sx(ny_, nxh()), sy(ny_, nxh());
    for (std::ptrdiff_t lev = kb; lev < ke; ++lev) {
      const int k = static_cast<int>(lev);
      rx = u.x.level(k);
      ry = u.y.level(k);
      fftw_execute_dft_r2c(fwd_, rx.data(), reinterpret_cast<fftw_complex*>(sx.data()));
      fftw_execute_dft_r2c(fwd_, ry.data(), reinterpret_cast<fftw_complex*>(sy.data()));
      for (int j = 0; j < ny_; ++j)
        for (int i = 0; i < nxh(); ++i) {
          const double kx = kx_[i], ky = ky_[j];
          const double kk = kx * kx + ky * ky;
          const double dm = deriv_mask_(j, i);
          const std::complex<double> div =
              dm * (kx * sx(j, i) + ky * sy(j, i));  // -i div
          const std::complex<double> ax =
              (-mu * kk * sx(j, i) - (mu + lambda) * dm * kx * div) * norm;
          const std::complex<double> ay =
              (-mu * kk * sy(j, i) - (mu + lambda) * dm * ky * div) * norm;
          sx(j, i) = ax;
          sy(j, i) = ay;
        }
      fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(sx.data()), rx.data());
      fftw_execute_dft_c2r(inv_, reinterpret_cast<fftw_complex*>(sy.data()), ry.data());
      out.x.level(k) = rx;
      out.y.level(k) = ry;
    }
  });
  return out;
}

}  // namespace cpesim

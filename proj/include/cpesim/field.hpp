#pragma once

#include <Eigen/Dense>

#include "cpesim/util.hpp"

namespace cpesim {

/// Horizontal plane storage: ny rows (y index) by nx columns (x index),
/// row-major so a plane is contiguous with x fastest.
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Field2 = PlaneT<double>;

/// 3D scalar field: nz horizontal planes stacked contiguously, level-major.
/// Level k maps to z_k = k / (nz - 1).
template <typename Scalar>
class Field3T {
 public:
  Field3T() = default;
  Field3T(int nx, int ny, int nz)
      : nx_(nx), ny_(ny), nz_(nz), data_(Eigen::Array<Scalar, Eigen::Dynamic, 1>::Zero(
                                        static_cast<Eigen::Index>(nx) * ny * nz)) {}

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  Eigen::Index plane_size() const { return static_cast<Eigen::Index>(nx_) * ny_; }
  Eigen::Index size() const { return data_.size(); }

  Eigen::Map<PlaneT<Scalar>> level(int k) {
    return {data_.data() + k * plane_size(), ny_, nx_};
  }
  Eigen::Map<const PlaneT<Scalar>> level(int k) const {
    return {data_.data() + k * plane_size(), ny_, nx_};
  }

  Scalar& operator()(int i, int j, int k) {
    return data_[k * plane_size() + static_cast<Eigen::Index>(j) * nx_ + i];
  }
  Scalar operator()(int i, int j, int k) const {
    return data_[k * plane_size() + static_cast<Eigen::Index>(j) * nx_ + i];
  }

  Eigen::Array<Scalar, Eigen::Dynamic, 1>& flat() { return data_; }
  const Eigen::Array<Scalar, Eigen::Dynamic, 1>& flat() const { return data_; }

  void setZero() { data_.setZero(); }
  bool same_shape(const Field3T& o) const {
    return nx_ == o.nx_ && ny_ == o.ny_ && nz_ == o.nz_;
  }

  Field3T& operator+=(const Field3T& o) { data_ += o.data_; return *this; }
  Field3T& operator-=(const Field3T& o) { data_ -= o.data_; return *this; }
  Field3T& operator*=(Scalar s) { data_ *= s; return *this; }

  friend Field3T operator+(Field3T a, const Field3T& b) { a += b; return a; }
  friend Field3T operator-(Field3T a, const Field3T& b) { a -= b; return a; }
  friend Field3T operator*(Scalar s, Field3T a) { a *= s; return a; }

 private:
  int nx_ = 0, ny_ = 0, nz_ = 0;
  Eigen::Array<Scalar, Eigen::Dynamic, 1> data_;
};

using Field3 = Field3T<double>;

/// Two-component horizontal vector field on the 3D grid.
struct VecField3 {
  Field3 x, y;

  VecField3() = default;
  VecField3(int nx, int ny, int nz) : x(nx, ny, nz), y(nx, ny, nz) {}
  VecField3(Field3 vx, Field3 vy) : x(std::move(vx)), y(std::move(vy)) {}

  void setZero() { x.setZero(); y.setZero(); }
  bool same_shape(const VecField3& o) const {
    return x.same_shape(o.x) && y.same_shape(o.y);
  }

  VecField3& operator+=(const VecField3& o) { x += o.x; y += o.y; return *this; }
  VecField3& operator-=(const VecField3& o) { x -= o.x; y -= o.y; return *this; }
  VecField3& operator*=(double s) { x *= s; y *= s; return *this; }

  friend VecField3 operator+(VecField3 a, const VecField3& b) { a += b; return a; }
  friend VecField3 operator-(VecField3 a, const VecField3& b) { a -= b; return a; }
  friend VecField3 operator*(double s, VecField3 a) { a *= s; return a; }
};

/// Two-component horizontal vector field on the horizontal grid.
struct VecField2 {
  Field2 x, y;
};

/// Pointwise product of 3D fields.
inline Field3 hadamard(const Field3& a, const Field3& b) {
  Field3 out = a;
  out.flat() *= b.flat();
  return out;
}

}  // namespace cpesim

#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace cpesim {

// Failure categories map onto CLI exit codes: usage errors are handled by the
// CLI itself, numerical failures exit 2, I/O failures exit 3.
enum class ErrorKind {
  Config,
  Shape,
  Cfl,
  PicardDiverged,
  NegativeDensity,
  SingularSystem,
  Io,
};

class SimError : public std::runtime_error {
 public:
  SimError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class CflError : public SimError {
 public:
  CflError(const std::string& what, double suggested_dt)
      : SimError(ErrorKind::Cfl, what), suggested_dt_(suggested_dt) {}
  double suggested_dt() const { return suggested_dt_; }

 private:
  double suggested_dt_;
};

class PicardError : public SimError {
 public:
  PicardError(const std::string& what, std::vector<double> residual_history)
      : SimError(ErrorKind::PicardDiverged, what),
        residual_history_(std::move(residual_history)) {}
  const std::vector<double>& residual_history() const {
    return residual_history_;
  }

 private:
  std::vector<double> residual_history_;
};

class IoError : public SimError {
 public:
  IoError(const std::string& what, long byte_offset = -1)
      : SimError(ErrorKind::Io, what), byte_offset_(byte_offset) {}
  long byte_offset() const { return byte_offset_; }

 private:
  long byte_offset_;
};

/// Fixed-order pairwise summation. Deterministic for a given length and
/// more accurate than a running sum; every reduction in the library goes
/// through here so results do not depend on evaluation order elsewhere.
/// The base case is an eight-lane strided loop, fixed so the order never
/// depends on vectorization choices.
inline double pairwise_sum(const double* x, std::ptrdiff_t n) {
  if (n <= 256) {
    double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    const std::ptrdiff_t tail = n - n % 8;
    for (std::ptrdiff_t i = 0; i < tail; i += 8)
      for (int l = 0; l < 8; ++l) lane[l] += x[i + l];
    double s = ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
               ((lane[4] + lane[5]) + (lane[6] + lane[7]));
    for (std::ptrdiff_t i = tail; i < n; ++i) s += x[i];
    return s;
  }
  const std::ptrdiff_t half = n / 2;
  return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

/// Fixed-order pairwise dot product with the same reduction tree.
inline double pairwise_dot(const double* a, const double* b, std::ptrdiff_t n) {
  if (n <= 256) {
    double lane[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    const std::ptrdiff_t tail = n - n % 8;
    for (std::ptrdiff_t i = 0; i < tail; i += 8)
      for (int l = 0; l < 8; ++l) lane[l] += a[i + l] * b[i + l];
    double s = ((lane[0] + lane[1]) + (lane[2] + lane[3])) +
               ((lane[4] + lane[5]) + (lane[6] + lane[7]));
    for (std::ptrdiff_t i = tail; i < n; ++i) s += a[i] * b[i];
    return s;
  }
  const std::ptrdiff_t half = n / 2;
  return pairwise_dot(a, b, half) + pairwise_dot(a + half, b + half, n - half);
}

template <typename Derived>
double pairwise_sum(const Eigen::ArrayBase<Derived>& a) {
  const Eigen::ArrayXd tmp =
      a.derived().template cast<double>().reshaped().eval();
  return pairwise_sum(tmp.data(), tmp.size());
}

/// Global worker count, settable via CPESIM_THREADS (see cli).
int thread_count();
void set_thread_count(int n);

/// Static-partition parallel for; bodies must write disjoint data. With one
/// worker the body runs inline, so results are identical for any count.
void parallel_for(std::ptrdiff_t begin, std::ptrdiff_t end,
                  const std::function<void(std::ptrdiff_t, std::ptrdiff_t)>& body);

}  // namespace cpesim

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace svde {

using Vec = std::vector<double>;

/// Dense row-major d x d matrix. The state dimension d is small (typically
/// 1-3), so no attempt is made at blocking or expression templates.
class Mat {
public:
  Mat() = default;
  explicit Mat(std::size_t d, double fill = 0.0) : d_(d), a_(d * d, fill) {}

  static Mat identity(std::size_t d) {
    Mat m(d);
    for (std::size_t i = 0; i < d; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t dim() const { return d_; }

  double& operator()(std::size_t i, std::size_t j) { return a_[i * d_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * d_ + j]; }

  std::span<double> data() { return a_; }
  std::span<const double> data() const { return a_; }

  Mat& operator+=(const Mat& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  Mat& operator*=(double c) {
    for (double& v : a_) v *= c;
    return *this;
  }

  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(double c, Mat a) { return a *= c; }

  friend Mat operator*(const Mat& a, const Mat& b) {
    const std::size_t d = a.d_;
    Mat out(d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k) {
        const double aik = a(i, k);
        if (aik == 0.0) continue;
        for (std::size_t j = 0; j < d; ++j) out(i, j) += aik * b(k, j);
      }
    return out;
  }

  bool operator==(const Mat& o) const { return d_ == o.d_ && a_ == o.a_; }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : a_) s += v * v;
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) return false;
    return true;
  }

private:
  std::size_t d_ = 0;
  std::vector<double> a_;
};

// y += c * x
inline void axpy(double c, const Mat& x, Mat& y) {
  auto xs = x.data();
  auto ys = y.data();
  for (std::size_t k = 0; k < xs.size(); ++k) ys[k] += c * xs[k];
}

inline void axpy(double c, std::span<const double> x, std::span<double> y) {
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += c * x[k];
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm2_squared(std::span<const double> a) { return dot(a, a); }

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace svde

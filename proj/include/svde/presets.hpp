#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "svde/algebra.hpp"
#include "svde/field.hpp"
#include "svde/girsanov.hpp"
#include "svde/kernel.hpp"
#include "svde/mollify.hpp"

namespace svde {

/// Radius of the working ball: the smooth cutoff used by mollification is
/// identically one on |x| <= 9 and vanishes past this radius, so sup bounds
/// of unbounded linear fields are declared over the same ball.
inline constexpr double kWorkingRadius = 10.0;

/// Named coefficient fields acting componentwise on the state.
///   constant   g(s,x) = c
///   linear_x   g(s,x) = lambda * x        (gradient lambda * I)
///   sign_x     g(s,x) = sign(x)           (no gradient: discontinuous)
///   cos_x      g(s,x) = cos(x)            (gradient diag(-sin x))
inline CoefficientField make_field(const std::string& name, double c = 1.0,
                                   double lambda = 1.0) {
  if (name == "constant") {
    return CoefficientField(
        "constant", std::abs(c),
        [c](double, std::span<const double>, std::span<double> out) {
          for (double& v : out) v = c;
        },
        [](double, std::span<const double>, Mat& out) {
          for (double& v : out.data()) v = 0.0;
        });
  }
  if (name == "linear_x") {
    return CoefficientField(
        "linear_x", std::abs(lambda) * kWorkingRadius,
        [lambda](double, std::span<const double> x, std::span<double> out) {
          for (std::size_t i = 0; i < x.size(); ++i) out[i] = lambda * x[i];
        },
        [lambda](double, std::span<const double> x, Mat& out) {
          for (double& v : out.data()) v = 0.0;
          for (std::size_t i = 0; i < x.size(); ++i) out(i, i) = lambda;
        });
  }
  if (name == "sign_x") {
    return CoefficientField(
        "sign_x", 1.0,
        [](double, std::span<const double> x, std::span<double> out) {
          for (std::size_t i = 0; i < x.size(); ++i)
            out[i] = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
        });
  }
  if (name == "cos_x") {
    return CoefficientField(
        "cos_x", 1.0,
        [](double, std::span<const double> x, std::span<double> out) {
          for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::cos(x[i]);
        },
        [](double, std::span<const double> x, Mat& out) {
          for (double& v : out.data()) v = 0.0;
          for (std::size_t i = 0; i < x.size(); ++i) out(i, i) = -std::sin(x[i]);
        });
  }
  throw std::invalid_argument("make_field: unknown field '" + name + "'");
}

/// Declarative kernel description, resolvable to a KernelSeries.
struct KernelSpec {
  std::string preset = "constant";  // constant linear_x sign_x cos_x sin_kernel fractional poly
  double c = 1.0;
  double lambda = 1.0;
  double alpha = -0.4;
  unsigned k_max = 8;
  unsigned n_max = 200;
  std::string base_field = "constant";
  std::vector<unsigned> exponents;       // poly only
  std::vector<std::string> field_names;  // poly only
  unsigned mollify_level = 0;            // 0 = unmollified
  std::size_t quad_points = 32;
};

inline KernelSeries build_kernel(const KernelSpec& spec, double horizon,
                                 std::size_t dim) {
  KernelSeries kernel = [&]() -> KernelSeries {
    if (spec.preset == "constant" || spec.preset == "linear_x" ||
        spec.preset == "sign_x" || spec.preset == "cos_x") {
      std::vector<KernelTerm> terms;
      terms.push_back({0, make_field(spec.preset, spec.c, spec.lambda)});
      return KernelSeries(std::move(terms), horizon);
    }
    if (spec.preset == "sin_kernel")
      return sin_kernel(make_field(spec.base_field, spec.c, spec.lambda), spec.k_max,
                        horizon);
    if (spec.preset == "fractional")
      return fractional_kernel(spec.alpha,
                               make_field(spec.base_field, spec.c, spec.lambda),
                               spec.n_max, horizon);
    if (spec.preset == "poly") {
      if (spec.exponents.empty() && !spec.field_names.empty())
        throw std::invalid_argument("build_kernel: poly needs matching exponents");
      if (spec.exponents.size() != spec.field_names.size())
        throw std::invalid_argument(
            "build_kernel: poly exponent and field lists must match");
      std::vector<KernelTerm> terms;
      for (std::size_t i = 0; i < spec.exponents.size(); ++i)
        terms.push_back({spec.exponents[i],
                         make_field(spec.field_names[i], spec.c, spec.lambda)});
      return KernelSeries(std::move(terms), horizon);
    }
    throw std::invalid_argument("build_kernel: unknown kernel preset '" +
                                spec.preset + "'");
  }();
  if (spec.mollify_level > 0)
    return mollify_kernel(kernel, spec.mollify_level, spec.quad_points, dim);
  return kernel;
}

/// Named scalar test functions of the terminal state. `id`, `sin` and the
/// clamped `bounded_id` read the first component; `square` is the squared
/// Euclidean norm; `indicator_le(a)` tests the first component against a.
inline ScalarFn make_phi(const std::string& name) {
  if (name == "id")
    return [](std::span<const double> x) { return x[0]; };
  if (name == "square")
    return [](std::span<const double> x) { return norm2_squared(x); };
  if (name == "sin")
    return [](std::span<const double> x) { return std::sin(x[0]); };
  if (name == "bounded_id")
    return [](std::span<const double> x) { return std::clamp(x[0], -2.0, 2.0); };
  if (name.rfind("indicator_le(", 0) == 0 && name.back() == ')') {
    const std::string inner = name.substr(13, name.size() - 14);
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(inner, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("make_phi: bad threshold in '" + name + "'");
    }
    if (used != inner.size())
      throw std::invalid_argument("make_phi: bad threshold in '" + name + "'");
    return [a](std::span<const double> x) { return x[0] <= a ? 1.0 : 0.0; };
  }
  throw std::invalid_argument("make_phi: unknown test function '" + name + "'");
}

}  // namespace svde

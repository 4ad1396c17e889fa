#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>

#include "svde/algebra.hpp"

namespace svde {

/// A bounded measurable coefficient g : [0,T] x R^d -> R^d together with a
/// declared sup bound and, optionally, its spatial Jacobian. Evaluation writes
/// into caller-provided storage so solver loops stay allocation-free.
class CoefficientField {
public:
  using EvalFn = std::function<void(double, std::span<const double>, std::span<double>)>;
  using GradFn = std::function<void(double, std::span<const double>, Mat&)>;

  CoefficientField(std::string name, double sup_bound, EvalFn eval, GradFn grad = nullptr)
      : name_(std::move(name)),
        sup_bound_(sup_bound),
        eval_(std::move(eval)),
        grad_(std::move(grad)) {
    if (!(sup_bound_ >= 0.0))
      throw std::invalid_argument("CoefficientField: sup bound must be non-negative");
    if (!eval_) throw std::invalid_argument("CoefficientField: missing evaluation function");
  }

  const std::string& name() const { return name_; }
  double sup_bound() const { return sup_bound_; }
  bool has_gradient() const { return static_cast<bool>(grad_); }

  void evaluate_into(double s, std::span<const double> x, std::span<double> out) const {
    eval_(s, x, out);
  }

  Vec evaluate(double s, std::span<const double> x) const {
    Vec out(x.size(), 0.0);
    eval_(s, x, out);
    return out;
  }

  void gradient_into(double s, std::span<const double> x, Mat& out) const {
    if (!grad_)
      throw std::logic_error("CoefficientField '" + name_ + "' has no gradient");
    grad_(s, x, out);
  }

  Mat gradient(double s, std::span<const double> x) const {
    Mat out(x.size());
    gradient_into(s, x, out);
    return out;
  }

private:
  std::string name_;
  double sup_bound_;
  EvalFn eval_;
  GradFn grad_;
};

/// c * g, with the sup bound and gradient scaled accordingly.
inline CoefficientField scale_field(double c, const CoefficientField& g) {
  CoefficientField::GradFn grad;
  if (g.has_gradient()) {
    grad = [c, g](double s, std::span<const double> x, Mat& out) {
      g.gradient_into(s, x, out);
      out *= c;
    };
  }
  return CoefficientField(
      std::to_string(c) + "*" + g.name(), std::abs(c) * g.sup_bound(),
      [c, g](double s, std::span<const double> x, std::span<double> out) {
        g.evaluate_into(s, x, out);
        for (double& v : out) v *= c;
      },
      std::move(grad));
}

}  // namespace svde

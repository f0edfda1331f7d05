#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "hypflow/linalg.hpp"

namespace hypflow {

/// t -> A(t) sampled at strictly increasing times, piecewise linear between
/// samples. Outside the sampled range the path takes its asymptotic limit when
/// one is given and is held constant at the end sample otherwise.
class OperatorPath
{
public:
  OperatorPath(std::vector<double> times, std::vector<Matrix> samples, std::optional<Matrix> limit_minus = {},
               std::optional<Matrix> limit_plus = {});

  /// Samples f on [t0, t1] with spacing close to dt.
  static OperatorPath from_function(std::function<Matrix(double)> const &f, double t0, double t1, double dt,
                                    std::optional<Matrix> limit_minus = {}, std::optional<Matrix> limit_plus = {});
  /// Constant path on [t0, t1] with both limits equal to a.
  static OperatorPath constant(Matrix const &a, double t0 = -1.0, double t1 = 1.0);

  Index dim() const { return samples_.front().rows(); }
  Matrix operator()(double t) const;

  std::vector<double> const &times() const { return times_; }
  std::vector<Matrix> const &samples() const { return samples_; }
  double t_first() const { return times_.front(); }
  double t_last() const { return times_.back(); }

  std::optional<Matrix> const &limit_minus() const { return limit_minus_; }
  std::optional<Matrix> const &limit_plus() const { return limit_plus_; }
  /// Value used for A(-inf) / A(+inf): the limit if present, else the end sample.
  Matrix const &end_minus() const { return limit_minus_ ? *limit_minus_ : samples_.front(); }
  Matrix const &end_plus() const { return limit_plus_ ? *limit_plus_ : samples_.back(); }
  /// ||A(t_first) - A(-inf)|| and ||A(t_last) - A(+inf)||; zero without limits.
  double tail_residual_minus() const { return tail_minus_; }
  double tail_residual_plus() const { return tail_plus_; }

  /// sup ||A(t)|| over [a, b]. Exact for piecewise-linear interpolation.
  double sup_norm(double a, double b) const;
  double sup_norm() const;

  /// First sample time strictly beyond t in the given direction (+1 or -1),
  /// or nullopt when none is left.
  std::optional<double> next_knot(double t, int direction) const;

  /// A(. + tau).
  OperatorPath shifted(double tau) const;
  /// t -> -A(-t); its stable space is the unstable space of A.
  OperatorPath reversed_negated() const;
  /// t -> -A(t)^*.
  OperatorPath adjoint_negated() const;
  /// Samples inside [a, b] plus interpolated end points; limits dropped.
  OperatorPath restricted(double a, double b) const;
  /// s -> A(a + s (b - a)) on [0, 1].
  OperatorPath rescaled_to_unit(double a, double b) const;
  /// Maps every sample and limit through g (same times).
  OperatorPath transformed(std::function<Matrix(Matrix const &)> const &g) const;

private:
  std::vector<double> times_;
  std::vector<Matrix> samples_;
  std::optional<Matrix> limit_minus_, limit_plus_;
  double tail_minus_ = 0.0, tail_plus_ = 0.0;
  std::vector<double> norms_;
};

/// Samples the window [a, b] of a path until the tail residuals against the
/// limits fall below tail_tol; returns the first |t| at which both tails are
/// within tolerance, or nullopt.
std::optional<double> tail_truncation(OperatorPath const &path, double tail_tol, double max_window = 40.0);

} // namespace hypflow

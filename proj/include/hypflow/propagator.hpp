#pragma once

#include <vector>

#include "hypflow/path.hpp"

namespace hypflow {

struct OdeOptions
{
  double tol = 1e-10;          // local error per unit time, relative to max(1, ||Y||)
  double max_step = 0.25;
  double min_step = 1e-12;
  double condition_cap = 1e12; // ||X|| ||X^{-1}|| cap along a trajectory
};

enum class Side
{
  Left,  // Y' = A(t) Y
  Right, // Y' = -Y A(t)
};

struct TransportStats
{
  int steps = 0;
  int rejected = 0;
  double max_local_error = 0.0;
};

/// Integrates Y' = A Y (or Y' = -Y A) from t0 to t1; t1 < t0 runs backwards.
/// Classical RK4 with step doubling and local extrapolation; steps never
/// straddle a sample time of the path.
Matrix transport(OperatorPath const &path, double t0, double t1, Matrix y0, OdeOptions const &opts = {},
                 Side side = Side::Left, TransportStats *stats = nullptr);

/// X_A(t) X_A(s)^{-1}, integrated directly from s to t.
inline Matrix transition(OperatorPath const &path, double t, double s, OdeOptions const &opts = {})
{
  return transport(path, s, t, Matrix::Identity(path.dim(), path.dim()), opts);
}

/// Propagator samples on a uniform grid k*h covering [a, b] (0 is a node).
class Trajectory
{
public:
  Trajectory(OperatorPath path, double a, double b, double h, OdeOptions opts);

  OperatorPath const &path() const { return path_; }
  std::vector<double> const &times() const { return times_; }
  std::vector<Matrix> const &values() const { return x_; }
  std::vector<Matrix> const &inverses() const { return xinv_; }
  double step() const { return h_; }
  double window_begin() const { return times_.front(); }
  double window_end() const { return times_.back(); }
  OdeOptions const &options() const { return opts_; }
  double max_local_error() const { return max_local_error_; }
  double max_condition() const { return max_condition_; }
  std::size_t index_of(double t) const; // nearest grid node

  /// X_A(t); off-grid times are integrated from the nearest node.
  Matrix at(double t) const;
  Matrix inverse_at(double t) const;

private:
  OperatorPath path_;
  OdeOptions opts_;
  double h_;
  std::vector<double> times_;
  std::vector<Matrix> x_, xinv_;
  std::size_t zero_ = 0;
  double max_local_error_ = 0.0;
  double max_condition_ = 1.0;
};

/// Window [a, b] must contain 0. Inverses come from the right-sided equation.
Trajectory propagate(OperatorPath const &path, double a, double b, double h = 0.05, OdeOptions const &opts = {});

/// ||X_{A(.+s)}(t) X_A(s) - X_A(t+s)|| / max(1, ||X_A(t+s)||), shifted propagator integrated afresh.
double cocycle_residual(Trajectory const &traj, double s, double t);
/// max over the grid of ||X_A(t) X_A(t)^{-1} - I||.
double inverse_residual(Trajectory const &traj);
/// max over the grid of ||(X_A(t)^{-1})^* - X_{-A^*}(t)|| / max(1, ||X_{-A^*}(t)||).
double dual_residual(Trajectory const &traj);

struct ExponentialFit
{
  double c = 1.0;
  double lambda = 0.0;
  double max_residual = 0.0; // max log excess of the least-squares line, folded into c
  double gronwall_cap = 0.0; // sup ||A|| over the window
  std::size_t pairs = 0;
};

/// ||X(t) X(s)^{-1}|| <= c e^{lambda (t - s)} for grid pairs t >= s. The fit
/// uses the per-lag upper envelope and the rate is capped by Gronwall.
ExponentialFit fit_exponential_estimate(Trajectory const &traj, std::size_t max_nodes = 128);

/// max_t ||X_B(t) - X_A(t) - int_0^t X_A(t) X_A(tau)^{-1} (B - A)(tau) X_B(tau) dtau||,
/// trapezoid rule on a grid of spacing h.
double variation_of_constants_residual(OperatorPath const &a, OperatorPath const &b, double t0, double t1,
                                       double h = 1e-3, OdeOptions const &opts = {});

} // namespace hypflow

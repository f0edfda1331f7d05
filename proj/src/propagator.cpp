#include "hypflow/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace hypflow {

namespace {

Matrix rk4_step(OperatorPath const &path, Side side, double t, Matrix const &y, double dt)
{
  auto f = [&](double s, Matrix const &v) -> Matrix {
    Matrix const a = path(s);
    return side == Side::Left ? Matrix(a * v) : Matrix(-(v * a));
  };
  Matrix const k1 = f(t, y);
  Matrix const k2 = f(t + 0.5 * dt, y + (0.5 * dt) * k1);
  Matrix const k3 = f(t + 0.5 * dt, y + (0.5 * dt) * k2);
  Matrix const k4 = f(t + dt, y + dt * k3);
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void require_in_window(Trajectory const &traj, double t, char const *what)
{
  double const slack = 1e-9 * (1.0 + std::abs(t));
  if (t < traj.window_begin() - slack || t > traj.window_end() + slack) {
    std::ostringstream os;
    os << what << " t = " << t << " lies outside the trajectory window [" << traj.window_begin() << ", "
       << traj.window_end() << "]";
    throw InputError("out-of-window", os.str());
  }
}

} // namespace

Matrix transport(OperatorPath const &path, double t0, double t1, Matrix y, OdeOptions const &opts, Side side,
                 TransportStats *stats)
{
  if (t0 == t1) return y;
  int const dir = t1 > t0 ? 1 : -1;
  double t = t0;
  double h = std::min(opts.max_step, std::abs(t1 - t0));
  while (dir * (t1 - t) > 0.0) {
    double stop = t1;
    double const eps = 1e-12 * (1.0 + std::abs(t));
    // Knots closer than eps are rounding twins of t and would force a null step.
    if (auto const knot = path.next_knot(t + dir * eps, dir); knot && dir * (stop - *knot) > eps) {
      stop = *knot;
    }
    if (std::abs(stop - t) <= eps) {
      t = stop;
      continue;
    }
    double const room = std::abs(stop - t);
    bool const clipped = h >= room;
    double const dt = dir * std::min(h, room);
    Matrix const full = rk4_step(path, side, t, y, dt);
    Matrix const half = rk4_step(path, side, t + 0.5 * dt, rk4_step(path, side, t, y, 0.5 * dt), 0.5 * dt);
    double const err = (half - full).norm() / 15.0;
    double const allowed = opts.tol * std::max(1.0, y.norm()) * std::max(std::abs(dt), 1e-4);
    if (err <= allowed) {
      y = half + (half - full) / 15.0;
      t = clipped ? stop : t + dt;
      if (stats) {
        ++stats->steps;
        stats->max_local_error = std::max(stats->max_local_error, err);
      }
      if (!y.allFinite()) {
        throw NumericalError("ode-overflow", "propagator overflowed while integrating");
      }
      if (!clipped) {
        double const grow = err > 0.0 ? 0.9 * std::pow(allowed / err, 0.2) : 2.0;
        h = std::min(opts.max_step, h * std::clamp(grow, 1.0, 2.0));
      }
    } else {
      if (stats) ++stats->rejected;
      h = std::abs(dt) * std::max(0.2, 0.9 * std::pow(allowed / err, 0.2));
      if (h < opts.min_step) {
        std::ostringstream os;
        os << "step size underflow at t = " << t << " (h = " << h << ")";
        throw NumericalError("step-underflow", os.str());
      }
    }
  }
  return y;
}

Trajectory::Trajectory(OperatorPath path, double a, double b, double h, OdeOptions opts)
  : path_(std::move(path)), opts_(opts), h_(h)
{
  if (!(h > 0.0) || !(b > a)) {
    throw InputError("bad-window", "trajectory needs b > a and a positive grid step");
  }
  if (!(opts.tol > 1e-13 && opts.tol < 1e-3)) {
    throw InputError("bad-tolerance", "ODE tolerance must lie in (1e-13, 1e-3)");
  }
  auto const kmin = static_cast<long>(std::ceil(a / h - 1e-9));
  auto const kmax = static_cast<long>(std::floor(b / h + 1e-9));
  if (kmin > 0 || kmax < 0 || kmax - kmin < 1) {
    throw InputError("bad-window", "trajectory window must contain 0 and at least one grid step");
  }
  Index const n = path_.dim();
  Matrix const id = Matrix::Identity(n, n);
  std::size_t const m = static_cast<std::size_t>(kmax - kmin + 1);
  zero_ = static_cast<std::size_t>(-kmin);
  times_.resize(m);
  x_.assign(m, id);
  xinv_.assign(m, id);
  for (std::size_t i = 0; i < m; ++i) times_[i] = static_cast<double>(kmin + static_cast<long>(i)) * h;

  TransportStats stats;
  auto fill = [&](std::size_t from, std::size_t to) {
    x_[to] = transport(path_, times_[from], times_[to], x_[from], opts_, Side::Left, &stats);
    xinv_[to] = transport(path_, times_[from], times_[to], xinv_[from], opts_, Side::Right, &stats);
    double const cond = op_norm(x_[to]) * op_norm(xinv_[to]);
    max_condition_ = std::max(max_condition_, cond);
    if (!(cond <= opts_.condition_cap)) {
      std::ostringstream os;
      os << "propagator condition " << cond << " exceeds the cap " << opts_.condition_cap << " at t = "
         << times_[to];
      throw NumericalError("condition-cap", os.str());
    }
  };
  for (std::size_t i = zero_ + 1; i < m; ++i) fill(i - 1, i);
  for (std::size_t i = zero_; i-- > 0;) fill(i + 1, i);
  max_local_error_ = stats.max_local_error;
}

std::size_t Trajectory::index_of(double t) const
{
  double const k = std::round(t / h_);
  long const i = static_cast<long>(k) + static_cast<long>(zero_);
  return static_cast<std::size_t>(std::clamp(i, 0L, static_cast<long>(times_.size()) - 1));
}

Matrix Trajectory::at(double t) const
{
  require_in_window(*this, t, "trajectory sample");
  std::size_t const i = index_of(t);
  if (std::abs(times_[i] - t) <= 1e-12 * (1.0 + std::abs(t))) return x_[i];
  return transport(path_, times_[i], t, x_[i], opts_, Side::Left);
}

Matrix Trajectory::inverse_at(double t) const
{
  require_in_window(*this, t, "trajectory sample");
  std::size_t const i = index_of(t);
  if (std::abs(times_[i] - t) <= 1e-12 * (1.0 + std::abs(t))) return xinv_[i];
  return transport(path_, times_[i], t, xinv_[i], opts_, Side::Right);
}

Trajectory propagate(OperatorPath const &path, double a, double b, double h, OdeOptions const &opts)
{
  return Trajectory(path, a, b, h, opts);
}

double cocycle_residual(Trajectory const &traj, double s, double t)
{
  require_in_window(traj, s, "cocycle");
  require_in_window(traj, t + s, "cocycle");
  Matrix const shifted = transition(traj.path().shifted(s), t, 0.0, traj.options());
  Matrix const rhs = traj.at(t + s);
  return op_norm(shifted * traj.at(s) - rhs) / std::max(1.0, op_norm(rhs));
}

double inverse_residual(Trajectory const &traj)
{
  double worst = 0.0;
  Index const n = traj.path().dim();
  for (std::size_t i = 0; i < traj.times().size(); ++i) {
    worst = std::max(worst, op_norm(traj.values()[i] * traj.inverses()[i] - Matrix::Identity(n, n)));
  }
  return worst;
}

double dual_residual(Trajectory const &traj)
{
  Trajectory const dual(traj.path().adjoint_negated(), traj.window_begin(), traj.window_end(), traj.step(),
                        traj.options());
  double worst = 0.0;
  for (std::size_t i = 0; i < traj.times().size(); ++i) {
    Matrix const &d = dual.values()[i];
    worst = std::max(worst, op_norm(traj.inverses()[i].adjoint() - d) / std::max(1.0, op_norm(d)));
  }
  return worst;
}

ExponentialFit fit_exponential_estimate(Trajectory const &traj, std::size_t max_nodes)
{
  std::size_t const total = traj.times().size();
  if (total < 10) {
    throw InputError("degenerate-grid", "exponential fit needs at least 10 grid points");
  }
  std::size_t const stride = (total + max_nodes - 1) / std::max<std::size_t>(max_nodes, 2);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < total; i += std::max<std::size_t>(stride, 1)) idx.push_back(i);
  std::size_t const m = idx.size();

  // Upper envelope of log ||X(t) X(s)^{-1}|| per lag.
  std::vector<double> x(m), y(m, -std::numeric_limits<double>::infinity());
  ExponentialFit fit;
  for (std::size_t k = 0; k < m; ++k) {
    x[k] = traj.times()[idx[k]] - traj.times()[idx[0]];
    for (std::size_t i = 0; i + k < m; ++i) {
      double const v = op_norm(traj.values()[idx[i + k]] * traj.inverses()[idx[i]]);
      y[k] = std::max(y[k], std::log(std::max(v, std::numeric_limits<double>::min())));
      ++fit.pairs;
    }
  }
  double const xm = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
  double const ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    sxy += (x[k] - xm) * (y[k] - ym);
    sxx += (x[k] - xm) * (x[k] - xm);
  }
  fit.gronwall_cap = traj.path().sup_norm(traj.window_begin(), traj.window_end());
  fit.lambda = std::min(sxy / sxx, fit.gronwall_cap);
  double logc = ym - fit.lambda * xm;
  double excess = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) excess = std::max(excess, y[k] - logc - fit.lambda * x[k]);
  fit.max_residual = std::max(0.0, excess);
  logc += excess;
  fit.c = std::exp(logc);
  return fit;
}

double variation_of_constants_residual(OperatorPath const &a, OperatorPath const &b, double t0, double t1, double h,
                                       OdeOptions const &opts)
{
  if (a.dim() != b.dim()) {
    throw InputError("dimension-mismatch", "variation of constants needs paths of equal dimension");
  }
  Trajectory const ta(a, t0, t1, h, opts);
  Trajectory const tb(b, t0, t1, h, opts);
  std::size_t const m = ta.times().size();
  std::size_t const zero = ta.index_of(0.0);
  std::vector<Matrix> f(m);
  for (std::size_t i = 0; i < m; ++i) {
    double const t = ta.times()[i];
    f[i] = ta.inverses()[i] * (b(t) - a(t)) * tb.values()[i];
  }
  Index const n = a.dim();
  std::vector<Matrix> integral(m, Matrix::Zero(n, n));
  for (std::size_t i = zero + 1; i < m; ++i) integral[i] = integral[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  for (std::size_t i = zero; i-- > 0;) integral[i] = integral[i + 1] - 0.5 * h * (f[i + 1] + f[i]);
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    Matrix const rhs = ta.values()[i] * (Matrix::Identity(n, n) + integral[i]);
    worst = std::max(worst, op_norm(tb.values()[i] - rhs));
  }
  return worst;
}

} // namespace hypflow

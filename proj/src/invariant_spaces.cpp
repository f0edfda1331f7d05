#include "hypflow/invariant_spaces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

namespace hypflow {

namespace {

Matrix thin_q(Matrix const &y)
{
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

// Last sample time at which A is farther than tail_tol from A(+inf).
double right_tail_start(OperatorPath const &path, double tail_tol)
{
  Matrix const &limit = path.end_plus();
  auto const &t = path.times();
  auto const &s = path.samples();
  for (std::size_t i = t.size(); i-- > 0;) {
    if (op_norm(s[i] - limit) > tail_tol) return i + 1 < t.size() ? t[i + 1] : t[i];
  }
  return t.front();
}

// int_0^inf e^{-nu r} w(r) dr for w(r) = ||A(t0 + r) - A0|| (forward) or
// int_0^t e^{-nu (t - r)} w(r) dr (backward); trapezoid with step 0.01.
double envelope_integral(OperatorPath const &path, Matrix const &a0, double t0, double length, double nu,
                         bool from_end)
{
  if (!(nu > 0.0) && !from_end) return std::numeric_limits<double>::infinity();
  double const h = 0.01;
  auto const m = static_cast<std::size_t>(std::ceil(length / h));
  if (m == 0) return 0.0;
  double const step = length / static_cast<double>(m);
  double acc = 0.0;
  for (std::size_t i = 0; i <= m; ++i) {
    double const r = step * static_cast<double>(i);
    double const w = from_end ? op_norm(path(r) - a0) * std::exp(-nu * (length - r))
                              : op_norm(path(t0 + r) - a0) * std::exp(-nu * r);
    acc += (i == 0 || i == m ? 0.5 : 1.0) * w;
  }
  return acc * step;
}

// Neumann iteration for the fixed point on a grid of spacing h over [0, cut].
// Returns y(0) for the columns of x0 (basis of E^-).
Matrix neumann_graph(OperatorPath const &shifted, Splitting const &split, Matrix const &x0, double cut, double h,
                     double tol, int max_iterations, OdeOptions const &ode, int &iterations)
{
  Index const n = shifted.dim();
  Index const k = x0.cols();
  Matrix const &pm = split.minus.matrix();
  Matrix const &pp = split.plus.matrix();
  auto const steps = static_cast<std::size_t>(std::ceil(cut / h - 1e-9));
  std::size_t const nodes = steps + 1;
  std::vector<double> t(nodes);
  for (std::size_t i = 0; i < nodes; ++i) t[i] = h * static_cast<double>(i);

  OperatorPath const a_minus = shifted.transformed([&](Matrix const &a) { return Matrix(pm * a * pm); });
  OperatorPath const a_plus = shifted.transformed([&](Matrix const &a) { return Matrix(pp * a * pp); });
  Matrix const id = Matrix::Identity(n, n);
  std::vector<Matrix> phi(steps), psi(steps), down(nodes), up(nodes), b(nodes);
  for (std::size_t i = 0; i < steps; ++i) {
    phi[i] = transport(a_minus, t[i], t[i + 1], id, ode);
    psi[i] = transport(a_plus, t[i + 1], t[i], id, ode);
  }
  for (std::size_t i = 0; i < nodes; ++i) {
    Matrix const a = shifted(t[i]);
    down[i] = pm * a * pp;
    up[i] = pp * a * pm;
  }
  b[0] = x0;
  for (std::size_t i = 0; i < steps; ++i) b[i + 1] = phi[i] * b[i];

  std::vector<Matrix> x(b), y(nodes, Matrix::Zero(n, k)), xn(nodes), yn(nodes);
  double const half = 0.5 * h;
  double last = std::numeric_limits<double>::infinity();
  for (iterations = 1; iterations <= max_iterations; ++iterations) {
    Matrix f = Matrix::Zero(n, k);
    xn[0] = b[0];
    for (std::size_t i = 0; i < steps; ++i) {
      f = phi[i] * (f + half * (down[i] * y[i])) + half * (down[i + 1] * y[i + 1]);
      xn[i + 1] = b[i + 1] + f;
    }
    Matrix g = Matrix::Zero(n, k);
    yn[steps] = g;
    for (std::size_t i = steps; i-- > 0;) {
      g = psi[i] * (g - half * (up[i + 1] * x[i + 1])) - half * (up[i] * x[i]);
      yn[i] = g;
    }
    double incr = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      incr = std::max({incr, (xn[i] - x[i]).norm(), (yn[i] - y[i]).norm()});
      scale = std::max(scale, xn[i].norm());
    }
    std::swap(x, xn);
    std::swap(y, yn);
    if (incr <= tol * scale) return y[0];
    if (iterations > 20 && incr > last) break;
    last = incr;
  }
  throw NumericalError("series-stagnation", "Neumann series for the stable graph did not converge");
}

// Least-squares slope of log ||X_A(t)|_W|| on [0, length], sampled at chunk ends.
// The restricted norm is tracked through the accumulated triangular factors.
double restricted_log_slope(OperatorPath const &path, Matrix q, double length, OdeOptions const &opts)
{
  Index const k = q.cols();
  Matrix acc = Matrix::Identity(k, k);
  std::vector<double> ts{0.0}, ys{0.0};
  double log_scale = 0.0;
  for (double t = 0.0; t < length - 1e-12; t += 1.0) {
    Matrix const y = transport(path, t, t + 1.0, q, opts);
    Eigen::HouseholderQR<Matrix> qr(y);
    q = qr.householderQ() * Matrix::Identity(y.rows(), k);
    Matrix const r = qr.matrixQR().topRows(k).template triangularView<Eigen::Upper>();
    acc = r * acc;
    double const s = op_norm(acc);
    acc /= s;
    log_scale += std::log(s);
    ts.push_back(t + 1.0);
    ys.push_back(log_scale);
  }
  double const n = static_cast<double>(ts.size());
  double const tm = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
  double const ym = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - tm) * (ys[i] - ym);
    sxx += (ts[i] - tm) * (ts[i] - tm);
  }
  return sxy / sxx;
}

} // namespace

Matrix transport_subspace(OperatorPath const &path, double t0, double t1, Matrix basis, OdeOptions const &opts,
                          double period, double *min_log_growth)
{
  double growth = std::numeric_limits<double>::infinity();
  if (basis.cols() == 0) {
    if (min_log_growth) *min_log_growth = growth;
    return basis;
  }
  int const dir = t1 > t0 ? 1 : -1;
  double t = t0;
  while (dir * (t1 - t) > 0.0) {
    double const next = dir * (t1 - t) > period ? t + dir * period : t1;
    Matrix const y = transport(path, t, next, basis, opts);
    Eigen::JacobiSVD<Matrix> svd(y);
    double const smin = svd.singularValues()(svd.singularValues().size() - 1);
    growth = std::min(growth, std::log(std::max(smin, std::numeric_limits<double>::min())) / std::abs(next - t));
    basis = thin_q(y);
    t = next;
  }
  if (min_log_growth) *min_log_growth = growth;
  return basis;
}

StableSpace stable_space_limit_ex(OperatorPath const &path, InvariantOptions const &opts)
{
  Index const n = path.dim();
  Splitting const split = spectral_projectors(path.end_plus());
  Subspace const e_minus = split.minus.range();
  StableSpace out;
  if (e_minus.dim() == 0 || e_minus.dim() == n) {
    out.space = e_minus.dim() == 0 ? Subspace::zero(n) : Subspace::whole(n);
    return out;
  }
  double const start = std::max(opts.delta, right_tail_start(path, opts.tail_tol));
  if (start > opts.horizon) {
    std::ostringstream os;
    os << "path does not settle within tail tolerance " << opts.tail_tol << " before the horizon " << opts.horizon;
    throw NumericalError("horizon-exhausted", os.str());
  }
  Subspace prev = Subspace::from_orthonormal(
      transport_subspace(path, start, 0.0, e_minus.basis(), opts.ode, opts.delta), 1e-8);
  out.candidates = 1;
  for (double t = start + opts.delta; t <= opts.horizon + 1e-9; t += opts.delta) {
    Subspace next = Subspace::from_orthonormal(
        transport_subspace(path, t, 0.0, e_minus.basis(), opts.ode, opts.delta), 1e-8);
    ++out.candidates;
    out.cauchy_gap = delta1(prev, next);
    prev = std::move(next);
    if (out.cauchy_gap < opts.tol) {
      out.space = std::move(prev);
      out.horizon = t;
      out.decay_rate = -restricted_log_slope(path, out.space.basis(), std::min(t, 10.0), opts.ode);
      return out;
    }
  }
  std::ostringstream os;
  os << "stable space did not stabilize by T = " << opts.horizon << " (last Cauchy gap " << out.cauchy_gap << ")";
  throw NumericalError("horizon-exhausted", os.str());
}

StableSpace unstable_space_ex(OperatorPath const &path, InvariantOptions const &opts)
{
  return stable_space_limit_ex(path.reversed_negated(), opts);
}

DichotomyData dichotomy_data(OperatorPath const &path, double tau)
{
  DichotomyData d{spectral_projectors(path.end_plus())};
  d.tau = tau;
  Matrix const a0 = path.end_plus();
  Matrix const &pm = d.splitting.minus.matrix();
  Matrix const &pp = d.splitting.plus.matrix();
  d.lambda = 0.99 * d.splitting.margin;
  d.m = std::max(op_norm(pm), op_norm(pp));

  // c from sampling the restrictions e^{tA0}|E- and e^{-tA0}|E+ in orthonormal coordinates.
  Matrix const bm = d.splitting.minus.range().basis();
  Matrix const bp = d.splitting.plus.range().basis();
  Matrix const cm = bm.adjoint() * a0 * bm;
  Matrix const cp = bp.adjoint() * a0 * bp;
  double const t_max = 40.0 / d.splitting.margin;
  d.c = 1.0;
  for (int i = 0; i <= 400; ++i) {
    double const s = t_max * i / 400.0;
    double const decay = std::exp(d.lambda * s);
    if (cm.size()) d.c = std::max(d.c, op_norm(Matrix(s * cm).exp()) * decay);
    if (cp.size()) d.c = std::max(d.c, op_norm(Matrix(-s * cp).exp()) * decay);
  }

  auto account = [&](Matrix const &a) {
    Matrix const h = a - a0;
    d.h_norm = std::max(d.h_norm, op_norm(h));
    d.h_minus = std::max(d.h_minus, op_norm(pm * h * pm));
    d.h_plus = std::max(d.h_plus, op_norm(pp * h * pp));
    d.h_cross_down = std::max(d.h_cross_down, op_norm(pm * h * pp));
    d.h_cross_up = std::max(d.h_cross_up, op_norm(pp * h * pm));
  };
  account(path(tau));
  for (std::size_t i = 0; i < path.times().size(); ++i) {
    if (path.times()[i] > tau) account(path.samples()[i]);
  }
  d.mu_minus = d.lambda - d.c * d.h_minus;
  d.mu_plus = d.lambda - d.c * d.h_plus;
  d.nu = d.mu_plus > 0.0 ? d.mu_minus - std::pow(d.c, 3) * d.h_cross_up * d.h_cross_down / d.mu_plus : 0.0;
  d.b = d.c * (1.0 + d.c) * op_norm(pm) * op_norm(pp);
  d.smallness_bound = d.lambda / (d.m * d.c * (1.0 + std::sqrt(d.c)));
  d.certificate = d.h_norm <= d.smallness_bound && d.mu_minus > 0.0 && d.mu_plus > 0.0 && d.nu > 0.0;
  return d;
}

StableGraph stable_space_graph(OperatorPath const &path, GraphOptions const &opts)
{
  Index const n = path.dim();
  StableGraph out;
  double tau = 0.0;
  for (;; tau += 1.0) {
    if (tau > opts.max_tau) {
      throw NumericalError("smallness-violated",
                           "no tail truncation up to max_tau satisfies the smallness certificate");
    }
    out.data = dichotomy_data(path, tau);
    if (out.data.certificate) break;
  }
  Splitting const &split = out.data.splitting;
  Subspace const e_minus = split.minus.range();
  OperatorPath const shifted = path.shifted(tau);
  out.graph.time = tau;
  out.graph.s = Matrix::Zero(n, n);
  if (e_minus.dim() == 0 || e_minus.dim() == n) {
    out.space = e_minus;
    return out;
  }

  out.cut = std::clamp(std::log(10.0 / opts.tol) / out.data.nu, 5.0, opts.max_cut);
  int coarse_iterations = 0;
  Matrix const g_coarse = neumann_graph(shifted, split, e_minus.basis(), out.cut, opts.grid_step, opts.tol,
                                        opts.max_iterations, opts.ode, coarse_iterations);
  Matrix const g_fine = neumann_graph(shifted, split, e_minus.basis(), out.cut, 0.5 * opts.grid_step, opts.tol,
                                      opts.max_iterations, opts.ode, out.iterations);
  Matrix const y0 = (4.0 * g_fine - g_coarse) / 3.0;

  out.graph.s = y0 * e_minus.basis().adjoint() * split.minus.matrix();
  out.graph.norm = op_norm(out.graph.s);
  Matrix const a0 = path.end_plus();
  out.graph.bound = out.data.c * out.data.c *
                    envelope_integral(path, a0, tau, std::max(40.0, 30.0 / out.data.nu), out.data.nu, false);

  Matrix const w_tau = thin_q(e_minus.basis() + y0);
  out.space = Subspace::from_orthonormal(transport_subspace(path, tau, 0.0, w_tau, opts.ode), 1e-8);
  return out;
}

Matrix graph_over(Matrix const &v, Projector const &onto, Projector const &along, double condition_cap,
                  double *condition)
{
  Subspace const base = onto.range();
  Index const n = v.rows();
  if (v.cols() != base.dim()) {
    throw NumericalError("graph-dimension", "subspace dimension differs from the base of the graph");
  }
  if (base.dim() == 0) return Matrix::Zero(n, n);
  Matrix const coords = base.basis().adjoint() * onto.matrix() * v;
  Matrix const fibre = along.matrix() * v;
  // X coords = fibre  <=>  coords^* X^* = fibre^*.
  SolveResult const r = solve(coords.adjoint(), fibre.adjoint(), condition_cap);
  if (condition) *condition = r.condition;
  return r.x.adjoint() * base.basis().adjoint() * onto.matrix();
}

GraphEvolution graph_evolution(OperatorPath const &path, double t, InvariantOptions const &opts)
{
  if (t < 0.0) throw InputError("bad-time", "graph_evolution needs t >= 0");
  GraphEvolution out;
  DichotomyData const d = dichotomy_data(path, 0.0);
  out.certificate = d.certificate;
  Projector const &pm = d.splitting.minus;
  Projector const &pp = d.splitting.plus;
  Matrix const a0 = path.end_plus();

  // X_A(t) W^s = W^s of the shifted path.
  Subspace const ws_t = stable_space_limit(path.shifted(t), opts);
  double cond_s = 1.0, cond_t = 1.0;
  out.s.s = graph_over(ws_t.basis(), pm, pp, kDefaultConditionCap, &cond_s);
  out.s.norm = op_norm(out.s.s);
  out.s.time = t;
  out.s.bound = d.nu > 0.0 ? d.c * d.c * envelope_integral(path, a0, t, std::max(40.0, 30.0 / d.nu), d.nu, false)
                           : std::numeric_limits<double>::infinity();

  // X_A(t) E^+ by forward transport, which favours E^+ directions.
  Matrix const et = transport_subspace(path, 0.0, t, pp.range().basis(), opts.ode, opts.delta);
  out.t.s = graph_over(et, pp, pm, kDefaultConditionCap, &cond_t);
  out.t.norm = op_norm(out.t.s);
  out.t.time = t;
  out.t.bound = d.nu > 0.0 ? d.c * d.c * envelope_integral(path, a0, 0.0, t, d.nu, true)
                           : std::numeric_limits<double>::infinity();
  out.denominator_condition = std::max(cond_s, cond_t);
  return out;
}

} // namespace hypflow

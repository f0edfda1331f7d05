#include "hypflow/spectral.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hypflow {

namespace {

constexpr int kPanelNodes = 16;

struct GaussLegendre
{
  std::array<double, kPanelNodes> x{};
  std::array<double, kPanelNodes> w{};
};

// Golub-Welsch on the Jacobi matrix of the Legendre recurrence.
GaussLegendre const &gauss_legendre()
{
  static GaussLegendre const rule = [] {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(kPanelNodes, kPanelNodes);
    for (int k = 1; k < kPanelNodes; ++k) {
      double const b = k / std::sqrt(4.0 * k * k - 1.0);
      jac(k, k - 1) = b;
      jac(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    GaussLegendre r;
    for (int k = 0; k < kPanelNodes; ++k) {
      r.x[k] = es.eigenvalues()(k);
      r.w[k] = 2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
    }
    return r;
  }();
  return rule;
}

using Integrand = std::function<Matrix(Scalar)>;

class PanelIntegrator
{
public:
  PanelIntegrator(Integrand g, Index rows, Index cols, int max_nodes)
    : g_(std::move(g)), rows_(rows), cols_(cols), max_nodes_(max_nodes)
  {}

  // Integral of g(z) dz along the straight segment z0 -> z1.
  Matrix panel(Scalar z0, Scalar z1)
  {
    auto const &gl = gauss_legendre();
    Scalar const half = 0.5 * (z1 - z0);
    Scalar const mid = 0.5 * (z1 + z0);
    Matrix acc = Matrix::Zero(rows_, cols_);
    for (int k = 0; k < kPanelNodes; ++k) {
      acc += gl.w[k] * g_(mid + half * gl.x[k]);
    }
    evaluations_ += kPanelNodes;
    if (evaluations_ > 64 * max_nodes_) {
      throw NumericalError("quadrature-no-convergence", "contour quadrature exceeded its evaluation budget");
    }
    return half * acc;
  }

  Matrix adaptive(Scalar z0, Scalar z1, Matrix const &whole, double tol, int depth)
  {
    Scalar const mid = 0.5 * (z0 + z1);
    Matrix left = panel(z0, mid);
    Matrix right = panel(mid, z1);
    Matrix sum = left + right;
    if ((sum - whole).norm() <= tol || depth >= 40) {
      accepted_nodes_ += 2 * kPanelNodes;
      return sum;
    }
    return adaptive(z0, mid, left, 0.5 * tol, depth + 1) + adaptive(mid, z1, right, 0.5 * tol, depth + 1);
  }

  int accepted_nodes() const { return accepted_nodes_; }

private:
  Integrand g_;
  Index rows_, cols_;
  int max_nodes_;
  int evaluations_ = 0;
  int accepted_nodes_ = 0;
};

struct RawIntegral
{
  Matrix value;
  int nodes = 0;
};

// Counterclockwise integral of g around the contour, divided by 2 pi i.
RawIntegral integrate_ccw(Contour const &gamma, Integrand const &g, Index rows, Index cols, double tol,
                          int max_nodes)
{
  Scalar const two_pi_i(0.0, 2.0 * std::numbers::pi);
  RawIntegral out;
  if (auto const *rect = std::get_if<RectangleShape>(&gamma.shape())) {
    std::array<Scalar, 5> const corners{Scalar(rect->re_min, rect->im_min), Scalar(rect->re_max, rect->im_min),
                                        Scalar(rect->re_max, rect->im_max), Scalar(rect->re_min, rect->im_max),
                                        Scalar(rect->re_min, rect->im_min)};
    PanelIntegrator pi(g, rows, cols, max_nodes);
    // Initial panels per side follow the requested node count.
    int const per_side = std::max(1, gamma.nodes() / (4 * kPanelNodes));
    std::vector<std::pair<Scalar, Scalar>> panels;
    std::vector<Matrix> coarse;
    Matrix total = Matrix::Zero(rows, cols);
    for (int s = 0; s < 4; ++s) {
      for (int p = 0; p < per_side; ++p) {
        Scalar const a = corners[s] + (corners[s + 1] - corners[s]) * (double(p) / per_side);
        Scalar const b = corners[s] + (corners[s + 1] - corners[s]) * (double(p + 1) / per_side);
        panels.emplace_back(a, b);
        coarse.push_back(pi.panel(a, b));
        total += coarse.back();
      }
    }
    double const scale = std::max(1.0, total.norm());
    double const panel_tol = tol * scale / static_cast<double>(panels.size());
    Matrix acc = Matrix::Zero(rows, cols);
    for (std::size_t k = 0; k < panels.size(); ++k) {
      acc += pi.adaptive(panels[k].first, panels[k].second, coarse[k], panel_tol, 0);
    }
    out.value = acc / two_pi_i;
    out.nodes = pi.accepted_nodes();
  } else {
    auto const &circ = std::get<CircleShape>(gamma.shape());
    auto trapezoid = [&](int n) {
      Matrix acc = Matrix::Zero(rows, cols);
      for (int k = 0; k < n; ++k) {
        double const theta = 2.0 * std::numbers::pi * k / n;
        Scalar const e = std::polar(1.0, theta);
        Scalar const dz = Scalar(0.0, 1.0) * circ.radius * e;
        acc += g(circ.center + circ.radius * e) * dz;
      }
      return Matrix((acc * (2.0 * std::numbers::pi / n)) / two_pi_i);
    };
    int n = std::max(16, gamma.nodes() + (gamma.nodes() % 2));
    Matrix prev = trapezoid(n);
    while (true) {
      if (2 * n > max_nodes) {
        throw NumericalError("quadrature-no-convergence",
                             "circle quadrature did not converge within the node cap");
      }
      Matrix next = trapezoid(2 * n);
      n *= 2;
      double const diff = (next - prev).norm();
      prev = std::move(next);
      if (diff <= tol * std::max(1.0, prev.norm())) break;
    }
    out.value = std::move(prev);
    out.nodes = n;
  }
  return out;
}

void check_trace_clearance(Matrix const &a, Contour const &gamma, double margin, bool require_enclosed)
{
  Vector const ev = eigenvalues(a);
  double const clearance = margin * (1.0 + op_norm(a));
  for (Index i = 0; i < ev.size(); ++i) {
    if (gamma.distance_to_trace(ev(i)) <= clearance) {
      std::ostringstream os;
      os << "eigenvalue " << ev(i) << " lies within " << clearance << " of the contour";
      throw NumericalError("contour-too-close", os.str());
    }
    if (require_enclosed && !gamma.encloses(ev(i))) {
      std::ostringstream os;
      os << "contour does not surround eigenvalue " << ev(i);
      throw InputError("contour-not-surrounding", os.str());
    }
  }
}

CalculusResult contour_calculus(Matrix const &a, HolomorphicFn const &f, Contour const &gamma,
                                QuadratureOptions const &opts)
{
  Index const n = a.rows();
  Matrix const id = Matrix::Identity(n, n);
  Integrand g = [&](Scalar z) -> Matrix {
    Scalar const fz = f(z);
    if (!std::isfinite(fz.real()) || !std::isfinite(fz.imag())) {
      throw NumericalError("function-not-finite", "holomorphic function returned a non-finite value on the contour");
    }
    Eigen::PartialPivLU<Matrix> lu(a - z * id);
    return fz * lu.solve(id);
  };

  // Orientation from the constant function on a 1x1 matrix placed inside.
  Scalar const z0 = gamma.interior_point();
  Integrand probe = [&](Scalar z) -> Matrix { return Matrix::Constant(1, 1, 1.0 / (z0 - z)); };
  RawIntegral const cal = integrate_ccw(gamma, probe, 1, 1, 1e-12, 1 << 20);
  int const orientation = cal.value(0, 0).real() > 0.0 ? 1 : -1;

  RawIntegral raw = integrate_ccw(gamma, g, n, n, opts.tol, opts.max_nodes);
  if (raw.nodes > opts.max_nodes) {
    std::ostringstream os;
    os << "contour quadrature needed " << raw.nodes << " nodes (cap " << opts.max_nodes << ")";
    throw NumericalError("quadrature-no-convergence", os.str());
  }
  return {orientation * raw.value, raw.nodes, orientation};
}

} // namespace

Contour::Contour(std::variant<RectangleShape, CircleShape> shape, int nodes) : shape_(shape), nodes_(nodes)
{
  if (nodes_ < 16 || nodes_ % 2 != 0) {
    throw InputError("bad-contour", "contour node count must be even and at least 16");
  }
}

Contour Contour::rectangle(double re_min, double re_max, double im_min, double im_max, int nodes)
{
  if (!(re_max > re_min) || !(im_max > im_min)) {
    throw InputError("bad-contour", "rectangle contour must have positive measure");
  }
  return Contour(RectangleShape{re_min, re_max, im_min, im_max}, nodes);
}

Contour Contour::circle(Scalar center, double radius, int nodes)
{
  if (!(radius > 0.0)) {
    throw InputError("bad-contour", "circle contour must have positive radius");
  }
  return Contour(CircleShape{center, radius}, nodes);
}

double Contour::distance_to_trace(Scalar z) const
{
  if (auto const *r = std::get_if<RectangleShape>(&shape_)) {
    double const x = z.real(), y = z.imag();
    auto seg = [](double px, double py, double ax, double ay, double bx, double by) {
      double const dx = bx - ax, dy = by - ay;
      double t = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy);
      t = std::clamp(t, 0.0, 1.0);
      return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
    };
    return std::min({seg(x, y, r->re_min, r->im_min, r->re_max, r->im_min),
                     seg(x, y, r->re_max, r->im_min, r->re_max, r->im_max),
                     seg(x, y, r->re_max, r->im_max, r->re_min, r->im_max),
                     seg(x, y, r->re_min, r->im_max, r->re_min, r->im_min)});
  }
  auto const &c = std::get<CircleShape>(shape_);
  return std::abs(std::abs(z - c.center) - c.radius);
}

bool Contour::encloses(Scalar z) const
{
  if (auto const *r = std::get_if<RectangleShape>(&shape_)) {
    return z.real() > r->re_min && z.real() < r->re_max && z.imag() > r->im_min && z.imag() < r->im_max;
  }
  auto const &c = std::get<CircleShape>(shape_);
  return std::abs(z - c.center) < c.radius;
}

Scalar Contour::interior_point() const
{
  if (auto const *r = std::get_if<RectangleShape>(&shape_)) {
    return {0.5 * (r->re_min + r->re_max), 0.5 * (r->im_min + r->im_max)};
  }
  return std::get<CircleShape>(shape_).center;
}

double Contour::perimeter() const
{
  if (auto const *r = std::get_if<RectangleShape>(&shape_)) {
    return 2.0 * ((r->re_max - r->re_min) + (r->im_max - r->im_min));
  }
  return 2.0 * std::numbers::pi * std::get<CircleShape>(shape_).radius;
}

Hyperbolicity is_hyperbolic(Matrix const &a, double tol)
{
  Vector const ev = eigenvalues(a);
  Hyperbolicity h;
  h.margin = ev.real().cwiseAbs().minCoeff();
  h.hyperbolic = h.margin > tol;
  return h;
}

Splitting spectral_projectors(Matrix const &a, QuadratureOptions const &opts)
{
  require_finite(a);
  require_square(a);
  Hyperbolicity const h = is_hyperbolic(a);
  if (!h.hyperbolic) {
    std::ostringstream os;
    os << "matrix is not hyperbolic (min |Re lambda| = " << h.margin << ")";
    throw InputError("not-hyperbolic", os.str());
  }
  Index const n = a.rows();
  double const bound = op_norm(a) + 1.0;
  Contour const gamma = Contour::rectangle(0.5 * h.margin, bound, -bound, bound);
  check_trace_clearance(a, gamma, opts.trace_margin, false);

  HolomorphicFn const one = [](Scalar) { return Scalar(1.0); };
  QuadratureOptions local = opts;
  CalculusResult res;
  Matrix p;
  double residual = 0.0;
  for (int attempt = 0; attempt < 3; ++attempt) {
    res = contour_calculus(a, one, gamma, local);
    p = is_real(a, 0.0) ? strip_imaginary(res.value) : res.value;
    residual = (p * p - p).norm();
    if (residual < 1e-9) break;
    local.tol *= 1e-2;
  }
  if (!(residual < 1e-8 * (1.0 + std::pow(op_norm(p), 2)))) {
    std::ostringstream os;
    os << "spectral projector quadrature did not converge (||P^2 - P|| = " << residual << ")";
    throw NumericalError("quadrature-no-convergence", os.str());
  }
  Splitting s{Projector(p), Projector(Matrix::Identity(n, n) - p), h.margin, res.nodes};
  return s;
}

CalculusResult functional_calculus_ex(Matrix const &a, HolomorphicFn const &f, Contour const &gamma,
                                      QuadratureOptions const &opts)
{
  require_finite(a);
  require_square(a);
  check_trace_clearance(a, gamma, opts.trace_margin, true);
  return contour_calculus(a, f, gamma, opts);
}

Contour surrounding_circle(Matrix const &a, double pad)
{
  Vector const ev = eigenvalues(a);
  double const r = ev.cwiseAbs().maxCoeff();
  return Contour::circle(0.0, r + pad, 64);
}

Matrix hyperbolic_retraction(Matrix const &a)
{
  Splitting const s = spectral_projectors(a);
  return s.plus.matrix() - s.minus.matrix();
}

int leray_schauder_degree(Matrix const &t)
{
  require_finite(t);
  require_square(t);
  if (!is_real(t)) {
    throw InputError("complex-operator", "Leray-Schauder degree is defined for real operators");
  }
  Matrix const tr = strip_imaginary(t);
  if (numerical_rank(tr).rank < tr.rows()) {
    throw InputError("singular", "Leray-Schauder degree needs an invertible operator");
  }
  int negative = 0;
  for (auto const &c : cluster_eigenvalues(eigenvalues(tr))) {
    bool const real_axis = std::abs(c.value.imag()) <= kClusterRadius * (1.0 + std::abs(c.value));
    if (real_axis && c.value.real() < 0.0) negative += c.multiplicity;
  }
  return negative % 2 == 0 ? 1 : -1;
}

} // namespace hypflow

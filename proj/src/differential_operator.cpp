#include "hypflow/differential_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "hypflow/propagator.hpp"
#include "hypflow/spectral.hpp"

namespace hypflow {

namespace {

Matrix thin_q(Matrix const &y)
{
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

// R of the block QR factorization: block upper bidiagonal, n m x n m.
struct BlockR
{
  Index n = 0;
  std::vector<Matrix> diag; // m blocks, upper triangular
  std::vector<Matrix> off;  // m - 1 blocks
};

// R of the block QR factorization of [M; shift I]: block upper bidiagonal,
// n m x n m, with R^* R = M^* M + shift^2 I.
BlockR block_qr(GridOperator const &op, double shift = 0.0)
{
  Index const n = op.dim();
  Index const m = op.nodes();
  Matrix const id = Matrix::Identity(n, n);
  BlockR r;
  r.n = n;
  r.diag.resize(static_cast<std::size_t>(m));
  r.off.resize(static_cast<std::size_t>(m - 1));
  Index const extra = shift > 0.0 ? n : 0;
  Matrix top = id; // Dirichlet row u_0 = 0
  Matrix panel(2 * n + extra, n), next(2 * n + extra, n);
  for (Index j = 0; j < m; ++j) {
    panel.topRows(n) = top;
    panel.middleRows(n, n) = j + 1 < m ? op.lower(j) : id;
    if (extra) panel.bottomRows(n) = shift * id;
    Eigen::HouseholderQR<Matrix> qr(panel);
    r.diag[static_cast<std::size_t>(j)] = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    if (j + 1 < m) {
      next.setZero();
      next.middleRows(n, n) = op.upper(j);
      next.applyOnTheLeft(qr.householderQ().adjoint());
      r.off[static_cast<std::size_t>(j)] = next.topRows(n);
      if (extra) {
        // The leftover rows only matter through their Gram matrix.
        Eigen::HouseholderQR<Matrix> rest(next.bottomRows(n + extra));
        top = rest.matrixQR().topRows(n).triangularView<Eigen::Upper>();
      } else {
        top = next.middleRows(n, n);
      }
    }
  }
  return r;
}

Matrix r_times(BlockR const &r, Matrix const &x)
{
  Index const n = r.n;
  auto const m = static_cast<Index>(r.diag.size());
  Matrix y(x.rows(), x.cols());
  for (Index j = 0; j < m; ++j) {
    y.middleRows(j * n, n) = r.diag[static_cast<std::size_t>(j)] * x.middleRows(j * n, n);
    if (j + 1 < m) y.middleRows(j * n, n) += r.off[static_cast<std::size_t>(j)] * x.middleRows((j + 1) * n, n);
  }
  return y;
}

Matrix r_adjoint_times(BlockR const &r, Matrix const &x)
{
  Index const n = r.n;
  auto const m = static_cast<Index>(r.diag.size());
  Matrix y(x.rows(), x.cols());
  for (Index j = 0; j < m; ++j) {
    y.middleRows(j * n, n) = r.diag[static_cast<std::size_t>(j)].adjoint() * x.middleRows(j * n, n);
    if (j > 0) y.middleRows(j * n, n) += r.off[static_cast<std::size_t>(j - 1)].adjoint() * x.middleRows((j - 1) * n, n);
  }
  return y;
}

// Solves R x = b.
Matrix r_solve(BlockR const &r, Matrix b)
{
  Index const n = r.n;
  auto const m = static_cast<Index>(r.diag.size());
  for (Index j = m; j-- > 0;) {
    auto rows = b.middleRows(j * n, n);
    if (j + 1 < m) rows -= r.off[static_cast<std::size_t>(j)] * b.middleRows((j + 1) * n, n);
    r.diag[static_cast<std::size_t>(j)].triangularView<Eigen::Upper>().solveInPlace(rows);
  }
  return b;
}

// Solves R^* y = c.
Matrix r_adjoint_solve(BlockR const &r, Matrix c)
{
  Index const n = r.n;
  auto const m = static_cast<Index>(r.diag.size());
  for (Index j = 0; j < m; ++j) {
    auto rows = c.middleRows(j * n, n);
    if (j > 0) rows -= r.off[static_cast<std::size_t>(j - 1)].adjoint() * c.middleRows((j - 1) * n, n);
    r.diag[static_cast<std::size_t>(j)].adjoint().triangularView<Eigen::Lower>().solveInPlace(rows);
  }
  return c;
}

RankCut rank_cut(SmallSingular const &s, double rel_tol)
{
  RankCut cut;
  cut.smallest = s.values;
  cut.threshold = rel_tol * s.largest;
  auto const p = s.values.size();
  while (cut.dim < p && s.values(cut.dim) <= cut.threshold) ++cut.dim;
  // Distance of the cut from its nearest neighbours on either side.
  double const below = cut.dim > 0 ? s.values(cut.dim - 1) : 0.0;
  double const above = cut.dim < p ? s.values(cut.dim) : std::numeric_limits<double>::infinity();
  double const lower = below > 0.0 ? cut.threshold / below : std::numeric_limits<double>::infinity();
  cut.gap_ratio = std::min(above / cut.threshold, lower);
  return cut;
}

double margin_of(Matrix const &a) { return is_hyperbolic(a).margin; }

// Fine-grid data of the half line [0, length] for a path and a splitting P(0).
struct HalfLine
{
  OperatorPath path;
  double hf = 0.0;
  std::size_t steps = 0; // fine steps, even
  std::vector<Matrix> phi, psi, p;
  Index n = 0;
};

HalfLine build_half_line(OperatorPath const &path, Subspace const &range0, Subspace const &kernel0,
                         RightInverseOptions const &opts)
{
  HalfLine hl{path, 0.0, 0, {}, {}, {}, 0};
  hl.n = path.dim();
  auto const coarse = static_cast<std::size_t>(std::llround(opts.length / opts.step));
  if (coarse < 8) throw InputError("bad-window", "right inverse needs at least 8 grid steps");
  hl.steps = 2 * coarse;
  hl.hf = opts.length / static_cast<double>(hl.steps);
  std::size_t const nodes = hl.steps + 1;
  Matrix const id = Matrix::Identity(hl.n, hl.n);
  hl.phi.resize(hl.steps);
  hl.psi.resize(hl.steps);
  for (std::size_t i = 0; i < hl.steps; ++i) {
    double const a = hl.hf * static_cast<double>(i), b = hl.hf * static_cast<double>(i + 1);
    hl.phi[i] = transport(path, a, b, id, opts.invariant.ode);
    hl.psi[i] = transport(path, b, a, id, opts.invariant.ode);
  }

  // X(t) W^s backwards from the end of the window, X(t) X_s forwards from 0.
  std::vector<Matrix> w(nodes), k(nodes);
  if (range0.dim() > 0 && range0.dim() < hl.n) {
    w[hl.steps] = stable_space_limit(path.shifted(opts.length), opts.invariant).basis();
    for (std::size_t i = hl.steps; i-- > 0;) w[i] = thin_q(hl.psi[i] * w[i + 1]);
    double const drift = delta1(Subspace::from_orthonormal(w[0], 1e-8), range0);
    if (drift > 1e-6) {
      std::ostringstream os;
      os << "projector range is " << drift << " away from the stable space; the Green kernel would not decay";
      throw NumericalError("envelope-violated", os.str());
    }
    k[0] = kernel0.basis();
    for (std::size_t i = 0; i < hl.steps; ++i) k[i + 1] = thin_q(hl.phi[i] * k[i]);
  }
  hl.p.resize(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    if (range0.dim() == 0) {
      hl.p[i] = Matrix::Zero(hl.n, hl.n);
    } else if (range0.dim() == hl.n) {
      hl.p[i] = id;
    } else {
      hl.p[i] = projector_onto_along(Subspace::from_orthonormal(w[i], 1e-8), Subspace::from_orthonormal(k[i], 1e-8))
                    .matrix();
    }
  }
  return hl;
}

// Trapezoid recursions on the sub-grid with stride s (1 = fine, 2 = coarse).
std::vector<Vector> half_line_quadrature(HalfLine const &hl, std::vector<Vector> const &h, std::size_t s)
{
  std::size_t const nodes = hl.steps / s + 1;
  double const dt = hl.hf * static_cast<double>(s);
  Matrix const id = Matrix::Identity(hl.n, hl.n);
  auto step_phi = [&](std::size_t k) {
    Matrix m = hl.phi[k * s];
    for (std::size_t q = 1; q < s; ++q) m = hl.phi[k * s + q] * m;
    return m;
  };
  auto step_psi = [&](std::size_t k) {
    Matrix m = hl.psi[k * s + s - 1];
    for (std::size_t q = s - 1; q-- > 0;) m = hl.psi[k * s + q] * m;
    return m;
  };
  std::vector<Vector> i1(nodes, Vector::Zero(hl.n)), i2(nodes, Vector::Zero(hl.n)), u(nodes);
  for (std::size_t k = 0; k + 1 < nodes; ++k) {
    Matrix const &pk = hl.p[k * s];
    Matrix const &pn = hl.p[(k + 1) * s];
    Matrix const f = step_phi(k);
    i1[k + 1] = pn * (f * i1[k] + 0.5 * dt * (f * (pk * h[k * s]) + pn * h[(k + 1) * s]));
  }
  for (std::size_t k = nodes - 1; k-- > 0;) {
    Matrix const qk = id - hl.p[k * s];
    Matrix const qn = id - hl.p[(k + 1) * s];
    Matrix const g = step_psi(k);
    i2[k] = qk * (g * i2[k + 1] + 0.5 * dt * (g * (qn * h[(k + 1) * s]) + qk * h[k * s]));
  }
  for (std::size_t k = 0; k < nodes; ++k) u[k] = i1[k] - i2[k];
  return u;
}

struct Envelope
{
  double c = 0.0;
  double lambda = 0.0;
};

// Fits ||G(t, tau)|| <= c e^{-lambda |t - tau|} on a sub-grid of spacing about 0.5.
Envelope fit_kernel_envelope(HalfLine const &hl)
{
  std::size_t const stride = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(0.5 / hl.hf)) & ~std::size_t{1});
  Matrix const id = Matrix::Identity(hl.n, hl.n);
  std::vector<double> best; // per lag (in strides) max log norm
  auto record = [&](std::size_t lag, double v) {
    if (best.size() <= lag) best.resize(lag + 1, -std::numeric_limits<double>::infinity());
    best[lag] = std::max(best[lag], std::log(std::max(v, 1e-300)));
  };
  for (std::size_t start = 0; start <= hl.steps; start += stride) {
    Matrix c = hl.p[start];
    record(0, op_norm(c));
    for (std::size_t i = start; i < hl.steps; ++i) {
      c = hl.p[i + 1] * (hl.phi[i] * c);
      if ((i + 1 - start) % stride == 0) record((i + 1 - start) / stride, op_norm(c));
    }
    Matrix d = id - hl.p[start];
    record(0, op_norm(d));
    for (std::size_t i = start; i-- > 0;) {
      d = (id - hl.p[i]) * (hl.psi[i] * d);
      if ((start - i) % stride == 0) record((start - i) / stride, op_norm(d));
    }
  }
  // Least squares line through the per-lag envelope, then lift c over it.
  double const dx = hl.hf * static_cast<double>(stride);
  std::size_t const m = best.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < m; ++k) {
    double const x = dx * static_cast<double>(k);
    sx += x;
    sy += best[k];
    sxx += x * x;
    sxy += x * best[k];
  }
  double const md = static_cast<double>(m);
  double const slope = m > 1 ? (md * sxy - sx * sy) / (md * sxx - sx * sx) : 0.0;
  Envelope e;
  e.lambda = -slope;
  double logc = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m; ++k) logc = std::max(logc, best[k] - slope * dx * static_cast<double>(k));
  e.c = std::exp(logc);
  return e;
}

RightInverseResult run_right_inverse(HalfLine const &hl, Forcing const &h)
{
  std::size_t const nodes = hl.steps + 1;
  std::vector<Vector> hv(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    hv[i] = h(hl.hf * static_cast<double>(i));
    if (hv[i].size() != hl.n) throw InputError("dimension-mismatch", "forcing has the wrong dimension");
  }
  auto const fine = half_line_quadrature(hl, hv, 1);
  auto const coarse = half_line_quadrature(hl, hv, 2);
  RightInverseResult out;
  out.u.t0 = 0.0;
  out.u.step = 2.0 * hl.hf;
  out.u.values.resize(coarse.size());
  for (std::size_t k = 0; k < coarse.size(); ++k) out.u.values[k] = (4.0 * fine[2 * k] - coarse[k]) / 3.0;

  // Defect with fourth-order central differences.
  auto const &u = out.u.values;
  double const dt = out.u.step;
  for (std::size_t k = 2; k + 2 < u.size(); ++k) {
    double const t = out.u.time(k);
    Vector const du = (-u[k + 2] + 8.0 * u[k + 1] - 8.0 * u[k - 1] + u[k - 2]) / (12.0 * dt);
    out.defect = std::max(out.defect, (du - hl.path(t) * u[k] - hv[2 * k]).norm());
  }

  Envelope const env = fit_kernel_envelope(hl);
  out.envelope_c = env.c;
  out.envelope_lambda = env.lambda;
  std::vector<double> hn(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) hn[k] = hv[2 * k].norm();
  for (std::size_t k = 0; k < u.size() && out.envelope_ok; ++k) {
    double bound = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
      double const w = (j == 0 || j + 1 == u.size()) ? 0.5 : 1.0;
      bound += w * hn[j] * std::exp(-env.lambda * std::abs(out.u.time(k) - out.u.time(j)));
    }
    bound *= env.c * dt;
    if (u[k].norm() > 1.05 * bound + 1e-9) out.envelope_ok = false;
  }
  if (!(env.lambda > 0.0) || !out.envelope_ok) {
    std::ostringstream os;
    os << "right inverse leaves the exponential envelope (fitted rate " << env.lambda << ")";
    throw NumericalError("envelope-violated", os.str());
  }
  return out;
}

// X(t) x0 on the coarse output grid for x0 in the range of P(0).
std::vector<Vector> homogeneous(HalfLine const &hl, Vector const &x0)
{
  std::vector<Vector> out(hl.steps / 2 + 1);
  Vector x = hl.p[0] * x0;
  out[0] = x;
  for (std::size_t i = 0; i < hl.steps; ++i) {
    x = hl.p[i + 1] * (hl.phi[i] * x);
    if ((i + 1) % 2 == 0) out[(i + 1) / 2] = x;
  }
  return out;
}

Projector orthogonal_split(Subspace const &w) { return projector_onto_along(w, w.orthogonal_complement()); }

} // namespace

GridOperator::GridOperator(OperatorPath const &path, double half_width, double h)
  : n_(path.dim()), t_(half_width), h_(h)
{
  auto const intervals = static_cast<Index>(std::llround(2.0 * half_width / h));
  if (intervals < 2 || std::abs(static_cast<double>(intervals) * h - 2.0 * half_width) > 1e-9 * half_width) {
    throw InputError("bad-grid", "grid step must divide the window 2T");
  }
  m_ = intervals + 1;
  Matrix const id = Matrix::Identity(n_, n_);
  lower_.resize(static_cast<std::size_t>(intervals));
  upper_.resize(static_cast<std::size_t>(intervals));
  for (Index i = 0; i < intervals; ++i) {
    Matrix const a = path(node_time(i) + 0.5 * h_);
    lower_[static_cast<std::size_t>(i)] = -id / h_ - 0.5 * a;
    upper_[static_cast<std::size_t>(i)] = id / h_ - 0.5 * a;
  }
}

Vector GridOperator::apply(Vector const &x) const
{
  Vector y(n_ * (m_ + 1));
  y.head(n_) = x.head(n_);
  for (Index i = 0; i + 1 < m_; ++i) {
    y.segment((i + 1) * n_, n_) = lower(i) * x.segment(i * n_, n_) + upper(i) * x.segment((i + 1) * n_, n_);
  }
  y.tail(n_) = x.tail(n_);
  return y;
}

Matrix GridOperator::dense() const
{
  Matrix d = Matrix::Zero(n_ * (m_ + 1), n_ * m_);
  d.topLeftCorner(n_, n_).setIdentity();
  for (Index i = 0; i + 1 < m_; ++i) {
    d.block((i + 1) * n_, i * n_, n_, n_) = lower(i);
    d.block((i + 1) * n_, (i + 1) * n_, n_, n_) = upper(i);
  }
  d.bottomRightCorner(n_, n_).setIdentity();
  return d;
}

SmallSingular smallest_singular(GridOperator const &op, Index count, double tol)
{
  BlockR const r = block_qr(op);
  Index const cols = op.dim() * op.nodes();
  Index const want = std::min(count, cols);
  Index const p = std::min(2 * want + 2, cols);
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal;
  Matrix x(cols, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < cols; ++i) x(i, j) = Scalar(normal(rng), normal(rng));
  x = thin_q(x);

  SmallSingular out;
  // sigma_max by power iteration on R^* R.
  Vector v = x.col(0);
  for (int it = 0; it < 60; ++it) {
    Vector w = r_adjoint_times(r, r_times(r, v));
    double const nw = w.norm();
    if (nw == 0.0) break;
    v = w / nw;
    out.largest = std::sqrt(nw);
  }
  // The shift caps the amplification of (near) kernel directions so the rest of
  // the block does not drown in their rounding errors.
  BlockR const rs = block_qr(op, 1e-6 * out.largest);

  // Values far above any plausible rank cut only need to settle roughly; the
  // extra block columns speed up convergence near the continuum edge.
  Eigen::VectorXd prev = Eigen::VectorXd::Constant(p, std::numeric_limits<double>::infinity());
  double const loose = 1e-3 * out.largest;
  for (out.iterations = 1; out.iterations <= 300; ++out.iterations) {
    x = thin_q(r_solve(rs, r_adjoint_solve(rs, x)));
    Eigen::JacobiSVD<Matrix> svd(r_times(r, x), Eigen::ComputeThinV);
    Eigen::VectorXd const vals = svd.singularValues().reverse();
    bool done = true;
    for (Index k = 0; k < want; ++k) {
      double const change = std::abs(vals(k) - prev(k));
      double const allowed = vals(k) > loose ? 1e-3 * vals(k) : 1e-6 * vals(k) + tol * out.largest;
      if (change > allowed) done = false;
    }
    prev = vals;
    if (done) {
      out.values = vals.head(want);
      out.vectors = (x * svd.matrixV().rowwise().reverse()).leftCols(want);
      return out;
    }
  }
  throw NumericalError("rank-no-convergence", "inverse subspace iteration for small singular values did not settle");
}

WindowChoice choose_window(OperatorPath const &path, double tail_tol)
{
  double const margin = std::min(margin_of(path.end_minus()), margin_of(path.end_plus()));
  WindowChoice w;
  w.half_width = std::clamp(20.0 / std::max(margin, 1e-12), 10.0, 40.0);
  if (auto const tail = tail_truncation(path, tail_tol)) w.half_width = std::clamp(std::max(w.half_width, *tail + 2.0), 10.0, 40.0);
  double const norm = path.sup_norm(-w.half_width, w.half_width);
  double h = std::min(0.05, 1.0 / (4.0 * std::max(norm, 1e-12)));
  auto const intervals = static_cast<double>(std::ceil(2.0 * w.half_width / h));
  w.step = 2.0 * w.half_width / intervals;
  return w;
}

GridOperator assemble(OperatorPath const &path, double half_width, double h, double tail_tol)
{
  for (Matrix const *limit : {&path.end_minus(), &path.end_plus()}) {
    Hyperbolicity const hyp = is_hyperbolic(*limit);
    if (!hyp.hyperbolic) {
      std::ostringstream os;
      os << "asymptotic limit is not hyperbolic (min |Re lambda| = " << hyp.margin << ")";
      throw InputError("not-hyperbolic", os.str());
    }
  }
  auto const tail = tail_truncation(path, tail_tol, std::numeric_limits<double>::infinity());
  if (!tail || *tail > half_width + 1e-9) {
    std::ostringstream os;
    os << "tail residual exceeds " << tail_tol << " inside the window [-" << half_width << ", " << half_width << "]";
    throw InputError("window-too-small", os.str());
  }
  double const norm = path.sup_norm(-half_width, half_width);
  double const hmax = std::min(0.1, 1.0 / (4.0 * std::max(norm, 1e-300)));
  if (h > hmax * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << "grid step " << h << " exceeds min(0.1, 1/(4 ||A||_inf)) = " << hmax;
    throw InputError("grid-too-coarse", os.str());
  }
  return GridOperator(path, half_width, h);
}

IndexReport numeric_index(OperatorPath const &path, IndexOptions const &opts)
{
  WindowChoice w = choose_window(path, opts.tail_tol);
  if (opts.half_width > 0.0) w.half_width = opts.half_width;
  if (opts.step > 0.0) w.step = opts.step;
  GridOperator const op = assemble(path, w.half_width, w.step, opts.tail_tol);
  GridOperator const adj = assemble(path.adjoint_negated(), w.half_width, w.step, opts.tail_tol);
  Index const n = path.dim();

  IndexReport rep;
  rep.half_width = w.half_width;
  rep.step = w.step;
  rep.nodes = op.nodes();
  SmallSingular const sk = smallest_singular(op, n + 2);
  SmallSingular const sc = smallest_singular(adj, n + 2);
  rep.ker_cut = rank_cut(sk, opts.rank_tol);
  rep.coker_cut = rank_cut(sc, opts.rank_tol);
  rep.ker = rep.ker_cut.dim;
  rep.coker = rep.coker_cut.dim;
  rep.index = rep.ker - rep.coker;
  rep.kernel = sk.vectors.leftCols(rep.ker);
  rep.reliable = rep.ker_cut.gap_ratio >= 10.0 && rep.coker_cut.gap_ratio >= 10.0 &&
                 rep.ker < sk.values.size() && rep.coker < sc.values.size();

  Subspace const ws = stable_space_limit(path, opts.invariant);
  Subspace const wu = unstable_space(path, opts.invariant);
  rep.stable_dim = ws.dim();
  rep.unstable_dim = wu.dim();
  rep.pair = pair_index(ws, wu, opts.pair_tol);
  rep.match = rep.pair.index == rep.index;
  return rep;
}

RightInverseResult right_inverse_apply(OperatorPath const &path, Projector const &p_s, Forcing const &h,
                                       RightInverseOptions const &opts)
{
  if (p_s.ambient_dim() != path.dim()) throw InputError("dimension-mismatch", "projector and path sizes differ");
  HalfLine const hl = build_half_line(path, p_s.range(), p_s.kernel(), opts);
  return run_right_inverse(hl, h);
}

RightInverseResult left_right_inverse_apply(OperatorPath const &path, Projector const &p_u, Forcing const &h,
                                            RightInverseOptions const &opts)
{
  OperatorPath const reversed = path.reversed_negated();
  Forcing const g = [&h](double s) { return Vector(-h(-s)); };
  RightInverseResult r = right_inverse_apply(reversed, p_u, g, opts);
  std::reverse(r.u.values.begin(), r.u.values.end());
  r.u.t0 = -r.u.step * static_cast<double>(r.u.values.size() - 1);
  return r;
}

BoundaryMaps boundary_maps(OperatorPath const &path, Forcing const &h_plus, Forcing const &h_minus,
                           RightInverseOptions const &opts)
{
  BoundaryMaps out;
  out.stable = stable_space_limit(path, opts.invariant);
  out.unstable = unstable_space(path, opts.invariant);
  out.p_s = orthogonal_split(out.stable);
  out.p_u = orthogonal_split(out.unstable);
  out.r_plus = right_inverse_apply(path, out.p_s, h_plus, opts).u.values.front();
  out.r_minus = left_right_inverse_apply(path, out.p_u, h_minus, opts).u.values.back();
  return out;
}

double bump(double t, double center, double width)
{
  double const x = (t - center) / width;
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - x * x));
}

std::vector<SurjectivityWitness> surjectivity_witnesses(OperatorPath const &path, RightInverseOptions const &opts)
{
  Subspace const ws = stable_space_limit(path, opts.invariant);
  Subspace const xs = ws.orthogonal_complement();
  Index const n = path.dim();
  HalfLine const hl = build_half_line(path, ws, xs, opts);

  std::vector<SurjectivityWitness> out;
  double const centers[] = {2.0, 3.0, 1.5, 4.0, 5.0};
  double const width = 1.0;
  for (Index j = 0; j < xs.dim(); ++j) {
    SurjectivityWitness wit;
    wit.target = xs.basis().col(j);
    bool ok = false;
    for (double const c : centers) {
      ++wit.attempts;
      // U = -int phi X^{-1}, trapezoid on a fine grid (exact to rounding for bumps).
      double const dt = 0.005;
      auto const steps = static_cast<int>(std::llround(2.0 * width / dt));
      Matrix xinv = transport(path, 0.0, c - width, Matrix::Identity(n, n), opts.invariant.ode, Side::Right);
      Matrix u = Matrix::Zero(n, n);
      for (int k = 0; k <= steps; ++k) {
        double const t = c - width + dt * k;
        if (k > 0) xinv = transport(path, t - dt, t, xinv, opts.invariant.ode, Side::Right);
        u -= dt * bump(t, c, width) * xinv;
      }
      Eigen::PartialPivLU<Matrix> lu(u);
      if (!(lu.rcond() > 1e-10)) continue;
      wit.center = c;
      wit.width = width;
      wit.u_inverse_v = lu.solve(wit.target);
      Vector const dir = wit.u_inverse_v;
      Forcing const h = [dir, c, width](double t) { return Vector(bump(t, c, width) * dir); };
      RightInverseResult const r = run_right_inverse(hl, h);
      wit.error = (r.u.values.front() - wit.target).norm();
      ok = true;
      break;
    }
    if (!ok) {
      throw NumericalError("witness-failed", "no bump center gave an invertible U after 5 attempts");
    }
    out.push_back(std::move(wit));
  }
  return out;
}

MembershipResult range_membership(OperatorPath const &path, Forcing const &h, double tol,
                                  RightInverseOptions const &opts)
{
  Subspace const ws = stable_space_limit(path, opts.invariant);
  Subspace const wu = unstable_space(path, opts.invariant);
  Subspace const xs = ws.orthogonal_complement();
  Subspace const xu = wu.orthogonal_complement();
  HalfLine const plus = build_half_line(path, ws, xs, opts);
  OperatorPath const reversed = path.reversed_negated();
  HalfLine const minus = build_half_line(reversed, wu, xu, opts);

  RightInverseResult const rp = run_right_inverse(plus, h);
  RightInverseResult const rm = run_right_inverse(minus, [&h](double s) { return Vector(-h(-s)); });
  Vector const d = rp.u.values.front() - rm.u.values.front();

  MembershipResult out;
  Subspace const sum = subspace_sum(ws, wu);
  out.distance = dist_point(d, sum);
  out.member = out.distance <= tol;
  if (!out.member) return out;

  // u0 - v0 = r- h - r+ h = -d with u0 in W^s, v0 in W^u.
  Index const n = path.dim();
  Matrix pairing(n, ws.dim() + wu.dim());
  pairing << ws.basis(), -wu.basis();
  Vector coeff = pairing.size() ? Vector(pairing.completeOrthogonalDecomposition().solve(-d)) : Vector();
  Vector const u0 = ws.dim() ? Vector(ws.basis() * coeff.head(ws.dim())) : Vector::Zero(n);
  Vector const v0 = wu.dim() ? Vector(wu.basis() * coeff.tail(wu.dim())) : Vector::Zero(n);

  auto const hp = homogeneous(plus, u0);
  auto const hm = homogeneous(minus, v0);
  std::size_t const k = rp.u.values.size();
  out.u.step = rp.u.step;
  out.u.t0 = -out.u.step * static_cast<double>(k - 1);
  out.u.values.resize(2 * k - 1);
  for (std::size_t i = 0; i < k; ++i) {
    out.u.values[k - 1 - i] = rm.u.values[i] + hm[i];
    out.u.values[k - 1 + i] = rp.u.values[i] + hp[i];
  }
  return out;
}

} // namespace hypflow

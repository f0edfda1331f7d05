#include "hypflow/spectral_flow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "hypflow/spectral.hpp"

namespace hypflow {

namespace {

void require_hyperbolic_end(Matrix const &a, double t, double tol)
{
  Hyperbolicity const h = is_hyperbolic(a, tol);
  if (!h.hyperbolic) {
    std::ostringstream os;
    os << "path is not hyperbolic at t = " << t << " (min |Re lambda| = " << h.margin << ")";
    throw InputError("not-hyperbolic", os.str());
  }
}

// perm[i] = index in `next` of the eigenvalue continuing prev[i] (greedy nearest pairs).
std::vector<Index> match(Vector const &prev, Vector const &next)
{
  Index const n = prev.size();
  std::vector<std::tuple<double, Index, Index>> pairs;
  pairs.reserve(static_cast<std::size_t>(n * n));
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) pairs.emplace_back(std::abs(prev(i) - next(j)), i, j);
  std::sort(pairs.begin(), pairs.end());
  std::vector<Index> perm(static_cast<std::size_t>(n), -1);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (auto const &[d, i, j] : pairs) {
    if (perm[static_cast<std::size_t>(i)] >= 0 || used[static_cast<std::size_t>(j)]) continue;
    perm[static_cast<std::size_t>(i)] = j;
    used[static_cast<std::size_t>(j)] = true;
  }
  return perm;
}

bool positive(Scalar z) { return z.real() > 0.0; }

class CrossingScanner
{
public:
  CrossingScanner(OperatorPath const &path, FlowOptions const &opts) : path_(path), opts_(opts) {}

  Vector eigs(double t) const { return eigenvalues(path_(t)); }

  // Bisects every bracket in which some branch changes sign. A coarse sign change
  // that vanishes under re-matching on the halves was a pairing artifact.
  void scan(double a, Vector const &ea, double b, Vector const &eb, int depth)
  {
    auto const perm = match(ea, eb);
    std::vector<Index> crossing;
    for (Index i = 0; i < ea.size(); ++i) {
      if (positive(ea(i)) != positive(eb(perm[static_cast<std::size_t>(i)]))) crossing.push_back(i);
    }
    if (crossing.empty()) return;
    if (b - a <= opts_.tol || depth > 60) {
      record(a, ea, b, eb, perm, crossing);
      return;
    }
    double const mid = 0.5 * (a + b);
    Vector const em = eigs(mid);
    scan(a, ea, mid, em, depth + 1);
    scan(mid, em, b, eb, depth + 1);
  }

  std::vector<CrossingEvent> events;

private:
  void record(double a, Vector const &ea, double b, Vector const &eb, std::vector<Index> const &perm,
              std::vector<Index> const &crossing)
  {
    double const width = std::max(b - a, 1e-300);
    std::vector<CrossingEvent> local;
    std::vector<Scalar> where;
    for (Index i : crossing) {
      Scalar const lb = eb(perm[static_cast<std::size_t>(i)]);
      double const slope = std::abs(lb.real() - ea(i).real()) / width;
      if (slope < 1e-6) {
        std::ostringstream os;
        os << "tangential crossing near t = " << 0.5 * (a + b) << " (d Re lambda / dt = " << slope << ")";
        throw NumericalError("unresolvable-crossing", os.str());
      }
      int const dir = positive(lb) ? 1 : -1;
      Scalar const at = 0.5 * (ea(i) + lb);
      bool merged = false;
      for (std::size_t k = 0; k < local.size(); ++k) {
        if (local[k].direction == dir && std::abs(where[k] - at) <= 1e-6 * (1.0 + std::abs(at))) {
          ++local[k].multiplicity;
          merged = true;
          break;
        }
      }
      if (!merged) {
        local.push_back(CrossingEvent{0.5 * (a + b), at, dir, 1});
        where.push_back(at);
      }
    }
    events.insert(events.end(), local.begin(), local.end());
  }

  OperatorPath const &path_;
  FlowOptions opts_;
};

std::vector<double> sample_grid(OperatorPath const &path, double t0, double t1, int intervals)
{
  std::vector<double> grid;
  for (int k = 0; k <= intervals; ++k) grid.push_back(t0 + (t1 - t0) * k / intervals);
  for (double t : path.times())
    if (t > t0 && t < t1) grid.push_back(t);
  std::sort(grid.begin(), grid.end());
  std::vector<double> out;
  for (double t : grid)
    if (out.empty() || t - out.back() > 1e-12 * (1.0 + std::abs(t))) out.push_back(t);
  return out;
}

Index rank_plus(Matrix const &a) { return spectral_projectors(a).plus.rank(); }

} // namespace

FlowReport spectral_flow(OperatorPath const &path, FlowOptions const &opts)
{
  FlowReport rep;
  rep.t_start = path.t_first();
  rep.t_end = path.t_last();
  Matrix const a0 = path(rep.t_start), a1 = path(rep.t_end);
  require_hyperbolic_end(a0, rep.t_start, opts.hyperbolic_tol);
  require_hyperbolic_end(a1, rep.t_end, opts.hyperbolic_tol);
  rep.sf = static_cast<long>(rank_plus(a1)) - static_cast<long>(rank_plus(a0));

  CrossingScanner scanner(path, opts);
  auto const grid = sample_grid(path, rep.t_start, rep.t_end, opts.min_intervals);
  std::vector<Vector> ev(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) ev[k] = scanner.eigs(grid[k]);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) scanner.scan(grid[k], ev[k], grid[k + 1], ev[k + 1], 0);
  // An eigenvalue on the axis at a sample whose neighbours sit on the same side is a touch.
  for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
    auto const before = match(ev[k], ev[k - 1]);
    auto const after = match(ev[k], ev[k + 1]);
    for (Index i = 0; i < ev[k].size(); ++i) {
      if (std::abs(ev[k](i).real()) >= opts.tol) continue;
      auto const u = static_cast<std::size_t>(i);
      if (positive(ev[k - 1](before[u])) == positive(ev[k + 1](after[u]))) {
        std::ostringstream os;
        os << "eigenvalue touches the imaginary axis at t = " << grid[k] << " without crossing";
        throw NumericalError("unresolvable-crossing", os.str());
      }
    }
  }
  rep.events = std::move(scanner.events);
  for (auto const &e : rep.events) rep.sf_crossing += e.direction * e.multiplicity;
  rep.methods_agree = rep.sf == rep.sf_crossing;
  return rep;
}

FlowReport spectral_flow_window(OperatorPath const &path, double delta, FlowOptions const &opts)
{
  if (!(delta > 0.0)) throw InputError("bad-window", "delta must be positive");
  FlowReport rep = spectral_flow(path.restricted(-delta, delta), opts);
  rep.delta = delta;
  return rep;
}

FlowReport spectral_flow_asymptotic(OperatorPath const &path, FlowOptions const &opts)
{
  require_hyperbolic_end(path.end_minus(), -std::numeric_limits<double>::infinity(), opts.hyperbolic_tol);
  require_hyperbolic_end(path.end_plus(), std::numeric_limits<double>::infinity(), opts.hyperbolic_tol);
  double const reach = std::max(std::abs(path.t_first()), std::abs(path.t_last()));
  // Smallest |t| beyond which every sample is hyperbolic with the eigenvalue
  // count of the limit on its side.
  auto positives = [](Matrix const &a) { return (eigenvalues(a).real().array() > 0.0).count(); };
  auto const pos_minus = positives(path.end_minus()), pos_plus = positives(path.end_plus());
  double outer = 0.0;
  for (std::size_t i = 0; i < path.times().size(); ++i) {
    double const t = path.times()[i];
    Matrix const &a = path.samples()[i];
    if (!is_hyperbolic(a, opts.hyperbolic_tol).hyperbolic || positives(a) != (t < 0.0 ? pos_minus : pos_plus)) {
      outer = std::max(outer, std::abs(t));
    }
  }
  double delta = 1.0;
  while (delta <= outer) {
    delta *= 2.0;
    if (delta > 2.0 * std::max(reach, 1.0)) {
      throw InputError("no-admissible-delta", "path is not hyperbolic outside any window inside the samples");
    }
  }
  FlowReport rep = spectral_flow_window(path, delta, opts);
  FlowReport const wider = spectral_flow_window(path, 2.0 * delta, opts);
  rep.delta_invariant = wider.sf == rep.sf && wider.sf_crossing == rep.sf_crossing;
  return rep;
}

OperatorPath catenate(OperatorPath const &a, OperatorPath const &b)
{
  if (a.dim() != b.dim()) throw InputError("dimension-mismatch", "catenated paths differ in dimension");
  double const gap = op_norm(a(a.t_last()) - b(b.t_first()));
  if (gap > 1e-10) {
    std::ostringstream os;
    os << "end of the first path differs from the start of the second by " << gap;
    throw InputError("endpoint-mismatch", os.str());
  }
  std::vector<double> times;
  std::vector<Matrix> samples;
  double const la = a.t_last() - a.t_first(), lb = b.t_last() - b.t_first();
  for (std::size_t i = 0; i < a.times().size(); ++i) {
    times.push_back(0.5 * (a.times()[i] - a.t_first()) / la);
    samples.push_back(a.samples()[i]);
  }
  for (std::size_t i = 1; i < b.times().size(); ++i) {
    times.push_back(0.5 + 0.5 * (b.times()[i] - b.t_first()) / lb);
    samples.push_back(b.samples()[i]);
  }
  return OperatorPath(std::move(times), std::move(samples));
}

CatenationCheck catenate_checked(OperatorPath const &a, OperatorPath const &b, FlowOptions const &opts)
{
  CatenationCheck c{catenate(a, b)};
  c.sf_a = spectral_flow(a, opts).sf;
  c.sf_b = spectral_flow(b, opts).sf;
  c.sf_ab = spectral_flow(c.path, opts).sf;
  c.additive = c.sf_ab == c.sf_a + c.sf_b;
  return c;
}

double patch_profile(double t)
{
  double const x = std::abs(t);
  if (x <= 0.5) return 1.0;
  if (x >= 1.0) return -1.0;
  double const s = 2.0 * (x - 0.5);
  double const blend = s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
  return 1.0 - 2.0 * blend;
}

OperatorPath patch_path(Subspace const &x, Subspace const &y, double sample_step)
{
  if (x.ambient_dim() != y.ambient_dim()) throw InputError("dimension-mismatch", "subspaces live in different spaces");
  Index const n = x.ambient_dim();
  Matrix const id = Matrix::Identity(n, n);
  Matrix const p = x.orthogonal_projector();
  Matrix const q = y.orthogonal_projector();
  auto f = [&](double t) -> Matrix {
    double const phi = patch_profile(t);
    return t >= 0.0 ? Matrix(phi * p + (id - p)) : Matrix(phi * (id - q) + q);
  };
  return OperatorPath::from_function(f, -2.0, 2.0, sample_step, Matrix(2.0 * q - id), Matrix(id - 2.0 * p));
}

OperatorPath homotopy_sample(OperatorPath const &path, Matrix const &k, double s)
{
  double const a = path.t_first(), b = path.t_last();
  auto f = [&](double t) -> Matrix {
    double const u = (t - a) / (b - a);
    return path(t) + (s * u * (1.0 - u)) * k;
  };
  return OperatorPath::from_function(f, a, b, std::min(0.005, (b - a) / 200.0));
}

IdentityReport verify_identity(OperatorPath const &path, IdentityOptions const &opts)
{
  IdentityReport rep;
  rep.flow = spectral_flow_asymptotic(path, opts.flow);
  rep.index = numeric_index(path, opts.index);
  Subspace const em_plus = spectral_projectors(path.end_plus()).minus.range();
  Subspace const em_minus = spectral_projectors(path.end_minus()).minus.range();
  rep.relative_dim = relative_dimension(em_plus, em_minus);
  rep.sf_is_minus_ind = rep.flow.sf == -static_cast<long>(rep.index.index);
  rep.sf_is_minus_reldim = rep.flow.sf == -static_cast<long>(rep.relative_dim);
  rep.ind_is_pair = rep.index.index == rep.index.pair.index;
  rep.holds = rep.sf_is_minus_ind && rep.sf_is_minus_reldim && rep.ind_is_pair && rep.flow.methods_agree;
  return rep;
}

} // namespace hypflow

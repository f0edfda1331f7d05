#include "hypflow/grassmannian.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "hypflow/spectral.hpp"

namespace hypflow {

namespace {

// (I - Pi_Z) applied to the columns of m.
Matrix residual_from(Matrix const &m, Subspace const &z)
{
  if (z.dim() == 0) return m;
  return m - z.basis() * (z.basis().adjoint() * m);
}

double smallest_singular_value(Matrix const &m)
{
  if (m.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  auto const &s = svd.singularValues();
  return m.cols() > m.rows() ? 0.0 : s(s.size() - 1);
}

void require_same_ambient(Subspace const &a, Subspace const &b)
{
  if (a.ambient_dim() != b.ambient_dim()) {
    std::ostringstream os;
    os << "subspaces live in different ambient spaces (" << a.ambient_dim() << " vs " << b.ambient_dim() << ")";
    throw InputError("dimension-mismatch", os.str());
  }
}

} // namespace

Subspace Subspace::span(Matrix const &vectors, double rel_tol)
{
  return Subspace(orthonormal_range(vectors, rel_tol), rel_tol);
}

Subspace Subspace::from_orthonormal(Matrix basis, double tol)
{
  require_finite(basis, "basis");
  Index const k = basis.cols();
  if (k > basis.rows()) {
    throw InputError("not-orthonormal", "basis has more columns than rows");
  }
  double const err = k ? (basis.adjoint() * basis - Matrix::Identity(k, k)).norm() : 0.0;
  if (err > std::max(tol, 1e-10)) {
    std::ostringstream os;
    os << "basis is not orthonormal (||B*B - I|| = " << err << ")";
    throw InputError("not-orthonormal", os.str());
  }
  return Subspace(std::move(basis), tol);
}

Subspace Subspace::zero(Index n) { return Subspace(Matrix(n, 0), kDefaultRankTol); }

Subspace Subspace::whole(Index n) { return Subspace(Matrix::Identity(n, n), kDefaultRankTol); }

Subspace Subspace::kernel_of(Matrix const &t, double rel_tol) { return Subspace(nullspace(t, rel_tol), rel_tol); }

Subspace Subspace::range_of(Matrix const &t, double rel_tol) { return span(t, rel_tol); }

Subspace Subspace::orthogonal_complement() const
{
  Index const n = ambient_dim();
  Index const k = dim();
  if (k == 0) return whole(n);
  Eigen::HouseholderQR<Matrix> qr(basis_);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return Subspace(q.rightCols(n - k), tol_);
}

Subspace image(Matrix const &t, Subspace const &y)
{
  if (t.cols() != y.ambient_dim()) {
    throw InputError("dimension-mismatch", "image: operator and subspace sizes differ");
  }
  if (y.dim() == 0) return Subspace::zero(t.rows());
  return Subspace::span(t * y.basis(), y.tol());
}

double dist_point(Vector const &v, Subspace const &z)
{
  if (v.size() != z.ambient_dim()) {
    throw InputError("dimension-mismatch", "dist_point: vector and subspace sizes differ");
  }
  return residual_from(v, z).norm();
}

double rho1(Subspace const &y, Subspace const &z)
{
  require_same_ambient(y, z);
  if (y.dim() == 0) return 0.0;
  return op_norm(residual_from(y.basis(), z));
}

double delta1(Subspace const &y, Subspace const &z) { return std::max(rho1(y, z), rho1(z, y)); }

// In a Hilbert space the nearest point of Z to a vector of norm <= 1 already
// lies in the unit disc of Z, so the disc distance coincides with rho1.
double rho_disc(Subspace const &y, Subspace const &z) { return rho1(y, z); }

double delta_disc(Subspace const &y, Subspace const &z) { return delta1(y, z); }

double rho_sphere(Subspace const &y, Subspace const &z)
{
  require_same_ambient(y, z);
  if (y.dim() == 0) return z.dim() == 0 ? 0.0 : 1.0;
  if (z.dim() == 0) return 1.0;
  // dist(y, S_Z) = sqrt(2 - 2 cos) = 2 sin(angle / 2) for unit y, written through
  // sin and cos of the largest angle to avoid cancellation near 0.
  double const cos = std::min(1.0, smallest_singular_value(z.basis().adjoint() * y.basis()));
  double const sin = std::min(1.0, op_norm(residual_from(y.basis(), z)));
  return sin * std::sqrt(2.0 / (1.0 + cos));
}

double delta_sphere(Subspace const &y, Subspace const &z) { return std::max(rho_sphere(y, z), rho_sphere(z, y)); }

std::optional<double> gap(Subspace const &y, Subspace const &z, double tol)
{
  require_same_ambient(y, z);
  if (y.dim() == 0) return 1.0;
  Subspace const common = intersection(y, z, tol);
  if (common.dim() == y.dim()) return std::nullopt;
  // Orthogonal complement of Y n Z inside Y.
  Subspace const rest = Subspace::span(residual_from(y.basis(), common), tol);
  if (rest.dim() == 0) return std::nullopt;
  return smallest_singular_value(residual_from(rest.basis(), z));
}

std::optional<double> gap_hat(Subspace const &y, Subspace const &z, double tol)
{
  auto const a = gap(y, z, tol);
  auto const b = gap(z, y, tol);
  if (a && b) return std::min(*a, *b);
  return a ? a : b;
}

bool approx_equal(Subspace const &y, Subspace const &z, double tol)
{
  return y.dim() == z.dim() && delta1(y, z) <= tol;
}

Subspace intersection(Subspace const &x, Subspace const &y, double tol)
{
  require_same_ambient(x, y);
  Index const n = x.ambient_dim();
  if (x.dim() == 0 || y.dim() == 0) return Subspace::zero(n);
  // Right singular vectors of (I - Pi_Y) B_X with small singular values are
  // the principal directions of X lying in Y.
  Eigen::JacobiSVD<Matrix> svd(residual_from(x.basis(), y), Eigen::ComputeFullV);
  auto const &s = svd.singularValues();
  Index const k = x.dim();
  Index common = 0;
  for (Index j = k - 1; j >= 0; --j) {
    double const sj = j < s.size() ? s(j) : 0.0;
    if (sj > tol) break;
    ++common;
  }
  if (common == 0) return Subspace::zero(n);
  return Subspace::span(x.basis() * svd.matrixV().rightCols(common), tol);
}

Subspace subspace_sum(Subspace const &x, Subspace const &y, double rel_tol)
{
  require_same_ambient(x, y);
  Matrix both(x.ambient_dim(), x.dim() + y.dim());
  both << x.basis(), y.basis();
  return Subspace::span(both, rel_tol);
}

Projector::Projector(Matrix p) : p_(std::move(p))
{
  require_finite(p_, "projector");
  require_square(p_, "projector");
  Index const n = p_.rows();
  residual_ = op_norm(p_ * p_ - p_);
  double const pn = op_norm(p_);
  if (residual_ > 1e-8 * (1.0 + pn * pn)) {
    std::ostringstream os;
    os << "matrix is not idempotent (||P^2 - P|| = " << residual_ << ")";
    throw InputError("not-idempotent", os.str());
  }
  rank_ = static_cast<Index>(std::llround(p_.trace().real()));
  // Both ranks are measured against the common scale max(1, ||P||).
  double const cut = kDefaultRankTol * std::max(1.0, pn);
  auto count = [cut](Matrix const &m) {
    return static_cast<Index>((Eigen::BDCSVD<Matrix>(m).singularValues().array() > cut).count());
  };
  Index const r = count(p_);
  Index const k = count(Matrix::Identity(n, n) - p_);
  if (r + k != n || r != rank_) {
    std::ostringstream os;
    os << "projector range and kernel do not split C^" << n << " (ranks " << r << " + " << k << ")";
    throw InputError("not-idempotent", os.str());
  }
}

Subspace Projector::range() const
{
  Eigen::BDCSVD<Matrix> svd(p_, Eigen::ComputeFullU);
  return Subspace::from_orthonormal(svd.matrixU().leftCols(rank_), 1e-8);
}

Subspace Projector::kernel() const
{
  Eigen::BDCSVD<Matrix> svd(p_, Eigen::ComputeFullV);
  return Subspace::from_orthonormal(svd.matrixV().rightCols(p_.cols() - rank_), 1e-8);
}

Projector Projector::complement() const { return Projector(Matrix::Identity(p_.rows(), p_.cols()) - p_); }

Projector projector_onto_along(Subspace const &x, Subspace const &y, double rel_tol)
{
  require_same_ambient(x, y);
  Index const n = x.ambient_dim();
  if (x.dim() + y.dim() != n) {
    std::ostringstream os;
    os << "dimensions " << x.dim() << " + " << y.dim() << " do not add up to " << n;
    throw NumericalError("not-complementary", os.str());
  }
  Matrix m(n, n);
  m << x.basis(), y.basis();
  Matrix selector = Matrix::Zero(n, n);
  selector.leftCols(x.dim()) = x.basis();
  // P M = [B_X 0]  =>  M^* P^* = [B_X 0]^*.
  SolveResult r;
  try {
    r = solve(m.adjoint(), selector.adjoint(), 1.0 / rel_tol);
  } catch (SolveError const &e) {
    throw NumericalError("not-complementary", std::string("subspaces are not complementary: ") + e.what());
  }
  return Projector(r.x.adjoint());
}

PairIndexReport pair_index(Subspace const &x, Subspace const &y, double tol)
{
  require_same_ambient(x, y);
  Index const n = x.ambient_dim();
  PairIndexReport out;
  out.dim_intersection = intersection(x, y, tol).dim();
  out.codim_sum = n - (x.dim() + y.dim() - out.dim_intersection);
  out.index = out.dim_intersection - out.codim_sum;

  Index const m = x.dim() + y.dim();
  Index rank = 0;
  if (m > 0) {
    Matrix pairing(n, m);
    pairing << x.basis(), -y.basis();
    Eigen::JacobiSVD<Matrix> svd(pairing);
    // Singular values of (B_X, -B_Y) behave like sin(theta)/sqrt(2) near an
    // intersection, so the threshold follows the sine threshold.
    rank = (svd.singularValues().array() > tol / std::sqrt(2.0)).count();
  }
  out.pairing_kernel = m - rank;
  out.pairing_cokernel = n - rank;
  out.cross_check = out.pairing_kernel == out.dim_intersection && out.pairing_cokernel == out.codim_sum;
  return out;
}

Index relative_dimension(Subspace const &x, Subspace const &y)
{
  require_same_ambient(x, y);
  return x.dim() - y.dim();
}

TransitivityCheck check_transitivity(Subspace const &x, Subspace const &y, Subspace const &z)
{
  TransitivityCheck out;
  out.lhs = pair_index(x, z).index;
  out.rhs = relative_dimension(x, y) + pair_index(y, z).index;
  out.holds = out.lhs == out.rhs;
  return out;
}

Matrix conjugator(Projector const &p, Projector const &q)
{
  Index const n = p.ambient_dim();
  if (q.ambient_dim() != n) {
    throw InputError("dimension-mismatch", "conjugator: projectors of different sizes");
  }
  Matrix const id = Matrix::Identity(n, n);
  Matrix const d = p.matrix() - q.matrix();
  double const dn = op_norm(d);
  if (!(dn < 1.0)) {
    std::ostringstream os;
    os << "projectors are too far apart for the local conjugator (||p - q|| = " << dn << ")";
    throw InputError("not-conjugable-locally", os.str());
  }
  Matrix const l = q.matrix() * p.matrix() + (id - q.matrix()) * (id - p.matrix());
  Matrix const d2 = d * d;
  // sigma((p - q)^2) sits in the disc of radius ||p - q||^2 < 1, away from the
  // branch point of (1 - z)^{-1/2} at z = 1.
  double const radius = 0.5 * (dn * dn + 1.0);
  QuadratureOptions opts;
  opts.max_nodes = 1 << 16;
  Matrix const r = functional_calculus(
      d2, [](Scalar z) { return 1.0 / std::sqrt(1.0 - z); }, Contour::circle(0.0, radius, 64), opts);
  Matrix g = l * r;
  if (is_real(p.matrix(), 0.0) && is_real(q.matrix(), 0.0)) g = strip_imaginary(g);
  return g;
}

} // namespace hypflow

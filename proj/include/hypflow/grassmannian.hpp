#pragma once

#include <optional>

#include "hypflow/linalg.hpp"

namespace hypflow {

/// A linear subspace of C^n held by an orthonormal basis (n x k, k may be 0).
///
/// The ambient space carries the Euclidean norm, so annihilators are realized
/// as orthogonal complements.
class Subspace
{
public:
  Subspace() = default;

  /// Span of the given columns; the dimension is a rank decision relative to
  /// the largest singular value of `vectors`.
  static Subspace span(Matrix const &vectors, double rel_tol = kDefaultRankTol);
  /// Wraps an already orthonormal basis; throws InputError if it is not.
  static Subspace from_orthonormal(Matrix basis, double tol = kDefaultRankTol);
  static Subspace zero(Index n);
  static Subspace whole(Index n);
  static Subspace kernel_of(Matrix const &t, double rel_tol = kDefaultRankTol);
  static Subspace range_of(Matrix const &t, double rel_tol = kDefaultRankTol);

  Index ambient_dim() const { return basis_.rows(); }
  Index dim() const { return basis_.cols(); }
  Matrix const &basis() const { return basis_; }
  double tol() const { return tol_; }

  Matrix orthogonal_projector() const { return basis_ * basis_.adjoint(); }
  Subspace orthogonal_complement() const;

private:
  Subspace(Matrix basis, double tol) : basis_(std::move(basis)), tol_(tol) {}

  Matrix basis_;
  double tol_ = kDefaultRankTol;
};

/// T * Y for a square matrix T.
Subspace image(Matrix const &t, Subspace const &y);

double dist_point(Vector const &v, Subspace const &z);

// Hausdorff-type distances between subspaces:
//   rho1 / delta1:   sup over the unit disc of Y of dist(y, Z);
//   rho / delta:     Hausdorff distance of unit discs;
//   rho_s / delta_s: Hausdorff distance of unit spheres, with rho_s({0}, Z) = 1
//                    for Z != {0}.
double rho1(Subspace const &y, Subspace const &z);
double delta1(Subspace const &y, Subspace const &z);
double rho_disc(Subspace const &y, Subspace const &z);
double delta_disc(Subspace const &y, Subspace const &z);
double rho_sphere(Subspace const &y, Subspace const &z);
double delta_sphere(Subspace const &y, Subspace const &z);

/// Minimum gap gamma(Y, Z). std::nullopt is the "undefined-empty-infimum"
/// sentinel returned when Y != {0} and Y is contained in Z.
std::optional<double> gap(Subspace const &y, Subspace const &z, double tol = kDefaultRankTol);
std::optional<double> gap_hat(Subspace const &y, Subspace const &z, double tol = kDefaultRankTol);

/// delta1 below tol counts as equal.
bool approx_equal(Subspace const &y, Subspace const &z, double tol = kDefaultRankTol);

Subspace intersection(Subspace const &x, Subspace const &y, double tol = kDefaultRankTol);
Subspace subspace_sum(Subspace const &x, Subspace const &y, double rel_tol = kDefaultRankTol);

class Projector
{
public:
  Projector() = default;
  /// Validates ||P^2 - P|| <= 1e-8 (1 + ||P||^2) and that range and kernel
  /// ranks add up to n.
  explicit Projector(Matrix p);

  Matrix const &matrix() const { return p_; }
  double idempotency_residual() const { return residual_; }
  Index ambient_dim() const { return p_.rows(); }
  Index rank() const { return rank_; }
  Subspace range() const;
  Subspace kernel() const;
  Projector complement() const;

private:
  Matrix p_;
  double residual_ = 0.0;
  Index rank_ = 0;
};

/// P with Range P = X and ker P = Y. Throws NumericalError("not-complementary").
Projector projector_onto_along(Subspace const &x, Subspace const &y, double rel_tol = kDefaultRankTol);

struct PairIndexReport
{
  Index dim_intersection = 0;
  Index codim_sum = 0;
  Index index = 0;
  // Independent count from the pairing operator (x, y) -> x - y.
  Index pairing_kernel = 0;
  Index pairing_cokernel = 0;
  bool cross_check = true;
};

PairIndexReport pair_index(Subspace const &x, Subspace const &y, double tol = kDefaultRankTol);

/// dim X - dim Y; every pair is commensurable at finite dimension.
Index relative_dimension(Subspace const &x, Subspace const &y);

struct TransitivityCheck
{
  Index lhs = 0; // ind(X, Z)
  Index rhs = 0; // dim(X, Y) + ind(Y, Z)
  bool holds = false;
};

TransitivityCheck check_transitivity(Subspace const &x, Subspace const &y, Subspace const &z);

/// Invertible g with g p = q g, built from L(q, p) = qp + (1-q)(1-p) and the
/// inverse square root of 1 - (p - q)^2. Requires ||p - q|| < 1.
Matrix conjugator(Projector const &p, Projector const &q);

} // namespace hypflow

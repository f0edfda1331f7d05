#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "hypflow/errors.hpp"

namespace hypflow {

// Complex scalars throughout: spectra and contours live in the complex plane,
// real inputs embed and real outputs are stripped back where stated.
using Scalar = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using Index = Eigen::Index;

inline constexpr double kDefaultRankTol = 1e-8;
inline constexpr double kDefaultConditionCap = 1e12;
inline constexpr double kClusterRadius = 1e-7;
inline constexpr double kRealStripTol = 1e-10;

/// Embed any dense Eigen expression (real or complex) into the complex matrix type.
template <typename Derived>
Matrix to_complex(Eigen::MatrixBase<Derived> const &m)
{
  return m.template cast<Scalar>();
}

/// Throws InputError("non-finite") when any entry is NaN or infinite.
void require_finite(Matrix const &m, char const *what = "matrix");
void require_square(Matrix const &m, char const *what = "matrix");

struct RankDecision
{
  double threshold = 0.0;
  Index rank = 0;
  Eigen::VectorXd singular_values; // descending
};

/// Rank = number of singular values strictly above rel_tol * sigma_max.
RankDecision numerical_rank(Matrix const &m, double rel_tol = kDefaultRankTol);

/// All n eigenvalues, counted with algebraic multiplicity.
Vector eigenvalues(Matrix const &m);

struct EigenCluster
{
  Scalar value;
  int multiplicity = 0;
};

/// Groups eigenvalues lying within radius * (1 + |lambda|) of each other.
std::vector<EigenCluster> cluster_eigenvalues(Vector const &values, double radius = kClusterRadius);

struct SolveResult
{
  Matrix x;
  double residual = 0.0;  // ||M X - B|| / max(||B||, tiny)
  double condition = 1.0; // 1-norm estimate
};

SolveResult solve(Matrix const &m, Matrix const &b, double condition_cap = kDefaultConditionCap);

/// Spectral (operator 2-) norm.
double op_norm(Matrix const &m);

/// Orthonormal basis of the column space, rank decided relative to sigma_max.
Matrix orthonormal_range(Matrix const &m, double rel_tol = kDefaultRankTol);

/// Orthonormal basis of the right null space.
Matrix nullspace(Matrix const &m, double rel_tol = kDefaultRankTol);

bool is_real(Matrix const &m, double tol = kRealStripTol);

/// Zeroes imaginary parts when they are all below tol * (1 + ||m||_max); otherwise returns m unchanged.
Matrix strip_imaginary(Matrix m, double tol = kRealStripTol);

} // namespace hypflow

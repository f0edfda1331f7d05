#include "hypflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hypflow {

void require_finite(Matrix const &m, char const *what)
{
  if (!m.allFinite()) {
    throw InputError("non-finite", std::string(what) + " has non-finite entries");
  }
}

void require_square(Matrix const &m, char const *what)
{
  if (m.rows() == 0 || m.rows() != m.cols()) {
    std::ostringstream os;
    os << what << " must be square and non-empty, got " << m.rows() << "x" << m.cols();
    throw InputError("not-square", os.str());
  }
}

RankDecision numerical_rank(Matrix const &m, double rel_tol)
{
  require_finite(m);
  RankDecision out;
  if (m.size() == 0) {
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(m);
  out.singular_values = svd.singularValues();
  double const smax = out.singular_values.size() ? out.singular_values(0) : 0.0;
  out.threshold = rel_tol * smax;
  out.rank = (out.singular_values.array() > out.threshold).count();
  return out;
}

Vector eigenvalues(Matrix const &m)
{
  require_finite(m);
  require_square(m);
  Eigen::ComplexEigenSolver<Matrix> ces(m, false);
  if (ces.info() != Eigen::Success) {
    std::ostringstream os;
    os << "eigenvalue iteration failed for " << m.rows() << "x" << m.cols()
       << " matrix (||M||_max = " << m.cwiseAbs().maxCoeff() << ")";
    throw NumericalError("eigen-no-convergence", os.str());
  }
  return ces.eigenvalues();
}

std::vector<EigenCluster> cluster_eigenvalues(Vector const &values, double radius)
{
  std::vector<EigenCluster> clusters;
  std::vector<bool> used(values.size(), false);
  for (Index i = 0; i < values.size(); ++i) {
    if (used[i]) continue;
    // Grow the cluster transitively so chains of close values stay together.
    std::vector<Index> members{i};
    used[i] = true;
    for (std::size_t k = 0; k < members.size(); ++k) {
      Scalar const lk = values(members[k]);
      for (Index j = 0; j < values.size(); ++j) {
        if (!used[j] && std::abs(values(j) - lk) <= radius * (1.0 + std::abs(lk))) {
          used[j] = true;
          members.push_back(j);
        }
      }
    }
    Scalar mean = 0.0;
    for (Index j : members) mean += values(j);
    mean /= static_cast<double>(members.size());
    clusters.push_back({mean, static_cast<int>(members.size())});
  }
  std::sort(clusters.begin(), clusters.end(), [](EigenCluster const &a, EigenCluster const &b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  return clusters;
}

SolveResult solve(Matrix const &m, Matrix const &b, double condition_cap)
{
  require_finite(m);
  require_finite(b, "right-hand side");
  require_square(m);
  if (b.rows() != m.rows()) {
    throw InputError("dimension-mismatch", "solve: right-hand side row count differs from matrix size");
  }
  Eigen::PartialPivLU<Matrix> lu(m);
  double const rcond = lu.rcond();
  double const cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond <= condition_cap)) {
    std::ostringstream os;
    os << "matrix is singular or ill-conditioned (condition estimate " << cond << ", cap " << condition_cap << ")";
    throw SolveError(cond, os.str());
  }
  SolveResult out;
  out.x = lu.solve(b);
  out.condition = cond;
  double const bnorm = b.norm();
  out.residual = (m * out.x - b).norm() / std::max(bnorm, std::numeric_limits<double>::min());
  if (bnorm == 0.0) out.residual = (m * out.x).norm();
  return out;
}

double op_norm(Matrix const &m)
{
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1 || m.cols() == 1) return m.norm();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

Matrix orthonormal_range(Matrix const &m, double rel_tol)
{
  require_finite(m);
  if (m.cols() == 0 || m.rows() == 0) {
    return Matrix(m.rows(), 0);
  }
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU);
  auto const &s = svd.singularValues();
  double const threshold = rel_tol * s(0);
  Index const r = (s.array() > threshold).count();
  return svd.matrixU().leftCols(r);
}

Matrix nullspace(Matrix const &m, double rel_tol)
{
  require_finite(m);
  Index const n = m.cols();
  if (n == 0) return Matrix(0, 0);
  if (m.rows() == 0) return Matrix::Identity(n, n);
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeFullV);
  auto const &s = svd.singularValues();
  double const threshold = rel_tol * s(0);
  Index const r = (s.array() > threshold).count();
  return svd.matrixV().rightCols(n - r);
}

bool is_real(Matrix const &m, double tol)
{
  if (m.size() == 0) return true;
  double const scale = 1.0 + m.cwiseAbs().maxCoeff();
  return m.imag().cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix strip_imaginary(Matrix m, double tol)
{
  if (is_real(m, tol)) {
    m.imag().setZero();
  }
  return m;
}

} // namespace hypflow

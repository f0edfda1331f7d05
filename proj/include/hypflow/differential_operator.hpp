#pragma once

#include <functional>
#include <vector>

#include "hypflow/grassmannian.hpp"
#include "hypflow/invariant_spaces.hpp"
#include "hypflow/path.hpp"

namespace hypflow {

/// F_A u = u' - A u on [-T, T], implicit midpoint rows plus u(-T) = u(T) = 0.
///
/// Unknowns are ordered node by node (u_0, ..., u_{m-1}); row blocks are
/// ordered (u_0 = 0, midpoint rows, u_{m-1} = 0) so the matrix is block lower
/// bidiagonal with n(m + 1) rows and n m columns.
class GridOperator
{
public:
  GridOperator(OperatorPath const &path, double half_width, double h);

  Index dim() const { return n_; }
  Index nodes() const { return m_; }
  double half_width() const { return t_; }
  double step() const { return h_; }
  double node_time(Index i) const { return -t_ + h_ * static_cast<double>(i); }

  /// Coefficient blocks of midpoint row i on u_i and u_{i+1}.
  Matrix const &lower(Index i) const { return lower_[static_cast<std::size_t>(i)]; }
  Matrix const &upper(Index i) const { return upper_[static_cast<std::size_t>(i)]; }

  /// y = M x for a stacked grid vector x of length n m.
  Vector apply(Vector const &x) const;
  /// Dense assembly, for small grids and tests.
  Matrix dense() const;

private:
  Index n_ = 0, m_ = 0;
  double t_ = 0.0, h_ = 0.0;
  std::vector<Matrix> lower_, upper_;
};

struct SmallSingular
{
  Eigen::VectorXd values; // ascending
  Matrix vectors;         // right singular vectors, one column per value
  double largest = 0.0;   // sigma_max estimate
  int iterations = 0;
};

/// The `count` smallest singular values of the grid operator, from a block
/// QR factorization followed by inverse subspace iteration.
SmallSingular smallest_singular(GridOperator const &op, Index count, double tol = 1e-12);

struct WindowChoice
{
  double half_width = 10.0;
  double step = 0.05;
};

/// T = clamp(20 / margin, 10, 40) (and past the tails), h <= min(0.05, 1 / (4 ||A||_inf)).
WindowChoice choose_window(OperatorPath const &path, double tail_tol = 1e-6);

/// Checks tails, window and grid step, then assembles.
GridOperator assemble(OperatorPath const &path, double half_width, double h, double tail_tol = 1e-6);

struct RankCut
{
  Index dim = 0;
  double threshold = 0.0;
  double gap_ratio = 0.0; // min(first value above / threshold, threshold / last value below)
  Eigen::VectorXd smallest;
};

struct IndexReport
{
  Index ker = 0;
  Index coker = 0;
  Index index = 0;
  RankCut ker_cut, coker_cut;
  bool reliable = true;
  double half_width = 0.0;
  double step = 0.0;
  Index nodes = 0;
  Matrix kernel;        // stacked grid vectors, one column per kernel element
  PairIndexReport pair; // prediction from (W^s, W^u)
  Index stable_dim = 0, unstable_dim = 0;
  bool match = false;
};

struct IndexOptions
{
  double rank_tol = kDefaultRankTol;
  double tail_tol = 1e-6;
  double half_width = 0.0; // 0 = automatic
  double step = 0.0;       // 0 = automatic
  double pair_tol = 1e-6;  // principal-angle threshold for the pair prediction
  InvariantOptions invariant{};
};

/// ker and coker of the grid operator of A (coker through the operator of -A^*).
IndexReport numeric_index(OperatorPath const &path, IndexOptions const &opts = {});

struct GridFunction
{
  double t0 = 0.0;
  double step = 0.0;
  std::vector<Vector> values;

  double time(std::size_t i) const { return t0 + step * static_cast<double>(i); }
};

using Forcing = std::function<Vector(double)>;

struct RightInverseOptions
{
  double step = 0.02;   // output grid; the quadrature also runs at step / 2
  double length = 30.0; // half line truncated to [0, length]
  InvariantOptions invariant{};
};

struct RightInverseResult
{
  GridFunction u;
  double defect = 0.0;    // max |u' - A u - h| at interior nodes, 4th order differences
  double envelope_c = 0.0;
  double envelope_lambda = 0.0;
  bool envelope_ok = true;
};

/// R+ h(t) = int_0^t X(t) P X(tau)^{-1} h - int_t^inf X(t) (I - P) X(tau)^{-1} h,
/// with P = p_s projecting onto W^s.
RightInverseResult right_inverse_apply(OperatorPath const &path, Projector const &p_s, Forcing const &h,
                                       RightInverseOptions const &opts = {});

/// R- h on (-inf, 0] through the reversed path; p_u projects onto W^u.
/// Grid runs from -length to 0.
RightInverseResult left_right_inverse_apply(OperatorPath const &path, Projector const &p_u, Forcing const &h,
                                            RightInverseOptions const &opts = {});

struct BoundaryMaps
{
  Vector r_plus;  // in X_s = ker P_s
  Vector r_minus; // in X_u = ker P_u
  Projector p_s, p_u;
  Subspace stable, unstable;
};

/// Projectors along the orthogonal complements of W^s and W^u.
BoundaryMaps boundary_maps(OperatorPath const &path, Forcing const &h_plus, Forcing const &h_minus,
                           RightInverseOptions const &opts = {});

struct SurjectivityWitness
{
  Vector target;    // basis vector of X_s
  double center = 0.0;
  double width = 0.0;
  Vector u_inverse_v; // U^{-1} v, so h = phi * U^{-1} v
  double error = 0.0; // |r+ h - target|
  int attempts = 0;
};

/// One bump forcing per basis vector of X_s with r+ h equal to it.
std::vector<SurjectivityWitness> surjectivity_witnesses(OperatorPath const &path, RightInverseOptions const &opts = {});

struct MembershipResult
{
  bool member = false;
  double distance = 0.0; // dist(r+ h - r- h, W^s + W^u)
  GridFunction u;        // solution on [-length, length] when member
};

MembershipResult range_membership(OperatorPath const &path, Forcing const &h, double tol = 1e-6,
                                  RightInverseOptions const &opts = {});

/// Smooth bump supported on (center - width, center + width).
double bump(double t, double center, double width);

} // namespace hypflow

#pragma once

#include "hypflow/grassmannian.hpp"
#include "hypflow/path.hpp"
#include "hypflow/propagator.hpp"
#include "hypflow/spectral.hpp"

namespace hypflow {

struct InvariantOptions
{
  double tol = 1e-10;     // Cauchy test on delta1(W_T, W_{T + delta})
  double horizon = 40.0;  // largest T tried
  double delta = 1.0;     // horizon increment and re-orthonormalization period
  double tail_tol = 1e-6; // first T is where ||A(t) - A(+inf)|| stays below this
  OdeOptions ode{};
};

/// Transports the span of `basis` from t0 to t1 with Y' = A Y, orthonormalizing
/// every `period` time units. Returns an orthonormal basis at t1.
/// min_log_growth (optional) receives min over chunks of log(sigma_min)/length.
Matrix transport_subspace(OperatorPath const &path, double t0, double t1, Matrix basis, OdeOptions const &opts = {},
                          double period = 1.0, double *min_log_growth = nullptr);

struct StableSpace
{
  Subspace space;
  double horizon = 0.0;    // T of the accepted candidate
  double cauchy_gap = 0.0; // delta1 between the last two candidates
  double decay_rate = 0.0; // fitted forward decay of ||X_A(t)|_W||
  int candidates = 0;
};

/// W^s as the limit of X_A(T)^{-1} E^-(A(+inf)).
StableSpace stable_space_limit_ex(OperatorPath const &path, InvariantOptions const &opts = {});
inline Subspace stable_space_limit(OperatorPath const &path, InvariantOptions const &opts = {})
{
  return stable_space_limit_ex(path, opts).space;
}

/// W^u_A = W^s of t -> -A(-t).
StableSpace unstable_space_ex(OperatorPath const &path, InvariantOptions const &opts = {});
inline Subspace unstable_space(OperatorPath const &path, InvariantOptions const &opts = {})
{
  return unstable_space_ex(path, opts).space;
}

/// Constants of the perturbation argument for A(. + tau) = A0 + H, A0 = A(+inf).
struct DichotomyData
{
  Splitting splitting;
  double c = 1.0;
  double lambda = 0.0;
  double m = 1.0;        // max(||P+||, ||P-||)
  double h_norm = 0.0;   // sup ||H|| on [tau, inf)
  double h_minus = 0.0;  // sup ||P- H P-||
  double h_plus = 0.0;   // sup ||P+ H P+||
  double h_cross_down = 0.0; // sup ||P- H P+||
  double h_cross_up = 0.0;   // sup ||P+ H P-||
  double mu_minus = 0.0;
  double mu_plus = 0.0;
  double nu = 0.0;
  double b = 0.0;
  double tau = 0.0;
  double smallness_bound = 0.0; // lambda / (M c (1 + sqrt c))
  bool certificate = false;
};

DichotomyData dichotomy_data(OperatorPath const &path, double tau);

/// S in L(E^-, E^+), stored as an n x n matrix that vanishes on E^+.
struct GraphOperator
{
  Matrix s;
  double norm = 0.0;
  double bound = 0.0; // c^2 int_t^inf e^{-nu (r - t)} ||H(r)|| dr
  double time = 0.0;
};

struct GraphOptions
{
  double tol = 1e-10;
  double grid_step = 0.02; // coarse step; the result is Richardson-extrapolated with h/2
  double max_tau = 40.0;
  double max_cut = 40.0;
  int max_iterations = 500;
  OdeOptions ode{};
};

struct StableGraph
{
  GraphOperator graph; // S of the shifted path A(. + tau) at time 0
  DichotomyData data;
  Subspace space;      // W^s_A at time 0 after pull back
  double cut = 0.0;    // truncation T_cut of the half line
  int iterations = 0;  // Neumann terms on the finer grid
};

/// W^s through the fixed point of the contraction on the half line, solved by
/// the Neumann series of the collocated integral operator.
StableGraph stable_space_graph(OperatorPath const &path, GraphOptions const &opts = {});

/// Graph operators of X_A(t) W^s over E^- and of X_A(t) E^+ over E^-,
/// relative to the splitting of A(+inf). Needs t >= 0.
struct GraphEvolution
{
  GraphOperator s;
  GraphOperator t;
  double denominator_condition = 1.0;
  bool certificate = false; // bounds are theorems only when this holds for tau = 0
};

GraphEvolution graph_evolution(OperatorPath const &path, double t, InvariantOptions const &opts = {});

/// n x n matrix of the graph operator of V (basis) over Range P- along Range P+.
Matrix graph_over(Matrix const &v, Projector const &onto, Projector const &along,
                  double condition_cap = kDefaultConditionCap, double *condition = nullptr);

} // namespace hypflow

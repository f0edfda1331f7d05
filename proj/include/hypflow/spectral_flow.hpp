#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypflow/differential_operator.hpp"
#include "hypflow/grassmannian.hpp"
#include "hypflow/path.hpp"

namespace hypflow {

struct CrossingEvent
{
  double time = 0.0;
  Scalar eigenvalue{};
  int direction = 0; // +1 when Re lambda goes from negative to positive
  int multiplicity = 1;
};

struct FlowReport
{
  long sf = 0;          // projector lift: rank P+(A(end)) - rank P+(A(start))
  long sf_crossing = 0; // signed crossing count
  bool methods_agree = true;
  std::vector<CrossingEvent> events;
  double t_start = 0.0, t_end = 1.0;
  std::optional<double> delta; // window half width for paths on the line
  bool delta_invariant = true;
};

struct FlowOptions
{
  double tol = 1e-9;          // bisection width and axis-proximity threshold
  int min_intervals = 256;    // uniform samples merged with the path knots
  double hyperbolic_tol = 1e-7;
};

/// sf over the sampled range [t_first, t_last] of the path.
FlowReport spectral_flow(OperatorPath const &path, FlowOptions const &opts = {});

/// sf(A) = sf on [-delta, delta] with A hyperbolic outside; delta by doubling
/// from 1, then checked against 2 delta.
FlowReport spectral_flow_asymptotic(OperatorPath const &path, FlowOptions const &opts = {});

/// sf on a fixed window [-delta, delta]; throws when an end is not hyperbolic.
FlowReport spectral_flow_window(OperatorPath const &path, double delta, FlowOptions const &opts = {});

/// a followed by b, both rescaled into halves of [0, 1]. Requires a(end) = b(start)
/// within 1e-10.
OperatorPath catenate(OperatorPath const &a, OperatorPath const &b);

struct CatenationCheck
{
  OperatorPath path;
  long sf_a = 0, sf_b = 0, sf_ab = 0;
  bool additive = false;
};

CatenationCheck catenate_checked(OperatorPath const &a, OperatorPath const &b, FlowOptions const &opts = {});

/// C-infinity-like even bump: 1 on [-1/2, 1/2], -1 off (-1, 1), polynomial blend.
double patch_profile(double t);

/// Path with W^s = X and W^u = Y: phi P + (I - P) for t >= 0 and
/// phi (I - Q) + Q for t < 0, P and Q the orthogonal projectors onto X and Y.
OperatorPath patch_path(Subspace const &x, Subspace const &y, double sample_step = 0.01);

/// Fixed-endpoint homotopy samples A(t) + s t(1 - t) K on a [0, 1] path.
OperatorPath homotopy_sample(OperatorPath const &path, Matrix const &k, double s);

struct IdentityOptions
{
  IndexOptions index{};
  FlowOptions flow{};
};

struct IdentityReport
{
  FlowReport flow;
  IndexReport index;
  Index relative_dim = 0; // dim(E-(A(+inf)), E-(A(-inf)))
  bool sf_is_minus_ind = false;
  bool sf_is_minus_reldim = false;
  bool ind_is_pair = false;
  bool holds = false;
};

IdentityReport verify_identity(OperatorPath const &path, IdentityOptions const &opts = {});

} // namespace hypflow

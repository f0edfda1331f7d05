#pragma once

#include <functional>
#include <variant>

#include "hypflow/grassmannian.hpp"
#include "hypflow/linalg.hpp"

namespace hypflow {

inline constexpr double kHyperbolicityTol = 1e-7;

struct RectangleShape
{
  double re_min, re_max, im_min, im_max;
};

struct CircleShape
{
  Scalar center;
  double radius;
};

/// Closed integration contour. Rectangles are integrated side by side with
/// adaptive Gauss-Legendre panels, circles with the periodic trapezoid rule.
class Contour
{
public:
  static Contour rectangle(double re_min, double re_max, double im_min, double im_max, int nodes = 64);
  static Contour circle(Scalar center, double radius, int nodes = 64);

  std::variant<RectangleShape, CircleShape> const &shape() const { return shape_; }
  int nodes() const { return nodes_; }

  double distance_to_trace(Scalar z) const;
  bool encloses(Scalar z) const;
  Scalar interior_point() const;
  double perimeter() const;

private:
  Contour(std::variant<RectangleShape, CircleShape> shape, int nodes);

  std::variant<RectangleShape, CircleShape> shape_;
  int nodes_;
};

struct Hyperbolicity
{
  double margin = 0.0; // min |Re lambda| over the spectrum
  bool hyperbolic = false;
};

Hyperbolicity is_hyperbolic(Matrix const &a, double tol = kHyperbolicityTol);

struct QuadratureOptions
{
  double tol = 1e-12;        // target accuracy relative to the result scale
  int max_nodes = 4096;      // cap on nodes of the accepted rule
  double trace_margin = 1e-6; // eigenvalues must stay margin*(1+||A||) off the trace
};

struct Splitting
{
  Projector plus;
  Projector minus;
  double margin = 0.0;
  int nodes = 0; // quadrature nodes of the accepted rule
};

/// P+ and P- of a hyperbolic matrix by resolvent integration over a rectangle
/// enclosing the right half-plane part of the spectrum.
Splitting spectral_projectors(Matrix const &a, QuadratureOptions const &opts = {});

using HolomorphicFn = std::function<Scalar(Scalar)>;

struct CalculusResult
{
  Matrix value;
  int nodes = 0;
  int orientation = 1; // +1 if the contour was used as given, -1 if flipped
};

/// (1/2 pi i) * contour integral of f(z) (A - z)^{-1} dz, orientation
/// calibrated so that f = 1 yields +I. Gamma must surround sigma(A).
CalculusResult functional_calculus_ex(Matrix const &a, HolomorphicFn const &f, Contour const &gamma,
                                      QuadratureOptions const &opts = {});

inline Matrix functional_calculus(Matrix const &a, HolomorphicFn const &f, Contour const &gamma,
                                  QuadratureOptions const &opts = {})
{
  return functional_calculus_ex(a, f, gamma, opts).value;
}

/// Circle centered at 0 that surrounds sigma(A) with some room, useful for
/// entire functions.
Contour surrounding_circle(Matrix const &a, double pad = 1.0);

/// r(A) = P+ - P-.
Matrix hyperbolic_retraction(Matrix const &a);

/// (-1)^m with m the total algebraic multiplicity of negative real eigenvalues.
int leray_schauder_degree(Matrix const &t);

} // namespace hypflow

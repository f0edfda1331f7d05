#include <doctest.h>

#include <cmath>

#include "hypflow/invariant_spaces.hpp"
#include "hypflow/presets.hpp"
#include "hypflow/spectral_flow.hpp"
#include "oracles.hpp"

using namespace hypflow;
using oracle::axis;

namespace {

Matrix diag2(double a, double b)
{
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

// Smooth bump supported in (0, 4).
double k_profile(double t) { return bump(t, 2.0, 2.0); }

OperatorPath perturbed_constant(Matrix const &a0, Matrix const &k, double eps)
{
  return oracle::function_path([=](double t) { return Matrix(a0 + eps * k_profile(t) * k); });
}

} // namespace

TEST_CASE("stable_space_limit examples")
{
  auto const c = OperatorPath::constant(diag2(-1, 1));
  CHECK(delta1(stable_space_limit(c), axis(2, {0})) <= 1e-10);

  CHECK(delta1(stable_space_limit(tanh_diag()), axis(2, {1})) <= 1e-8);

  Vector x(2);
  x << 1.0, 1.0;
  auto const patched = patch_path(Subspace::span(x), axis(2, {1}));
  CHECK(delta1(stable_space_limit(patched), Subspace::span(x)) <= 1e-6);
}

TEST_CASE("stable_space_limit reports decay and rejects non-hyperbolic limits")
{
  auto const r = stable_space_limit_ex(tanh_diag());
  CHECK(r.decay_rate > 0.5);
  CHECK(r.cauchy_gap <= 1e-10);
  try {
    stable_space_limit(rotation_path(1.5707963267948966));
    FAIL("expected rejection");
  } catch (Error const &e) {
    CHECK(e.code() == "not-hyperbolic");
  }
}

TEST_CASE("unstable_space examples")
{
  CHECK(delta1(unstable_space(OperatorPath::constant(diag2(-1, 1))), axis(2, {1})) <= 1e-10);
  CHECK(delta1(unstable_space(tanh_diag()), axis(2, {1})) <= 1e-8);
  CHECK(unstable_space(scalar_tanh()).dim() == 0);
}

TEST_CASE("stable_space_graph examples")
{
  auto const c = stable_space_graph(OperatorPath::constant(diag2(-1, 2)));
  CHECK(c.graph.s.norm() <= 1e-12);
  CHECK(delta1(c.space, axis(2, {0})) <= 1e-10);

  Matrix a0(2, 2);
  a0 << -1.0, 0.3, 0.0, 1.5;
  Matrix k(2, 2);
  k << 0.4, -1.0, 0.8, 0.2;
  auto const p = perturbed_constant(a0, k, 1e-3);
  auto const g = stable_space_graph(p);
  REQUIRE(g.data.certificate);
  CHECK(g.data.tau == doctest::Approx(0.0));
  // bound c^2 eps int e^{-nu t} ||K|| dt by quadrature
  double integral = 0.0;
  double const dt = 1e-3;
  for (double t = 0.0; t < 4.0; t += dt) integral += dt * std::exp(-g.data.nu * t) * 1e-3 * k_profile(t) * op_norm(k);
  CHECK(g.graph.norm <= g.data.c * g.data.c * integral + 1e-10);

  auto const gd = stable_space_graph(tanh_diag());
  CHECK(delta1(gd.space, stable_space_limit(tanh_diag())) <= 1e-6);
}

TEST_CASE("graph_evolution examples")
{
  auto const c = OperatorPath::constant(diag2(-1, 2), -1, 1);
  for (double t : {0.0, 1.0, 5.0}) {
    auto const e = graph_evolution(c, t);
    CHECK(e.s.s.norm() <= 1e-12);
    CHECK(e.t.s.norm() <= 1e-12);
  }

  for (double t : {20.0, 25.0, 30.0}) CHECK(graph_evolution(tanh_diag(), t).s.norm <= 1e-6);

  Matrix a0(2, 2);
  a0 << -1.0, 0.3, 0.0, 1.5;
  Matrix k(2, 2);
  k << 0.4, -1.0, 0.8, 0.2;
  auto const p = perturbed_constant(a0, k, 1e-3);
  for (double t : {0.0, 0.5, 1.0, 2.0, 3.0, 5.0}) {
    auto const e = graph_evolution(p, t);
    REQUIRE(e.certificate);
    CHECK(e.s.norm <= e.s.bound + 1e-9);
  }
}

TEST_CASE("the two constructions agree on a sample of paths")
{
  for (auto const &m : random_battery(3, 8, 4)) {
    auto const data = dichotomy_data(m.path, 0.0);
    StableGraph g;
    try {
      g = stable_space_graph(m.path);
    } catch (Error const &e) {
      CHECK(e.code() == "smallness-violated");
      continue;
    }
    CHECK(delta1(g.space, stable_space_limit(m.path)) <= 1e-6);
    (void)data;
  }
}

TEST_CASE("evolved complements converge to E+ and grow")
{
  oracle::Gen g(51);
  for (auto const &m : random_battery(11, 8, 4)) {
    auto const ws = stable_space_limit(m.path);
    Index const n = m.path.dim();
    if (ws.dim() == n) continue;
    // random complement of W^s
    Subspace v = Subspace::span(ws.orthogonal_complement().basis() + 0.3 * ws.basis() * g.real(ws.dim(), n - ws.dim()));
    auto const eplus = spectral_projectors(m.path.end_plus()).plus.range();
    Matrix const moved = transport_subspace(m.path, 0.0, 30.0, v.basis());
    CHECK(rho1(Subspace::span(moved), eplus) <= 1e-4);
    // least-squares rate of inf |X(t) v| over unit v in V
    std::vector<double> ts, ys;
    for (double t = 0.0; t <= 15.0; t += 1.0) {
      Eigen::JacobiSVD<Matrix> svd(transition(m.path, t, 0.0) * v.basis());
      ts.push_back(t);
      ys.push_back(std::log(svd.singularValues()(svd.singularValues().size() - 1)));
    }
    double const tm = 7.5;
    double ym = 0.0;
    for (double y : ys) ym += y / static_cast<double>(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
      sxy += (ts[i] - tm) * (ys[i] - ym);
      sxx += (ts[i] - tm) * (ts[i] - tm);
    }
    CHECK(sxy / sxx > 0.0);
  }
}

TEST_CASE("duality of stable spaces")
{
  for (auto const &m : random_battery(12, 8, 5)) {
    auto const ws = stable_space_limit(m.path);
    auto const dual = stable_space_limit(m.path.adjoint_negated());
    CHECK(delta1(dual, ws.orthogonal_complement()) <= 1e-6);
  }
}

TEST_CASE("block upper triangular paths keep W^s = E-")
{
  oracle::Gen g(52);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix const top = -Matrix::Identity(2, 2) + 0.2 * g.real(2, 2);
    Matrix const cross = g.real(2, 1);
    double const amp = g.uniform(0.2, 1.0);
    auto const p = oracle::function_path([=](double t) {
      Matrix a = Matrix::Zero(3, 3);
      a.topLeftCorner(2, 2) = top * (1.0 + 0.3 * std::tanh(t));
      a.topRightCorner(2, 1) = cross * (1.0 + amp * std::sin(t) / std::cosh(t));
      a(2, 2) = 1.0 + 0.5 * std::tanh(t);
      return a;
    });
    CHECK(delta1(stable_space_limit(p), axis(3, {0, 1})) <= 1e-8);
  }
}

TEST_CASE("stable space depends continuously on the path")
{
  Matrix a0(3, 3);
  a0 << -1.0, 0.5, 0.0, 0.2, 1.2, 0.3, 0.0, -0.4, -0.8;
  Matrix k(3, 3);
  k << 0.1, 1.0, -0.5, 0.7, 0.0, 0.3, -0.2, 0.6, 0.4;
  auto const base = stable_space_limit(OperatorPath::constant(a0));
  double previous = 1e300;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    double const d = delta1(base, stable_space_limit(perturbed_constant(a0, k, eps)));
    CHECK(d < previous);
    previous = d;
  }
  CHECK(previous < 1e-4);
}

TEST_CASE("relative dimension of stable spaces follows the limits")
{
  auto const battery = random_battery(13, 10, 4);
  for (std::size_t i = 0; i < battery.size(); ++i)
    for (std::size_t j = i + 1; j < battery.size(); ++j) {
      auto const &a = battery[i].path, &b = battery[j].path;
      if (a.dim() != b.dim()) continue;
      auto const ea = spectral_projectors(a.end_plus()).minus.range();
      auto const eb = spectral_projectors(b.end_plus()).minus.range();
      CHECK(relative_dimension(stable_space_limit(a), stable_space_limit(b)) == relative_dimension(ea, eb));
    }
}

TEST_CASE("graph_over of the splitting subspace is zero")
{
  auto const s = spectral_projectors(diag2(-1, 3));
  Matrix const g = graph_over(s.minus.range().basis(), s.minus, s.plus);
  CHECK(g.norm() <= 1e-12);
}

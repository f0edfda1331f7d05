#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hypflow/presets.hpp"
#include "hypflow/spectral_flow.hpp"
#include "oracles.hpp"

using namespace hypflow;
using oracle::axis;

namespace {

Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

OperatorPath unit_path(std::function<Matrix(double)> const &f) { return OperatorPath::from_function(f, 0.0, 1.0, 0.005); }

OperatorPath segment(Matrix const &a, Matrix const &b)
{
  return unit_path([=](double t) { return Matrix((1.0 - t) * a + t * b); });
}

Index negative_dim(Matrix const &a) { return spectral_projectors(a).minus.rank(); }

} // namespace

TEST_CASE("spectral_flow examples")
{
  Matrix c = Matrix::Zero(2, 2);
  c(0, 0) = 1.0;
  c(1, 1) = -2.0;
  auto r = spectral_flow(OperatorPath::constant(c, 0, 1));
  CHECK(r.sf == 0);
  CHECK(r.events.empty());

  r = spectral_flow(unit_up_crossing());
  CHECK(r.sf == 1);
  CHECK(r.sf_crossing == 1);
  REQUIRE(r.events.size() == 1);
  CHECK(r.events[0].time == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(r.events[0].direction == 1);

  auto const d = unit_path([](double t) {
    double const s = 6.0 * (t - 0.5);
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = std::tanh(s);
    m(1, 1) = -std::tanh(s);
    return m;
  });
  r = spectral_flow(d);
  CHECK(r.sf == 0);
  CHECK(r.sf_crossing == 0);
  CHECK(r.events.size() == 2);
  CHECK(r.methods_agree);
}

TEST_CASE("spectral_flow rejects bad input")
{
  try {
    spectral_flow(segment(scalar(0.0), scalar(1.0)));
    FAIL("expected not-hyperbolic");
  } catch (Error const &e) {
    CHECK(e.code() == "not-hyperbolic");
  }
  // tangential touch of the axis at t = 1/2
  auto const touch = unit_path([](double t) { return scalar((t - 0.5) * (t - 0.5)); });
  try {
    spectral_flow(touch);
    FAIL("expected unresolvable-crossing");
  } catch (Error const &e) {
    CHECK(e.code() == "unresolvable-crossing");
  }
}

TEST_CASE("repeated crossings carry multiplicity")
{
  auto const p = unit_path([](double t) { return Matrix(std::tanh(4.0 * (t - 0.4)) * Matrix::Identity(3, 3)); });
  auto const r = spectral_flow(p);
  CHECK(r.sf == 3);
  CHECK(r.sf_crossing == 3);
  REQUIRE(r.events.size() == 1);
  CHECK(r.events[0].multiplicity == 3);
}

TEST_CASE("spectral_flow_asymptotic examples")
{
  Matrix c = Matrix::Zero(2, 2);
  c(0, 0) = 1.0;
  c(1, 1) = -2.0;
  CHECK(spectral_flow_asymptotic(OperatorPath::constant(c, -5, 5)).sf == 0);

  auto const r = spectral_flow_asymptotic(scalar_tanh());
  CHECK(r.sf == 1);
  CHECK(r.delta_invariant);
  for (double delta : {2.0, 4.0, 8.0}) CHECK(spectral_flow_window(scalar_tanh(), delta).sf == 1);

  Vector v(3);
  v << 1.0, 1.0, 0.0;
  auto const x = Subspace::span(v);
  auto const y = axis(3, {1, 2});
  auto const patched = patch_path(x, y);
  long const expect = -relative_dimension(spectral_projectors(patched.end_plus()).minus.range(),
                                          spectral_projectors(patched.end_minus()).minus.range());
  auto const pr = spectral_flow_asymptotic(patched);
  CHECK(pr.sf == expect);
  CHECK(pr.methods_agree);
}

TEST_CASE("catenation examples")
{
  Matrix c = scalar(-1.0);
  auto const cc = catenate_checked(OperatorPath::constant(c, 0, 1), OperatorPath::constant(c, 0, 1));
  CHECK(cc.sf_ab == 0);
  CHECK(cc.additive);

  auto const up = unit_up_crossing();
  auto const down = unit_path([&](double t) { return up(1.0 - t); });
  auto const ud = catenate_checked(up, down);
  CHECK(ud.sf_a == 1);
  CHECK(ud.sf_b == -1);
  CHECK(ud.sf_ab == 0);
  CHECK(ud.additive);


  try {
    catenate(up, up);
    FAIL("expected endpoint-mismatch");
  } catch (Error const &e) {
    CHECK(e.code() == "endpoint-mismatch");
  }
}

TEST_CASE("two chained up-crossings give two")
{
  // the second up-crossing runs in a fresh coordinate so that the pieces chain
  auto const up = unit_up_crossing();
  double const k = up(1.0)(0, 0).real();
  auto const a = unit_path([&](double t) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = up(t)(0, 0);
    m(1, 1) = -k;
    return m;
  });
  auto const b = unit_path([&](double t) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = k;
    m(1, 1) = up(t)(0, 0);
    return m;
  });
  auto const r = catenate_checked(a, b);
  CHECK(r.sf_a == 1);
  CHECK(r.sf_b == 1);
  CHECK(r.sf_ab == 2);
  CHECK(r.additive);
  CHECK(spectral_flow(r.path).events.size() == 2);
}

TEST_CASE("patch_path examples")
{
  CHECK(patch_profile(0.0) == 1.0);
  CHECK(patch_profile(0.5) == 1.0);
  CHECK(patch_profile(-1.0) == -1.0);
  CHECK(patch_profile(3.0) == -1.0);
  CHECK(patch_profile(0.75) == doctest::Approx(0.0));

  auto const e1 = axis(2, {0}), e2 = axis(2, {1});
  auto p = patch_path(e1, e2);
  CHECK(delta1(stable_space_limit(p), e1) <= 1e-6);
  CHECK(delta1(unstable_space(p), e2) <= 1e-6);

  p = patch_path(e1, e1);
  auto r = numeric_index(p);
  CHECK(r.index == 0);
  CHECK(r.pair.index == 0);
  CHECK(r.ker == 1);

  p = patch_path(Subspace::whole(2), Subspace::zero(2));
  r = numeric_index(p);
  CHECK(r.ker == 0);
  CHECK(r.coker == 0);
  CHECK(r.pair.index == 0);
}

TEST_CASE("verify_identity examples")
{
  auto r = verify_identity(scalar_tanh());
  CHECK(r.flow.sf == 1);
  CHECK(r.index.index == -1);
  CHECK(r.relative_dim == -1);
  CHECK(r.holds);

  r = verify_identity(tanh_diag());
  CHECK(r.flow.sf == 0);
  CHECK(r.index.index == 0);
  CHECK(r.holds);

  auto const m = battery_member(3, Family::RandomPerturbed, 4242, 4);
  r = verify_identity(m.path);
  CHECK(r.holds);
  CHECK(r.flow.sf == -r.index.index);
}

TEST_CASE("fixed-endpoint homotopies keep the flow")
{
  oracle::Gen g(71);
  int done = 0;
  for (int trial = 0; done < 5 && trial < 40; ++trial) {
    Index const n = g.integer(1, 4);
    auto const base = segment(g.hyperbolic(n, 0.5), g.hyperbolic(n, 0.5));
    Matrix const k = g.real(n, n);
    std::vector<long> flows;
    try {
      for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        auto const r = spectral_flow(homotopy_sample(base, k, s));
        CHECK(r.methods_agree);
        flows.push_back(r.sf);
      }
    } catch (Error const &e) {
      CHECK(e.code() == "unresolvable-crossing");
      continue;
    }
    for (long f : flows) CHECK(f == flows.front());
    ++done;
  }
  CHECK(done == 5);
}

TEST_CASE("catenation additivity on random pairs")
{
  oracle::Gen g(72);
  for (int trial = 0; trial < 10; ++trial) {
    Index const n = g.integer(1, 4);
    Matrix const a = g.hyperbolic(n, 0.5), b = g.hyperbolic(n, 0.5), c = g.hyperbolic(n, 0.5);
    auto const r = catenate_checked(segment(a, b), segment(b, c));
    CHECK(r.additive);
    CHECK(r.sf_ab == static_cast<long>(negative_dim(a) - negative_dim(c)));
  }
}

TEST_CASE("paths inside the hyperbolic set have zero flow")
{
  oracle::Gen g(73);
  for (int trial = 0; trial < 10; ++trial) {
    Index const n = g.integer(1, 5);
    Matrix const d = g.hyperbolic(n, 0.5);
    Matrix const k = 0.5 * g.real(n, n) / std::sqrt(double(n));
    auto const p = unit_path([&](double t) {
      Matrix const s = Matrix::Identity(n, n) + std::sin(3.0 * t) * k;
      return Matrix(s * d * s.inverse());
    });
    auto const r = spectral_flow(p);
    CHECK(r.sf == 0);
    CHECK(r.sf_crossing == 0);
  }
}

TEST_CASE("battery sample satisfies the identity suite")
{
  for (auto const &m : random_battery(5, 8, 4)) {
    auto const r = verify_identity(m.path);
    CAPTURE(m.id);
    CHECK(r.holds);
    CHECK(r.flow.methods_agree);
    CHECK(r.index.reliable);
  }
}

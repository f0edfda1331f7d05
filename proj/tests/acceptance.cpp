// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>

#include "hypflow/differential_operator.hpp"
#include "hypflow/presets.hpp"
#include "hypflow/propagator.hpp"
#include "hypflow/spectral.hpp"
#include "hypflow/spectral_flow.hpp"
#include "oracles.hpp"

using namespace hypflow;

namespace {

using Clock = std::chrono::steady_clock;

void parallel_for(std::size_t count, std::function<void(std::size_t)> const &body)
{
  unsigned const workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), 8u));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) body(i);
    });
  for (auto &t : pool) t.join();
}

struct Outcome
{
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, char const *title, Outcome const &o, double seconds)
{
  std::printf("criterion %2d: %s  %s (%s) [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", title, o.detail.c_str(), seconds);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

void run(int id, char const *title, std::function<Outcome()> const &body)
{
  auto const start = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (Error const &e) {
    o = {false, std::string("unexpected error ") + e.code() + ": " + e.what()};
  } catch (std::exception const &e) {
    o = {false, std::string("unexpected exception: ") + e.what()};
  }
  report(id, title, o, std::chrono::duration<double>(Clock::now() - start).count());
}

std::string fmt(char const *f, double a, double b = 0.0, double c = 0.0)
{
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

OperatorPath unit_path(std::function<Matrix(double)> const &f) { return OperatorPath::from_function(f, 0.0, 1.0, 0.005); }

OperatorPath segment(Matrix const &a, Matrix const &b)
{
  return unit_path([=](double t) { return Matrix((1.0 - t) * a + t * b); });
}

// Shared across criteria 1 and 10.
std::atomic<int> accepted_paths{0}, disagreeing_paths{0};

Outcome battery_identity()
{
  auto const start = Clock::now();
  auto const battery = random_battery(7, 50, 6);
  std::vector<IdentityReport> reports(battery.size());
  std::vector<std::string> errors(battery.size());
  parallel_for(battery.size(), [&](std::size_t i) {
    try {
      reports[i] = verify_identity(battery[i].path);
    } catch (Error const &e) {
      errors[i] = e.code();
    }
  });
  double const seconds = std::chrono::duration<double>(Clock::now() - start).count();
  int holds = 0, unreliable = 0;
  std::string bad;
  for (std::size_t i = 0; i < battery.size(); ++i) {
    auto const &r = reports[i];
    bool const ok = errors[i].empty() && r.index.index == r.index.pair.index && r.flow.sf == -r.index.index &&
                    r.index.index == r.relative_dim && r.holds;
    if (errors[i].empty()) {
      ++accepted_paths;
      if (!r.flow.methods_agree) ++disagreeing_paths;
      if (!r.index.reliable) ++unreliable;
    }
    if (ok)
      ++holds;
    else
      bad += " #" + std::to_string(i) + (errors[i].empty() ? "" : ":" + errors[i]);
  }
  Outcome o;
  o.pass = holds == 50 && seconds <= 300.0;
  o.detail = std::to_string(holds) + "/50 paths satisfy ind = pair = -sf = dim(E-(+inf), E-(-inf)), " +
             std::to_string(unreliable) + " unreliable rank cuts, " + fmt("%.1f s", seconds) + bad;
  return o;
}

Outcome anchors()
{
  auto const up = verify_identity(scalar_tanh());
  auto const down = verify_identity(scalar_tanh(-1.0));
  auto const diag = verify_identity(tanh_diag());
  bool ok = up.flow.sf == 1 && up.index.index == -1 && up.index.ker == 0 && up.index.coker == 1;
  ok = ok && down.flow.sf == -1 && down.index.index == 1;
  ok = ok && diag.flow.sf == 0 && diag.index.index == 0 && diag.index.ker == 1;
  double rel = 1.0;
  if (diag.index.ker == 1) {
    auto const &r = diag.index;
    Index const n = 2;
    Vector u(r.nodes);
    for (Index j = 0; j < r.nodes; ++j) u(j) = r.kernel(j * n + 1, 0);
    Eigen::VectorXd sech(r.nodes);
    for (Index j = 0; j < r.nodes; ++j) sech(j) = 1.0 / std::cosh(-r.half_width + r.step * static_cast<double>(j));
    // least-squares scale, then relative error in the max norm
    Scalar const scale = u.dot(sech.cast<Scalar>()) / u.squaredNorm();
    u *= scale;
    rel = (u - sech.cast<Scalar>()).cwiseAbs().maxCoeff() / sech.maxCoeff();
    // the first component of the kernel must vanish
    for (Index j = 0; j < r.nodes; ++j) rel = std::max(rel, std::abs(scale * r.kernel(j * n, 0)) / sech.maxCoeff());
  }
  return {ok && rel <= 1e-4, fmt("tanh sf %g ind %g; ", double(up.flow.sf), double(up.index.index)) +
                                 fmt("-tanh sf %g ind %g; ", double(down.flow.sf), double(down.index.index)) +
                                 fmt("diag ker %g, sech relative error %.2e", double(diag.index.ker), rel)};
}

Outcome projector_oracle()
{
  oracle::Gen g(301);
  double worst = 0.0, idem = 0.0, sum = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    int const n = g.integer(1, 8);
    Matrix const a = g.hyperbolic(n, 0.1);
    auto const s = spectral_projectors(a);
    Matrix const ref = oracle::eigenprojector_sum(a);
    worst = std::max(worst, (s.plus.matrix() - ref).norm() / std::max(1.0, ref.norm()));
    idem = std::max(idem, s.plus.idempotency_residual());
    sum = std::max(sum, (s.plus.matrix() + s.minus.matrix() - Matrix::Identity(n, n)).norm());
  }
  return {worst <= 1e-7 && idem <= 1e-9 && sum <= 1e-12,
          fmt("max oracle gap %.2e, idempotency %.2e, |P+ + P- - I| %.2e over 200 matrices", worst, idem, sum)};
}

Outcome calculus()
{
  oracle::Gen g(401);
  double one = 0.0, mult = 0.0, root = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    int const n = g.integer(1, 8);
    Matrix const a = g.complex(n, n);
    auto const c = surrounding_circle(a);
    one = std::max(one, (functional_calculus(a, [](Scalar) { return Scalar(1.0); }, c) - Matrix::Identity(n, n)).norm());
    auto f = [](Scalar z) { return std::exp(0.3 * z); };
    auto h = [](Scalar z) { return z * z - 1.0; };
    Matrix const fg = functional_calculus(a, [&](Scalar z) { return f(z) * h(z); }, c);
    Matrix const prod = functional_calculus(a, f, c) * functional_calculus(a, h, c);
    mult = std::max(mult, (fg - prod).norm() / std::max(1.0, fg.norm()));

    Matrix b = g.complex(n, n);
    b *= g.uniform(0.01, 0.5) / op_norm(b);
    Matrix const r = functional_calculus(b, [](Scalar z) { return std::sqrt(1.0 + z); }, Contour::circle(0.0, 0.75));
    root = std::max(root, (r * r - Matrix::Identity(n, n) - b).norm());
  }
  return {one <= 1e-10 && mult <= 1e-8 && root <= 1e-8,
          fmt("f=1 %.2e, multiplicativity %.2e, square root %.2e over 50 matrices", one, mult, root)};
}

Outcome propagator_laws()
{
  oracle::Gen g(501);
  OdeOptions opts;
  double cocycle = 0.0, inverse = 0.0, dual = 0.0, excess = -1e300;
  for (int trial = 0; trial < 10; ++trial) {
    Index const n = g.integer(1, 5);
    Matrix const m0 = 0.4 * g.real(n, n), m1 = 0.4 * g.real(n, n);
    auto const path = OperatorPath::from_function(
        [&](double t) { return Matrix(m0 + std::sin(1.3 * t) * m1); }, -5, 5, 0.01);
    auto const traj = propagate(path, -4, 4, 0.05, opts);
    cocycle = std::max({cocycle, cocycle_residual(traj, 1.0, 2.0), cocycle_residual(traj, -1.5, 3.0)});
    inverse = std::max(inverse, inverse_residual(traj));
    dual = std::max(dual, dual_residual(traj));
    auto const fit = fit_exponential_estimate(traj);
    excess = std::max(excess, fit.lambda - path.sup_norm(-4, 4));
  }
  double const cap = 50 * opts.tol;
  return {cocycle <= cap && inverse <= cap && dual <= cap && excess <= 1e-6,
          fmt("cocycle %.2e, inverse %.2e, dual %.2e", cocycle, inverse, dual) +
              fmt(" (cap %.0e); max lambda - sup|A| = %.3f", cap, excess)};
}

Outcome metric_laws()
{
  oracle::Gen g(601);
  int violations = 0;
  double duality = 0.0, gap_law = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    int const n = g.integer(1, 7);
    auto const x = g.subspace(n, g.integer(0, n));
    auto const y = g.subspace(n, g.integer(0, n));
    auto const z = g.subspace(n, g.integer(0, n));
    double const d1 = delta1(y, z), d = delta_disc(y, z), ds = delta_sphere(y, z);
    if (!(0.5 * d <= d1 + 1e-12 && d1 <= d + 1e-12 && d <= ds + 1e-12)) ++violations;
    duality = std::max(duality, std::abs(rho1(y, z) - rho1(z.orthogonal_complement(), y.orthogonal_complement())));
    if (rho1(x, z) > rho1(y, z) * (1 + rho1(x, y)) + rho1(x, y) + 1e-12) ++violations;
    if (n >= 2) {
      int const k = g.integer(1, n - 1);
      auto const a = g.subspace(n, k), b = g.subspace(n, n - k);
      auto const gm = gap(a, b);
      if (!gm) {
        ++violations;
        continue;
      }
      gap_law = std::max(gap_law, std::abs(op_norm(projector_onto_along(a, b).matrix()) * *gm - 1.0));
    }
  }
  return {violations == 0 && duality <= 1e-9 && gap_law <= 1e-7,
          fmt("%g inequality violations, duality %.2e, |P| gamma - 1 %.2e over 200 instances", violations, duality,
              gap_law)};
}

Outcome stable_cross_validation()
{
  auto const battery = random_battery(7, 50, 6);
  std::vector<double> agree(battery.size(), -1.0), dual(battery.size(), 0.0);
  std::vector<std::string> errors(battery.size());
  parallel_for(battery.size(), [&](std::size_t i) {
    try {
      auto const &p = battery[i].path;
      Subspace const ws = stable_space_limit(p);
      dual[i] = delta1(stable_space_limit(p.adjoint_negated()), ws.orthogonal_complement());
      try {
        auto const g = stable_space_graph(p);
        if (g.data.certificate) agree[i] = delta1(g.space, ws);
      } catch (Error const &e) {
        if (e.code() != "smallness-violated") throw;
      }
    } catch (Error const &e) {
      errors[i] = e.code();
    }
  });
  int certified = 0, errs = 0;
  double worst_agree = 0.0, worst_dual = 0.0;
  for (std::size_t i = 0; i < battery.size(); ++i) {
    if (!errors[i].empty()) ++errs;
    if (agree[i] >= 0.0) {
      ++certified;
      worst_agree = std::max(worst_agree, agree[i]);
    }
    worst_dual = std::max(worst_dual, dual[i]);
  }
  return {errs == 0 && certified > 0 && worst_agree <= 1e-6 && worst_dual <= 1e-6,
          fmt("%g/50 certified paths, max delta1(limit, graph) %.2e, max duality %.2e", certified, worst_agree,
              worst_dual) +
              (errs ? ", " + std::to_string(errs) + " errors" : std::string())};
}

Outcome right_inverse()
{
  auto const h = [](double t) { return Vector::Constant(1, std::exp(-t)); };
  auto const decay = OperatorPath::constant(Matrix::Constant(1, 1, -1.0));
  auto const grow = OperatorPath::constant(Matrix::Constant(1, 1, 1.0));
  auto const a = right_inverse_apply(decay, Projector(Matrix::Identity(1, 1)), h);
  auto const b = right_inverse_apply(grow, Projector(Matrix::Zero(1, 1)), h);
  double err = 0.0;
  for (std::size_t k = 0; k < a.u.values.size(); ++k) {
    double const t = a.u.time(k);
    err = std::max(err, std::abs(a.u.values[k](0) - t * std::exp(-t)));
    err = std::max(err, std::abs(b.u.values[k](0) + 0.5 * std::exp(-t)));
  }
  double const closed = std::max({a.defect, b.defect, err});

  RightInverseOptions opts;
  double const cap = 10 * (opts.step * opts.step + 1e-8);
  double general = 0.0;
  for (auto const &m : random_battery(8, 10, 4)) {
    auto const ws = stable_space_limit(m.path);
    auto const ps = projector_onto_along(ws, ws.orthogonal_complement());
    Vector const dir = Vector::LinSpaced(m.path.dim(), 1.0, 2.0);
    auto const r = right_inverse_apply(
        m.path, ps, [&](double t) { return Vector(dir * std::exp(-0.5 * t) * std::cos(1.5 * t)); }, opts);
    general = std::max(general, r.defect);
  }
  return {closed <= 1e-5 && general <= cap,
          fmt("closed forms %.2e (cap 1e-5), battery defect %.2e (cap %.1e)", closed, general, cap)};
}

Outcome patching()
{
  oracle::Gen g(901);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    int const n = g.integer(1, 4);
    auto const x = g.subspace(n, g.integer(0, n));
    auto const y = g.subspace(n, g.integer(0, n));
    auto const p = patch_path(x, y);
    worst = std::max({worst, delta1(stable_space_limit(p), x), delta1(unstable_space(p), y)});
  }
  return {worst <= 1e-6, fmt("max delta1 over 20 random pairs %.2e", worst)};
}

Outcome flow_structure()
{
  oracle::Gen g(1001);
  int non_additive = 0, homotopy_breaks = 0, hyperbolic_nonzero = 0, disagree = 0, accepted = 0;
  // catenation
  for (int trial = 0; trial < 10; ++trial) {
    Index const n = g.integer(1, 4);
    Matrix const a = g.hyperbolic(n, 0.5), b = g.hyperbolic(n, 0.5), c = g.hyperbolic(n, 0.5);
    auto const r = catenate_checked(segment(a, b), segment(b, c));
    if (!r.additive) ++non_additive;
  }
  auto const up = unit_up_crossing();
  auto const down = unit_path([&](double t) { return up(1.0 - t); });
  if (catenate_checked(up, down).sf_ab != 0) ++non_additive;
  // homotopies with fixed ends
  int homotopies = 0;
  for (int trial = 0; homotopies < 5 && trial < 50; ++trial) {
    Index const n = g.integer(1, 4);
    auto const base = segment(g.hyperbolic(n, 0.5), g.hyperbolic(n, 0.5));
    Matrix const k = g.real(n, n);
    std::vector<FlowReport> flows;
    try {
      for (double s : {0.0, 0.25, 0.5, 0.75, 1.0}) flows.push_back(spectral_flow(homotopy_sample(base, k, s)));
    } catch (Error const &e) {
      if (e.code() != "unresolvable-crossing") throw;
      continue;
    }
    ++homotopies;
    for (auto const &f : flows) {
      ++accepted;
      if (!f.methods_agree) ++disagree;
      if (f.sf != flows.front().sf) ++homotopy_breaks;
    }
  }
  // paths that stay hyperbolic
  for (int trial = 0; trial < 10; ++trial) {
    Index const n = g.integer(1, 5);
    Matrix const d = g.hyperbolic(n, 0.5);
    Matrix const k = 0.5 * g.real(n, n) / std::sqrt(double(n));
    auto const f = spectral_flow(unit_path([&](double t) {
      Matrix const s = Matrix::Identity(n, n) + std::sin(3.0 * t) * k;
      return Matrix(s * d * s.inverse());
    }));
    ++accepted;
    if (f.sf != 0) ++hyperbolic_nonzero;
    if (!f.methods_agree) ++disagree;
  }
  accepted += accepted_paths.load();
  disagree += disagreeing_paths.load();
  return {non_additive == 0 && homotopies == 5 && homotopy_breaks == 0 && hyperbolic_nonzero == 0 && disagree == 0,
          std::to_string(non_additive) + " non-additive catenations, " + std::to_string(homotopies) +
              " homotopies with " + std::to_string(homotopy_breaks) + " breaks, " +
              std::to_string(hyperbolic_nonzero) + " nonzero hyperbolic flows, methods disagree on " +
              std::to_string(disagree) + "/" + std::to_string(accepted) + " accepted paths"};
}

} // namespace

int main()
{
  run(1, "index identity suite on the seeded battery", battery_identity);
  run(2, "closed-form anchors", anchors);
  run(3, "spectral projector oracle", projector_oracle);
  run(4, "functional calculus identities", calculus);
  run(5, "propagator laws", propagator_laws);
  run(6, "Grassmannian metric laws", metric_laws);
  run(7, "stable space cross-validation", stable_cross_validation);
  run(8, "right inverse defect", right_inverse);
  run(9, "patching round trip", patching);
  run(10, "spectral flow structure", flow_structure);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

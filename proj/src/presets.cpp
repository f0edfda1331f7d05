#include "hypflow/presets.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "hypflow/grassmannian.hpp"
#include "hypflow/spectral_flow.hpp"

namespace hypflow {

namespace {

OperatorPath sampled(std::function<Matrix(double)> const &f)
{
  // tanh saturates to 1 in double precision well before |t| = 1e3.
  return OperatorPath::from_function(f, -kPresetHalfWidth, kPresetHalfWidth, kPresetStep, f(-1e3), f(1e3));
}

class Draw
{
public:
  explicit Draw(std::uint64_t seed) : rng_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  double normal() { return std::normal_distribution<double>()(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  double sign() { return integer(0, 1) ? 1.0 : -1.0; }
  Matrix gaussian(Index r, Index c)
  {
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
      for (Index i = 0; i < r; ++i) m(i, j) = normal();
    return m;
  }

private:
  std::mt19937_64 rng_;
};

struct TanhEntry
{
  double a, b, c;
  double operator()(double t) const { return a * std::tanh(t - c) + b; }
};

std::vector<TanhEntry> tanh_entries(Draw &d, Index n)
{
  std::vector<TanhEntry> e;
  for (Index i = 0; i < n; ++i) {
    double const a = d.sign() * d.uniform(0.8, 2.0);
    e.push_back({a, d.uniform(-0.3, 0.3) * std::abs(a), d.uniform(-3.0, 3.0)});
  }
  return e;
}

Matrix diagonal_of(std::vector<TanhEntry> const &e, double t)
{
  auto const n = static_cast<Index>(e.size());
  Matrix m = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) m(i, i) = e[static_cast<std::size_t>(i)](t);
  return m;
}

double sigmoid(double t) { return 0.5 * (1.0 + std::tanh(t)); }

OperatorPath diagonal_family(Draw &d, Index n)
{
  auto const e = tanh_entries(d, n);
  return sampled([e](double t) { return diagonal_of(e, t); });
}

OperatorPath rotated_family(Draw &d, Index n, bool normal)
{
  auto const e = tanh_entries(d, n);
  if (normal) {
    Matrix g = d.gaussian(n, n);
    Matrix const k = 0.5 * (g - g.transpose());
    return sampled([e, k](double t) {
      Matrix const r = (sigmoid(t) * k).exp();
      return Matrix(r * diagonal_of(e, t) * r.adjoint());
    });
  }
  Matrix u = d.gaussian(n, n).triangularView<Eigen::StrictlyUpper>();
  u *= 0.7;
  return sampled([e, u](double t) {
    Matrix const s = Matrix::Identity(u.rows(), u.cols()) + sigmoid(t) * u;
    return Matrix(s * diagonal_of(e, t) * s.inverse());
  });
}

OperatorPath patched_family(Draw &d, Index n)
{
  auto random_subspace = [&](Index k) {
    return k == 0 ? Subspace::zero(n) : Subspace::span(d.gaussian(n, k));
  };
  Subspace const x = random_subspace(d.integer(0, static_cast<int>(n)));
  Subspace y = random_subspace(d.integer(0, static_cast<int>(n)));
  if (x.dim() > 0 && y.dim() > 0 && y.dim() < n && d.integer(0, 1)) {
    // Force a nontrivial intersection.
    Matrix m(n, y.dim());
    m << x.basis().col(0), y.basis().leftCols(y.dim() - 1);
    y = Subspace::span(m);
  }
  return patch_path(x, y, kPresetStep);
}

Matrix random_hyperbolic(Draw &d, Index n)
{
  Matrix core = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    double const re = d.sign() * d.uniform(0.5, 2.0);
    if (i + 1 < n && d.integer(0, 2) == 0) {
      double const im = d.uniform(0.3, 1.5);
      core(i, i) = core(i + 1, i + 1) = re;
      core(i, i + 1) = im;
      core(i + 1, i) = -im;
      ++i;
    } else {
      core(i, i) = re;
    }
  }
  Matrix const v = Matrix::Identity(n, n) + 0.3 * d.gaussian(n, n) / std::sqrt(static_cast<double>(n));
  return v * core * v.inverse();
}

OperatorPath perturbed_family(Draw &d, Index n)
{
  Matrix const am = random_hyperbolic(d, n);
  Matrix const ap = random_hyperbolic(d, n);
  Matrix const e = 0.5 * d.gaussian(n, n) / std::sqrt(static_cast<double>(n));
  double const c = d.uniform(-2.0, 2.0);
  auto f = [am, ap, e, c](double t) {
    double const s = sigmoid(t - c);
    return Matrix((1.0 - s) * am + s * ap + (1.0 / std::cosh(t - c)) * e);
  };
  return OperatorPath::from_function(f, -kPresetHalfWidth, kPresetHalfWidth, kPresetStep, am, ap);
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t id)
{
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + id + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

} // namespace

OperatorPath scalar_tanh(double sign)
{
  return sampled([sign](double t) { return Matrix(Matrix::Constant(1, 1, sign * std::tanh(t))); });
}

OperatorPath tanh_diag()
{
  return sampled([](double t) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = std::tanh(t);
    m(1, 1) = -std::tanh(t);
    return m;
  });
}

OperatorPath rotation_path(double angle)
{
  double const c = std::cos(angle), s = std::sin(angle);
  return sampled([c, s](double t) {
    Matrix m(2, 2);
    m << c * std::tanh(t), s, -s, c * std::tanh(t);
    return m;
  });
}

OperatorPath unit_up_crossing()
{
  return OperatorPath::from_function(
      [](double t) { return Matrix(Matrix::Constant(1, 1, std::tanh(std::numbers::pi * (t - 0.5)))); }, 0.0, 1.0,
      0.005);
}

std::string family_name(Family f)
{
  switch (f) {
  case Family::Diagonal: return "diagonal";
  case Family::RotatedFrame: return "rotated-frame";
  case Family::Patched: return "patched";
  case Family::RandomPerturbed: return "random-perturbed";
  }
  return "unknown";
}

BatteryMember battery_member(int id, Family family, std::uint64_t seed, Index max_dim)
{
  Draw d(seed);
  BatteryMember m;
  m.id = id;
  m.family = family;
  m.seed = seed;
  m.dim = d.integer(1, static_cast<int>(max_dim));
  switch (family) {
  case Family::Diagonal: m.path = diagonal_family(d, m.dim); break;
  case Family::RotatedFrame: m.path = rotated_family(d, m.dim, id % 8 < 4); break;
  case Family::Patched: m.path = patched_family(d, m.dim); break;
  case Family::RandomPerturbed: m.path = perturbed_family(d, m.dim); break;
  }
  return m;
}

std::vector<BatteryMember> random_battery(std::uint64_t seed, int count, Index max_dim)
{
  std::vector<BatteryMember> out;
  for (int id = 0; id < count; ++id) {
    out.push_back(battery_member(id, static_cast<Family>(id % 4), mix(seed, static_cast<std::uint64_t>(id)), max_dim));
  }
  return out;
}

} // namespace hypflow

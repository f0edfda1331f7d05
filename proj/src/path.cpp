#include "hypflow/path.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hypflow {

OperatorPath::OperatorPath(std::vector<double> times, std::vector<Matrix> samples, std::optional<Matrix> limit_minus,
                           std::optional<Matrix> limit_plus)
  : times_(std::move(times)), samples_(std::move(samples)), limit_minus_(std::move(limit_minus)),
    limit_plus_(std::move(limit_plus))
{
  if (times_.size() < 2 || times_.size() != samples_.size()) {
    throw InputError("bad-path", "a path needs at least two samples and one matrix per time");
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) {
      std::ostringstream os;
      os << "sample times must be strictly increasing (t[" << i << "] = " << times_[i] << ")";
      throw InputError("bad-path", os.str());
    }
  }
  Index const n = samples_.front().rows();
  auto check = [n](Matrix const &m, char const *what) {
    require_finite(m, what);
    require_square(m, what);
    if (m.rows() != n) throw InputError("dimension-mismatch", std::string(what) + " has the wrong dimension");
  };
  norms_.reserve(samples_.size());
  for (auto const &m : samples_) {
    check(m, "path sample");
    norms_.push_back(op_norm(m));
  }
  if (limit_minus_) {
    check(*limit_minus_, "limit A(-inf)");
    tail_minus_ = op_norm(samples_.front() - *limit_minus_);
  }
  if (limit_plus_) {
    check(*limit_plus_, "limit A(+inf)");
    tail_plus_ = op_norm(samples_.back() - *limit_plus_);
  }
}

OperatorPath OperatorPath::from_function(std::function<Matrix(double)> const &f, double t0, double t1, double dt,
                                         std::optional<Matrix> limit_minus, std::optional<Matrix> limit_plus)
{
  if (!(t1 > t0) || !(dt > 0.0)) {
    throw InputError("bad-path", "from_function needs t1 > t0 and dt > 0");
  }
  auto const m = static_cast<std::size_t>(std::ceil((t1 - t0) / dt - 1e-9));
  std::vector<double> times(m + 1);
  std::vector<Matrix> samples(m + 1);
  for (std::size_t i = 0; i <= m; ++i) {
    times[i] = i == m ? t1 : t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(m);
    samples[i] = f(times[i]);
  }
  return OperatorPath(std::move(times), std::move(samples), std::move(limit_minus), std::move(limit_plus));
}

OperatorPath OperatorPath::constant(Matrix const &a, double t0, double t1)
{
  return OperatorPath({t0, t1}, {a, a}, a, a);
}

Matrix OperatorPath::operator()(double t) const
{
  if (t <= times_.front()) return t < times_.front() && limit_minus_ ? *limit_minus_ : samples_.front();
  if (t >= times_.back()) return t > times_.back() && limit_plus_ ? *limit_plus_ : samples_.back();
  auto const it = std::upper_bound(times_.begin(), times_.end(), t);
  auto const j = static_cast<std::size_t>(it - times_.begin());
  double const w = (t - times_[j - 1]) / (times_[j] - times_[j - 1]);
  return (1.0 - w) * samples_[j - 1] + w * samples_[j];
}

double OperatorPath::sup_norm(double a, double b) const
{
  double s = op_norm((*this)(a));
  s = std::max(s, op_norm((*this)(b)));
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (times_[i] > a && times_[i] < b) s = std::max(s, norms_[i]);
  }
  if (a < times_.front() && limit_minus_) s = std::max(s, op_norm(*limit_minus_));
  if (b > times_.back() && limit_plus_) s = std::max(s, op_norm(*limit_plus_));
  return s;
}

double OperatorPath::sup_norm() const
{
  double s = *std::max_element(norms_.begin(), norms_.end());
  if (limit_minus_) s = std::max(s, op_norm(*limit_minus_));
  if (limit_plus_) s = std::max(s, op_norm(*limit_plus_));
  return s;
}

std::optional<double> OperatorPath::next_knot(double t, int direction) const
{
  if (direction > 0) {
    auto const it = std::upper_bound(times_.begin(), times_.end(), t);
    if (it == times_.end()) return std::nullopt;
    return *it;
  }
  auto const it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return std::nullopt;
  return *(it - 1);
}

OperatorPath OperatorPath::shifted(double tau) const
{
  std::vector<double> t(times_);
  for (auto &x : t) x -= tau;
  return OperatorPath(std::move(t), samples_, limit_minus_, limit_plus_);
}

OperatorPath OperatorPath::reversed_negated() const
{
  std::vector<double> t(times_.rbegin(), times_.rend());
  for (auto &x : t) x = -x;
  std::vector<Matrix> s;
  s.reserve(samples_.size());
  for (auto it = samples_.rbegin(); it != samples_.rend(); ++it) s.push_back(-*it);
  std::optional<Matrix> lm, lp;
  if (limit_plus_) lm = Matrix(-*limit_plus_);
  if (limit_minus_) lp = Matrix(-*limit_minus_);
  return OperatorPath(std::move(t), std::move(s), std::move(lm), std::move(lp));
}

OperatorPath OperatorPath::adjoint_negated() const
{
  return transformed([](Matrix const &m) { return Matrix(-m.adjoint()); });
}

OperatorPath OperatorPath::transformed(std::function<Matrix(Matrix const &)> const &g) const
{
  std::vector<Matrix> s;
  s.reserve(samples_.size());
  for (auto const &m : samples_) s.push_back(g(m));
  std::optional<Matrix> lm, lp;
  if (limit_minus_) lm = g(*limit_minus_);
  if (limit_plus_) lp = g(*limit_plus_);
  return OperatorPath(times_, std::move(s), std::move(lm), std::move(lp));
}

OperatorPath OperatorPath::restricted(double a, double b) const
{
  if (!(b > a)) throw InputError("bad-window", "restricted: window must have b > a");
  std::vector<double> t{a};
  std::vector<Matrix> s{(*this)(a)};
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (times_[i] > a + 1e-12 && times_[i] < b - 1e-12) {
      t.push_back(times_[i]);
      s.push_back(samples_[i]);
    }
  }
  t.push_back(b);
  s.push_back((*this)(b));
  return OperatorPath(std::move(t), std::move(s));
}

OperatorPath OperatorPath::rescaled_to_unit(double a, double b) const
{
  OperatorPath r = restricted(a, b);
  std::vector<double> t(r.times_);
  for (auto &x : t) x = (x - a) / (b - a);
  t.front() = 0.0;
  t.back() = 1.0;
  return OperatorPath(std::move(t), r.samples_);
}

std::optional<double> tail_truncation(OperatorPath const &path, double tail_tol, double max_window)
{
  if (!path.limit_minus() || !path.limit_plus()) return std::nullopt;
  auto const &t = path.times();
  auto const &s = path.samples();
  double right = 0.0;
  for (std::size_t i = t.size(); i-- > 0;) {
    if (op_norm(s[i] - *path.limit_plus()) > tail_tol) {
      right = i + 1 < t.size() ? t[i + 1] : t[i];
      break;
    }
  }
  double left = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (op_norm(s[i] - *path.limit_minus()) > tail_tol) {
      left = i > 0 ? -t[i - 1] : -t[i];
      break;
    }
  }
  double const w = std::max({right, left, 0.0});
  if (w > max_window) return std::nullopt;
  return w;
}

} // namespace hypflow

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "hypflow/cli.hpp"
#include "hypflow/presets.hpp"
#include "hypflow/spectral_flow.hpp"

namespace hypflow {

namespace {

using nlohmann::json;

json scalar_json(Scalar z)
{
  if (z.imag() == 0.0) return z.real();
  return json::array({z.real(), z.imag()});
}

Scalar scalar_from(json const &j)
{
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw InputError("bad-spec", "matrix entries must be numbers or [re, im] pairs");
}

json matrix_json(Matrix const &m)
{
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) out.push_back(scalar_json(m(i, j)));
  return out;
}

Matrix matrix_from(json const &j, Index n, char const *what)
{
  if (!j.is_array() || static_cast<Index>(j.size()) != n * n) {
    std::ostringstream os;
    os << what << " must be a row-major list of " << n * n << " entries";
    throw InputError("bad-spec", os.str());
  }
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < n; ++k) m(i, k) = scalar_from(j[static_cast<std::size_t>(i * n + k)]);
  return m;
}

json vector_json(Vector const &v)
{
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(scalar_json(v(i)));
  return out;
}

Vector vector_from(json const &j, Index n)
{
  if (!j.is_array() || static_cast<Index>(j.size()) != n) {
    throw InputError("bad-spec", "subspace vectors must have dim entries");
  }
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = scalar_from(j[static_cast<std::size_t>(i)]);
  return v;
}

bool same_matrix(Matrix const &a, Matrix const &b)
{
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.size() == 0 || a == b);
}

bool same_optional(std::optional<Matrix> const &a, std::optional<Matrix> const &b)
{
  if (a.has_value() != b.has_value()) return false;
  return !a || same_matrix(*a, *b);
}

template <class M>
bool same_list(std::vector<M> const &a, std::vector<M> const &b)
{
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!same_matrix(a[i], b[i])) return false;
  return true;
}

Subspace span_or_zero(std::vector<Vector> const &vs, Index n)
{
  if (vs.empty()) return Subspace::zero(n);
  Matrix m(n, static_cast<Index>(vs.size()));
  for (std::size_t k = 0; k < vs.size(); ++k) m.col(static_cast<Index>(k)) = vs[k];
  return Subspace::span(m);
}

} // namespace

bool same_spec(PathSpec const &a, PathSpec const &b)
{
  return a.dim == b.dim && a.kind == b.kind && a.times == b.times && same_list(a.samples, b.samples) &&
         same_optional(a.limit_minus, b.limit_minus) && same_optional(a.limit_plus, b.limit_plus) &&
         same_optional(a.matrix, b.matrix) && a.preset == b.preset && a.seed == b.seed && a.count == b.count &&
         a.dimension == b.dimension && a.angle == b.angle && same_list(a.x, b.x) && same_list(a.y, b.y);
}

std::string serialize_path_spec(PathSpec const &spec)
{
  json j;
  j["dim"] = spec.dim;
  j["kind"] = spec.kind;
  if (spec.kind == "samples") {
    j["times"] = spec.times;
    json samples = json::array();
    for (auto const &m : spec.samples) samples.push_back(matrix_json(m));
    j["samples"] = samples;
    j["limit_minus"] = spec.limit_minus ? matrix_json(*spec.limit_minus) : json(nullptr);
    j["limit_plus"] = spec.limit_plus ? matrix_json(*spec.limit_plus) : json(nullptr);
  } else if (spec.kind == "matrix") {
    j["matrix"] = spec.matrix ? matrix_json(*spec.matrix) : json(nullptr);
  } else {
    json p;
    p["name"] = spec.preset;
    p["seed"] = spec.seed;
    p["count"] = spec.count;
    p["dimension"] = spec.dimension;
    p["angle"] = spec.angle;
    json x = json::array(), y = json::array();
    for (auto const &v : spec.x) x.push_back(vector_json(v));
    for (auto const &v : spec.y) y.push_back(vector_json(v));
    p["x"] = x;
    p["y"] = y;
    j["preset"] = p;
  }
  return j.dump(2);
}

PathSpec parse_path_spec(std::string const &text)
{
  json j;
  try {
    j = json::parse(text);
  } catch (json::exception const &e) {
    throw InputError("bad-spec", std::string("spec is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("bad-spec", "spec must be a JSON object");
  PathSpec spec;
  try {
    spec.kind = j.value("kind", std::string("preset"));
    spec.dim = j.value("dim", Index{0});
    if (spec.kind == "samples") {
      if (spec.dim < 1) throw InputError("bad-spec", "samples need dim >= 1");
      spec.times = j.at("times").get<std::vector<double>>();
      for (auto const &m : j.at("samples")) spec.samples.push_back(matrix_from(m, spec.dim, "sample"));
      if (spec.times.size() != spec.samples.size() || spec.times.empty()) {
        throw InputError("bad-spec", "times and samples must be nonempty and of equal length");
      }
      for (std::size_t i = 1; i < spec.times.size(); ++i) {
        if (!(spec.times[i] > spec.times[i - 1])) throw InputError("bad-spec", "sample times must be strictly increasing");
      }
      if (j.contains("limit_minus") && !j["limit_minus"].is_null()) {
        spec.limit_minus = matrix_from(j["limit_minus"], spec.dim, "limit_minus");
      }
      if (j.contains("limit_plus") && !j["limit_plus"].is_null()) {
        spec.limit_plus = matrix_from(j["limit_plus"], spec.dim, "limit_plus");
      }
    } else if (spec.kind == "matrix") {
      if (spec.dim < 1) throw InputError("bad-spec", "matrix needs dim >= 1");
      spec.matrix = matrix_from(j.at("matrix"), spec.dim, "matrix");
    } else if (spec.kind == "preset") {
      json const &p = j.at("preset");
      spec.preset = p.at("name").get<std::string>();
      spec.seed = p.value("seed", std::uint64_t{7});
      spec.count = p.value("count", 50);
      spec.dimension = p.value("dimension", Index{6});
      spec.angle = p.value("angle", spec.angle);
      Index const n = spec.dim > 0 ? spec.dim : 2;
      if (p.contains("x"))
        for (auto const &v : p["x"]) spec.x.push_back(vector_from(v, n));
      if (p.contains("y"))
        for (auto const &v : p["y"]) spec.y.push_back(vector_from(v, n));
    } else {
      throw InputError("bad-spec", "kind must be samples, preset or matrix");
    }
  } catch (json::exception const &e) {
    throw InputError("bad-spec", std::string("malformed spec: ") + e.what());
  }
  return spec;
}

std::vector<NamedPath> build_paths(PathSpec const &spec)
{
  std::vector<NamedPath> out;
  if (spec.kind == "samples") {
    out.push_back({0, "samples", OperatorPath(spec.times, spec.samples, spec.limit_minus, spec.limit_plus)});
    return out;
  }
  if (spec.kind == "matrix") {
    if (!spec.matrix) throw InputError("bad-spec", "matrix spec without a matrix");
    out.push_back({0, "matrix", OperatorPath::constant(*spec.matrix)});
    return out;
  }
  std::string const &name = spec.preset;
  if (name == "scalar-tanh") {
    out.push_back({0, name, scalar_tanh()});
  } else if (name == "tanh-diag") {
    out.push_back({0, name, tanh_diag()});
  } else if (name == "rotation") {
    out.push_back({0, name, rotation_path(spec.angle)});
  } else if (name == "patch") {
    Index const n = spec.dim > 0 ? spec.dim : 2;
    std::vector<Vector> x = spec.x, y = spec.y;
    if (x.empty() && y.empty() && n >= 2) {
      x.push_back(Vector::Unit(n, 0));
      y.push_back(Vector::Unit(n, 1));
    }
    out.push_back({0, name, patch_path(span_or_zero(x, n), span_or_zero(y, n))});
  } else if (name == "random-battery") {
    if (spec.count < 1 || spec.dimension < 1 || spec.dimension > 8) {
      throw InputError("bad-spec", "battery needs count >= 1 and 1 <= dimension <= 8");
    }
    for (auto &m : random_battery(spec.seed, spec.count, spec.dimension)) {
      out.push_back({m.id, family_name(m.family), std::move(m.path)});
    }
  } else {
    throw InputError("bad-spec", "unknown preset '" + name + "'");
  }
  return out;
}

} // namespace hypflow

#include "hypflow/cli.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypflow/differential_operator.hpp"
#include "hypflow/invariant_spaces.hpp"
#include "hypflow/presets.hpp"
#include "hypflow/spectral.hpp"
#include "hypflow/spectral_flow.hpp"

namespace hypflow {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr char const *kVersion = "0.1.0";

struct Flags
{
  std::string spec_file;
  std::string preset;
  std::uint64_t seed = 7;
  int count = 50;
  int dim = 6;
  double angle = 1.5707963267948966;
  double rank_tol = kDefaultRankTol;
  double ode_tol = 1e-10;
  double tail_tol = 1e-6;
  double horizon = 40.0;
  double grid_step = 0.0;
  double window = 0.0;
  std::string csv;
  std::string output;
  int threads = 0;
};

void add_common(CLI::App *cmd, Flags &f)
{
  cmd->add_option("spec", f.spec_file, "path specification (JSON)");
  cmd->add_option("--preset", f.preset, "tanh-diag | scalar-tanh | rotation | patch | random-battery");
  cmd->add_option("--seed", f.seed, "battery seed");
  cmd->add_option("--count", f.count, "battery size");
  cmd->add_option("--dim", f.dim, "largest battery dimension");
  cmd->add_option("--angle", f.angle, "rotation preset angle");
  cmd->add_option("--rank-tol", f.rank_tol, "relative rank threshold");
  cmd->add_option("--ode-tol", f.ode_tol, "propagator tolerance");
  cmd->add_option("--tail-tol", f.tail_tol, "tail residual tolerance");
  cmd->add_option("--horizon", f.horizon, "largest horizon for invariant spaces");
  cmd->add_option("--grid-step", f.grid_step, "grid step of the discretized operator (0 = automatic)");
  cmd->add_option("--window", f.window, "half width T of the window (0 = automatic)");
  cmd->add_option("--csv", f.csv, "CSV dump of the computed time series");
  cmd->add_option("--output", f.output, "write the JSON report to this file");
  cmd->add_option("--threads", f.threads, "worker threads for batteries (0 = hardware)");
}

PathSpec load_spec(Flags const &f)
{
  PathSpec spec;
  if (!f.spec_file.empty()) {
    std::ifstream in(f.spec_file);
    if (!in) throw InputError("bad-spec", "cannot read spec file " + f.spec_file);
    std::stringstream buf;
    buf << in.rdbuf();
    spec = parse_path_spec(buf.str());
    if (f.preset.empty()) return spec;
  }
  if (f.preset.empty()) throw InputError("bad-spec", "give a spec file or --preset");
  spec.kind = "preset";
  spec.preset = f.preset;
  spec.seed = f.seed;
  spec.count = f.count;
  spec.dimension = f.dim;
  spec.angle = f.angle;
  return spec;
}

InvariantOptions invariant_options(Flags const &f)
{
  InvariantOptions o;
  o.horizon = f.horizon;
  o.tail_tol = f.tail_tol;
  o.ode.tol = f.ode_tol;
  return o;
}

IndexOptions index_options(Flags const &f)
{
  IndexOptions o;
  o.rank_tol = f.rank_tol;
  o.tail_tol = f.tail_tol;
  o.step = f.grid_step;
  o.half_width = f.window;
  o.invariant = invariant_options(f);
  return o;
}

json complex_json(Scalar z) { return json::array({z.real(), z.imag()}); }

json matrix_rows(Matrix const &m)
{
  bool const real = is_real(m, 0.0);
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(real ? json(m(i, j).real()) : complex_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

json basis_json(Subspace const &s)
{
  json cols = json::array();
  Matrix const &b = s.basis();
  bool const real = is_real(b, 0.0);
  for (Index k = 0; k < b.cols(); ++k) {
    json v = json::array();
    for (Index i = 0; i < b.rows(); ++i) v.push_back(real ? json(b(i, k).real()) : complex_json(b(i, k)));
    cols.push_back(v);
  }
  return cols;
}

json error_json(Error const &e)
{
  return {{"kind", e.kind() == ErrorKind::Input ? "input" : "numerical"}, {"code", e.code()}, {"message", e.what()}};
}

int exit_code(Error const &e) { return e.kind() == ErrorKind::Input ? kExitInput : kExitNumerical; }

json projector_json(Matrix const &a)
{
  Splitting const s = spectral_projectors(a);
  Index const n = a.rows();
  return {{"dim", n},
          {"margin", s.margin},
          {"rank_plus", s.plus.rank()},
          {"rank_minus", s.minus.rank()},
          {"idempotency_residual", s.plus.idempotency_residual()},
          {"sum_residual", op_norm(s.plus.matrix() + s.minus.matrix() - Matrix::Identity(n, n))},
          {"nodes", s.nodes},
          {"plus", matrix_rows(s.plus.matrix())},
          {"minus", matrix_rows(s.minus.matrix())}};
}

NamedPath single_path(PathSpec const &spec)
{
  auto paths = build_paths(spec);
  if (paths.size() != 1) throw InputError("bad-spec", "this command takes a single path, not a battery");
  return std::move(paths.front());
}

json cmd_projector(PathSpec const &spec, Flags const &)
{
  if (spec.kind == "matrix") return projector_json(*spec.matrix);
  NamedPath const p = single_path(spec);
  return {{"minus_infinity", projector_json(p.path.end_minus())}, {"plus_infinity", projector_json(p.path.end_plus())}};
}

json cmd_stable(PathSpec const &spec, Flags const &f)
{
  NamedPath const p = single_path(spec);
  InvariantOptions const io = invariant_options(f);
  StableSpace const ws = stable_space_limit_ex(p.path, io);
  StableSpace const wu = unstable_space_ex(p.path, io);
  json out;
  auto describe = [](StableSpace const &s) {
    return json{{"dim", s.space.dim()},
                {"basis", basis_json(s.space)},
                {"horizon", s.horizon},
                {"cauchy_gap", s.cauchy_gap},
                {"decay_rate", s.decay_rate}};
  };
  out["stable"] = describe(ws);
  out["unstable"] = describe(wu);
  PairIndexReport const pair = pair_index(ws.space, wu.space, 1e-6);
  out["intersection_dim"] = pair.dim_intersection;
  out["codim_sum"] = pair.codim_sum;
  out["pair_index"] = pair.index;
  try {
    GraphOptions go;
    go.tol = io.tol;
    go.max_tau = f.horizon;
    go.ode = io.ode;
    StableGraph const g = stable_space_graph(p.path, go);
    out["graph"] = {{"certificate", g.data.certificate},
                    {"tau", g.data.tau},
                    {"nu", g.data.nu},
                    {"s_norm", g.graph.norm},
                    {"s_bound", g.graph.bound},
                    {"agreement_delta1", delta1(g.space, ws.space)}};
    GraphEvolution const ev = graph_evolution(p.path, 0.0, io);
    out["graph_evolution"] = {{"s_norm", ev.s.norm},
                              {"t_norm", ev.t.norm},
                              {"s_bound", ev.s.bound},
                              {"t_bound", ev.t.bound},
                              {"certificate", ev.certificate}};
  } catch (Error const &e) {
    out["graph"] = {{"error", error_json(e)}};
  }
  return out;
}

void write_csv(std::string const &file, std::string const &text)
{
  std::ofstream os(file);
  if (!os) throw InputError("bad-output", "cannot write " + file);
  os << text;
}

json cmd_index(PathSpec const &spec, Flags const &f)
{
  NamedPath const p = single_path(spec);
  IndexReport const r = numeric_index(p.path, index_options(f));
  if (!f.csv.empty()) {
    std::ostringstream os;
    Index const n = p.path.dim();
    os << "t";
    for (Index k = 0; k < r.ker; ++k)
      for (Index i = 0; i < n; ++i) os << ",u" << k << "_" << i;
    os << "\n" << std::setprecision(10);
    for (Index j = 0; j < r.nodes; ++j) {
      os << -r.half_width + r.step * static_cast<double>(j);
      for (Index k = 0; k < r.ker; ++k)
        for (Index i = 0; i < n; ++i) os << "," << r.kernel(j * n + i, k).real();
      os << "\n";
    }
    write_csv(f.csv, os.str());
  }
  json smallest_k = json::array(), smallest_c = json::array();
  for (Index i = 0; i < r.ker_cut.smallest.size(); ++i) smallest_k.push_back(r.ker_cut.smallest(i));
  for (Index i = 0; i < r.coker_cut.smallest.size(); ++i) smallest_c.push_back(r.coker_cut.smallest(i));
  return {{"ker", r.ker},
          {"coker", r.coker},
          {"index", r.index},
          {"pair_index", r.pair.index},
          {"match", r.match},
          {"reliable", r.reliable},
          {"stable_dim", r.stable_dim},
          {"unstable_dim", r.unstable_dim},
          {"intersection_dim", r.pair.dim_intersection},
          {"codim_sum", r.pair.codim_sum},
          {"half_width", r.half_width},
          {"step", r.step},
          {"nodes", r.nodes},
          {"threshold", r.ker_cut.threshold},
          {"ker_gap_ratio", r.ker_cut.gap_ratio},
          {"coker_gap_ratio", r.coker_cut.gap_ratio},
          {"smallest_singular_values", smallest_k},
          {"smallest_adjoint_singular_values", smallest_c}};
}

json flow_json(FlowReport const &r)
{
  json events = json::array();
  for (auto const &e : r.events) {
    events.push_back({{"time", e.time},
                      {"eigenvalue", complex_json(e.eigenvalue)},
                      {"direction", e.direction},
                      {"multiplicity", e.multiplicity}});
  }
  return {{"sf", r.sf},
          {"sf_crossing", r.sf_crossing},
          {"methods_agree", r.methods_agree},
          {"method", "projector-lift"},
          {"events", events},
          {"delta", r.delta ? json(*r.delta) : json(nullptr)},
          {"delta_invariant", r.delta_invariant}};
}

json cmd_sf(PathSpec const &spec, Flags const &f)
{
  NamedPath const p = single_path(spec);
  FlowReport const r = spectral_flow_asymptotic(p.path);
  if (!f.csv.empty()) {
    double const d = r.delta.value_or(1.0);
    std::ostringstream os;
    os << "t";
    for (Index i = 0; i < p.path.dim(); ++i) os << ",re_lambda" << i;
    os << "\n" << std::setprecision(10);
    for (int k = 0; k <= 400; ++k) {
      double const t = -d + 2.0 * d * k / 400.0;
      Eigen::VectorXd re = eigenvalues(p.path(t)).real();
      std::sort(re.data(), re.data() + re.size());
      os << t;
      for (Index i = 0; i < re.size(); ++i) os << "," << re(i);
      os << "\n";
    }
    write_csv(f.csv, os.str());
  }
  return flow_json(r);
}

json verify_one(NamedPath const &p, IdentityOptions const &opts)
{
  json e = {{"id", p.id}, {"label", p.label}, {"dim", p.path.dim()}};
  try {
    IdentityReport const r = verify_identity(p.path, opts);
    e["sf"] = r.flow.sf;
    e["sf_crossing"] = r.flow.sf_crossing;
    e["index"] = r.index.index;
    e["ker"] = r.index.ker;
    e["coker"] = r.index.coker;
    e["pair_index"] = r.index.pair.index;
    e["relative_dimension"] = r.relative_dim;
    e["reliable"] = r.index.reliable;
    e["holds"] = r.holds;
  } catch (Error const &err) {
    e["error"] = error_json(err);
  }
  return e;
}

int cmd_verify(PathSpec const &spec, Flags const &f, json &result)
{
  auto const paths = build_paths(spec);
  IdentityOptions opts;
  opts.index = index_options(f);
  std::vector<json> entries(paths.size());
  unsigned const hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned const workers = std::min<unsigned>(f.threads > 0 ? static_cast<unsigned>(f.threads) : hw,
                                              static_cast<unsigned>(paths.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < paths.size();) entries[i] = verify_one(paths[i], opts);
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto &t : pool) t.join();

  int passes = 0, errors = 0, exit = kExitOk;
  for (auto const &e : entries) {
    if (e.contains("error")) {
      ++errors;
      if (exit == kExitOk) exit = e["error"]["kind"] == "input" ? kExitInput : kExitNumerical;
    } else if (e["holds"].get<bool>()) {
      ++passes;
    }
  }
  bool const mismatch = passes + errors < static_cast<int>(entries.size());
  if (mismatch) exit = kExitIdentity;
  result = {{"paths", entries}, {"passes", passes}, {"errors", errors}, {"total", entries.size()}};
  return exit;
}

// Worked examples with their expected values.
int cmd_demo(Flags const &f, json &result)
{
  json items = json::array();
  bool all = true;
  auto check = [&](std::string name, json expected, auto &&compute) {
    json observed;
    bool ok = false;
    try {
      observed = compute();
      ok = observed == expected;
    } catch (Error const &e) {
      observed = {{"error", error_json(e)}};
      ok = expected.contains("error") && expected["error"] == e.code();
      if (ok) observed = {{"error", e.code()}};
    }
    all = all && ok;
    items.push_back({{"name", std::move(name)}, {"expected", expected}, {"observed", observed}, {"ok", ok}});
  };
  IndexOptions const io = index_options(f);

  check("sf of scalar tanh", json{{"sf", 1}, {"methods_agree", true}}, [] {
    FlowReport const r = spectral_flow_asymptotic(scalar_tanh());
    return json{{"sf", r.sf}, {"methods_agree", r.methods_agree}};
  });
  check("index of scalar tanh", json{{"ker", 0}, {"coker", 1}, {"index", -1}}, [&] {
    IndexReport const r = numeric_index(scalar_tanh(), io);
    return json{{"ker", r.ker}, {"coker", r.coker}, {"index", r.index}};
  });
  check("reversed scalar tanh", json{{"sf", -1}, {"index", 1}}, [&] {
    return json{{"sf", spectral_flow_asymptotic(scalar_tanh(-1.0)).sf}, {"index", numeric_index(scalar_tanh(-1.0), io).index}};
  });
  check("index of tanh-diag",
        json{{"ker", 1}, {"coker", 1}, {"index", 0}, {"pair_index", 0}, {"match", true}, {"sech_match", true}}, [&] {
          IndexReport const r = numeric_index(tanh_diag(), io);
          double worst = 0.0, scale = 0.0;
          if (r.ker == 1) {
            Index const n = 2;
            Index pivot = 0;
            for (Index j = 0; j < r.nodes; ++j)
              if (std::abs(r.kernel(j * n + 1, 0)) > std::abs(r.kernel(pivot * n + 1, 0))) pivot = j;
            Scalar const norm = r.kernel(pivot * n + 1, 0) * std::cosh(-r.half_width + r.step * pivot);
            for (Index j = 0; j < r.nodes; ++j) {
              double const t = -r.half_width + r.step * static_cast<double>(j);
              worst = std::max(worst, std::abs(r.kernel(j * n + 1, 0) / norm - 1.0 / std::cosh(t)));
              scale = std::max(scale, 1.0 / std::cosh(t));
            }
          }
          return json{{"ker", r.ker},        {"coker", r.coker}, {"index", r.index},
                      {"pair_index", r.pair.index}, {"match", r.match}, {"sech_match", r.ker == 1 && worst <= 1e-4 * scale}};
        });
  check("sf of tanh-diag", json{{"sf", 0}, {"crossings", 2}}, [] {
    FlowReport const r = spectral_flow_asymptotic(tanh_diag());
    return json{{"sf", r.sf}, {"crossings", r.events.size()}};
  });
  check("rotation limits are rejected", json{{"error", "not-hyperbolic"}},
        [&] { return json{{"index", numeric_index(rotation_path(1.5707963267948966), io).index}}; });
  check("patching recovers the pair", json{{"stable_ok", true}, {"unstable_ok", true}}, [&] {
    Index const n = 2;
    Subspace const x = Subspace::span(Vector::Unit(n, 0));
    Subspace const y = Subspace::span(Vector::Unit(n, 1));
    OperatorPath const a = patch_path(x, y);
    return json{{"stable_ok", delta_disc(stable_space_limit(a, io.invariant), x) <= 1e-6},
                {"unstable_ok", delta_disc(unstable_space(a, io.invariant), y) <= 1e-6}};
  });
  check("spectral flow of an up-crossing on [0, 1]", json{{"sf", 1}, {"crossings", 1}}, [] {
    FlowReport const r = spectral_flow(unit_up_crossing());
    return json{{"sf", r.sf}, {"crossings", r.events.size()}};
  });
  check("right inverse of u' + u = e^{-t}", json{{"closed_form", true}}, [] {
    OperatorPath const a = OperatorPath::constant(Matrix::Constant(1, 1, -1.0));
    RightInverseResult const r =
        right_inverse_apply(a, Projector(Matrix::Identity(1, 1)), [](double t) { return Vector::Constant(1, std::exp(-t)); });
    double worst = 0.0;
    for (std::size_t k = 0; k < r.u.values.size(); ++k) {
      double const t = r.u.time(k);
      worst = std::max(worst, std::abs(r.u.values[k](0) - t * std::exp(-t)));
    }
    return json{{"closed_form", worst <= 1e-5 && r.defect <= 1e-5}};
  });
  check("projectors of diag(2, -3)", json{{"rank_plus", 1}, {"rank_minus", 1}}, [] {
    Matrix a = Matrix::Zero(2, 2);
    a(0, 0) = 2.0;
    a(1, 1) = -3.0;
    Splitting const s = spectral_projectors(a);
    return json{{"rank_plus", s.plus.rank()}, {"rank_minus", s.minus.rank()}};
  });
  result = {{"examples", items}, {"all_ok", all}};
  return all ? kExitOk : kExitIdentity;
}

std::string timestamp()
{
  std::time_t const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void emit(json const &report, Flags const &f, std::ostream &out)
{
  std::string const text = report.dump(2) + "\n";
  if (f.output.empty()) {
    out << text;
  } else {
    std::ofstream os(f.output);
    if (!os) throw InputError("bad-output", "cannot write " + f.output);
    os << text;
  }
}

} // namespace

int run_cli(std::vector<std::string> const &args, std::ostream &out, std::ostream &err)
{
  CLI::App app{"Index, invariant spaces and spectral flow of asymptotically hyperbolic paths", "hypflow"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::string> const names = {"projector", "stable", "index", "sf", "verify", "demo"};
  std::vector<std::string> const help = {"spectral projectors of a matrix or of the limits of a path",
                                         "stable and unstable spaces, graph operators",
                                         "numerical index of u' - A u with the pair prediction",
                                         "spectral flow by projector lift and crossing count",
                                         "identity suite over a path or battery",
                                         "worked examples with expected values"};
  for (std::size_t i = 0; i < names.size(); ++i) add_common(app.add_subcommand(names[i], help[i]), flags);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (CLI::CallForHelp const &) {
    out << app.help();
    return kExitOk;
  } catch (CLI::ParseError const &e) {
    err << e.what() << "\n";
    return kExitInput;
  }
  std::string const command = app.get_subcommands().front()->get_name();

  ordered_json report;
  report["header"] = {{"tool", "hypflow"}, {"version", kVersion}, {"timestamp", timestamp()}};
  report["command"] = command;
  int code = kExitOk;
  try {
    json result;
    if (command == "demo") {
      code = cmd_demo(flags, result);
    } else {
      PathSpec const spec = load_spec(flags);
      if (command == "projector") result = cmd_projector(spec, flags);
      if (command == "stable") result = cmd_stable(spec, flags);
      if (command == "index") result = cmd_index(spec, flags);
      if (command == "sf") result = cmd_sf(spec, flags);
      if (command == "verify") code = cmd_verify(spec, flags, result);
    }
    report["result"] = result;
  } catch (Error const &e) {
    report["error"] = error_json(e);
    err << "hypflow " << command << ": " << e.code() << ": " << e.what() << "\n";
    code = exit_code(e);
  } catch (std::exception const &e) {
    report["error"] = {{"kind", "numerical"}, {"code", "internal"}, {"message", e.what()}};
    err << "hypflow " << command << ": " << e.what() << "\n";
    code = kExitNumerical;
  }
  try {
    emit(report, flags, out);
  } catch (Error const &e) {
    err << e.what() << "\n";
    return kExitInput;
  }
  return code;
}

} // namespace hypflow

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hypflow/cli.hpp"

using namespace hypflow;
using nlohmann::json;

namespace {

struct Run
{
  int code = 0;
  json report;
  std::string err;
};

Run run(std::vector<std::string> const &args)
{
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(args, out, err);
  r.err = err.str();
  if (!out.str().empty()) r.report = json::parse(out.str());
  return r;
}

std::filesystem::path scratch(std::string const &name)
{
  auto const dir = std::filesystem::temp_directory_path() / "hypflow-tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string write(std::string const &name, std::string const &text)
{
  auto const p = scratch(name);
  std::ofstream(p) << text;
  return p.string();
}

} // namespace

TEST_CASE("sf of the scalar tanh preset")
{
  auto const r = run({"sf", "--preset", "scalar-tanh"});
  CHECK(r.code == kExitOk);
  CHECK(r.report["result"]["sf"] == 1);
  CHECK(r.report["result"]["methods_agree"] == true);
  CHECK(r.report["header"]["tool"] == "hypflow");
}

TEST_CASE("index of the tanh-diag preset")
{
  auto const r = run({"index", "--preset", "tanh-diag"});
  CHECK(r.code == kExitOk);
  auto const &res = r.report["result"];
  CHECK(res["ker"] == 1);
  CHECK(res["coker"] == 1);
  CHECK(res["index"] == 0);
  CHECK(res["pair_index"] == 0);
  CHECK(res["match"] == true);
}

TEST_CASE("verify over a small battery")
{
  auto const r = run({"verify", "--preset", "random-battery", "--seed", "7", "--count", "4", "--threads", "2"});
  CHECK(r.code == kExitOk);
  CHECK(r.report["result"]["passes"] == 4);
  CHECK(r.report["result"]["total"] == 4);
  auto const &paths = r.report["result"]["paths"];
  for (std::size_t i = 0; i < paths.size(); ++i) CHECK(paths[i]["id"] == static_cast<int>(i));
}

TEST_CASE("reports are deterministic apart from the header")
{
  auto a = run({"verify", "--preset", "random-battery", "--seed", "3", "--count", "3"});
  auto b = run({"verify", "--preset", "random-battery", "--seed", "3", "--count", "3", "--threads", "1"});
  a.report.erase("header");
  b.report.erase("header");
  CHECK(a.report.dump() == b.report.dump());

  auto c = run({"index", "--preset", "tanh-diag"});
  auto d = run({"index", "--preset", "tanh-diag"});
  c.report.erase("header");
  d.report.erase("header");
  CHECK(c.report.dump() == d.report.dump());
}

TEST_CASE("exit codes")
{
  auto r = run({"index", "--preset", "rotation"});
  CHECK(r.code == kExitInput);
  CHECK(r.report["error"]["code"] == "not-hyperbolic");

  r = run({"sf", "--preset", "no-such-preset"});
  CHECK(r.code == kExitInput);
  CHECK(r.report["error"]["code"] == "bad-spec");

  r = run({"sf", write("broken.json", "{ not json")});
  CHECK(r.code == kExitInput);

  r = run({"sf", scratch("missing.json").string()});
  CHECK(r.code == kExitInput);

  r = run({"frobnicate"});
  CHECK(r.code == kExitInput);
}

TEST_CASE("sample specs from a file")
{
  PathSpec spec;
  spec.kind = "samples";
  spec.dim = 1;
  for (int i = 0; i <= 400; ++i) {
    double const t = -20.0 + 0.1 * i;
    spec.times.push_back(t);
    spec.samples.push_back(Matrix::Constant(1, 1, std::tanh(t)));
  }
  spec.limit_minus = Matrix::Constant(1, 1, -1.0);
  spec.limit_plus = Matrix::Constant(1, 1, 1.0);
  auto const file = write("tanh.json", serialize_path_spec(spec));
  auto const r = run({"index", file});
  CHECK(r.code == kExitOk);
  CHECK(r.report["result"]["index"] == -1);
}

TEST_CASE("projector of a matrix spec")
{
  auto const file = write("matrix.json", R"({"kind": "matrix", "dim": 2, "matrix": [0, 3, 1, 0]})");
  auto const r = run({"projector", file});
  CHECK(r.code == kExitOk);
  CHECK(r.report["result"]["rank_plus"] == 1);
}

TEST_CASE("stable command reports both spaces")
{
  auto const r = run({"stable", "--preset", "tanh-diag"});
  CHECK(r.code == kExitOk);
  CHECK(r.report["result"]["stable"]["dim"] == 1);
  CHECK(r.report["result"]["unstable"]["dim"] == 1);
  CHECK(r.report["result"]["pair_index"] == 0);
}

TEST_CASE("csv and output files")
{
  auto const csv = scratch("sf.csv").string();
  auto const out = scratch("sf.json").string();
  std::filesystem::remove(csv);
  std::ostringstream sink, err;
  CHECK(run_cli({"sf", "--preset", "tanh-diag", "--csv", csv, "--output", out}, sink, err) == kExitOk);
  CHECK(sink.str().empty());
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("t,", 0) == 0);
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines > 10);
  std::ifstream report(out);
  CHECK(json::parse(report)["result"]["sf"] == 0);
}

TEST_CASE("demo reproduces the worked examples")
{
  auto const r = run({"demo"});
  CHECK(r.code == kExitOk);
  CHECK(r.report["result"]["all_ok"] == true);
}

TEST_CASE("path specs round trip")
{
  PathSpec s;
  s.kind = "samples";
  s.dim = 2;
  s.times = {-1.0, 0.25, 3.0};
  for (int k = 0; k < 3; ++k) {
    Matrix m(2, 2);
    m << Scalar(k, 0.5), 1.0 / 3.0, Scalar(-2.0, 1e-17), std::exp(1.0) * k;
    s.samples.push_back(m);
  }
  s.limit_plus = s.samples.back();
  PathSpec const back = parse_path_spec(serialize_path_spec(s));
  CHECK(same_spec(s, back));

  PathSpec p;
  p.kind = "preset";
  p.dim = 3;
  p.preset = "patch";
  p.seed = 123456789012345ULL;
  p.angle = 0.1;
  Vector v(3);
  v << 1.0, Scalar(0.0, 2.0), -0.7;
  p.x.push_back(v);
  p.y.push_back(v.reverse());
  CHECK(same_spec(p, parse_path_spec(serialize_path_spec(p))));

  PathSpec m;
  m.kind = "matrix";
  m.dim = 1;
  m.matrix = Matrix::Constant(1, 1, Scalar(0.1, -0.2));
  CHECK(same_spec(m, parse_path_spec(serialize_path_spec(m))));
}

TEST_CASE("malformed specs are input errors")
{
  CHECK_THROWS_AS(parse_path_spec("[]"), InputError);
  CHECK_THROWS_AS(parse_path_spec(R"({"kind": "samples", "dim": 1, "times": [0, 0], "samples": [[1], [1]]})"),
                  InputError);
  CHECK_THROWS_AS(parse_path_spec(R"({"kind": "samples", "dim": 2, "times": [0], "samples": [[1, 2, 3]]})"),
                  InputError);
  CHECK_THROWS_AS(parse_path_spec(R"({"kind": "wat"})"), InputError);
}

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hypflow/path.hpp"

namespace hypflow {

/// Input description: explicit samples, a named preset, or a single matrix
/// (for the projector command).
struct PathSpec
{
  Index dim = 0;
  std::string kind = "preset"; // samples | preset | matrix

  std::vector<double> times;
  std::vector<Matrix> samples;
  std::optional<Matrix> limit_minus, limit_plus;

  std::optional<Matrix> matrix;

  std::string preset;     // tanh-diag | scalar-tanh | rotation | patch | random-battery
  std::uint64_t seed = 7;
  int count = 50;
  Index dimension = 6;    // largest battery dimension
  double angle = 1.5707963267948966;
  std::vector<Vector> x, y; // spanning vectors for the patch preset
};

/// Field-by-field equality, exact for numbers.
bool same_spec(PathSpec const &a, PathSpec const &b);

/// Lossless JSON text (round trip through parse_path_spec is the identity).
std::string serialize_path_spec(PathSpec const &spec);
/// Throws InputError("bad-spec") on malformed input.
PathSpec parse_path_spec(std::string const &text);

struct NamedPath
{
  int id = 0;
  std::string label;
  OperatorPath path;
};

/// Every path described by the spec (one, or a whole battery).
std::vector<NamedPath> build_paths(PathSpec const &spec);

/// Exit codes of run_cli.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIdentity = 4;

/// Runs one command line (args exclude the program name). The JSON report goes
/// to `out` unless --output names a file; diagnostics go to `err`.
int run_cli(std::vector<std::string> const &args, std::ostream &out, std::ostream &err);

} // namespace hypflow

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hypflow/path.hpp"

namespace hypflow {

inline constexpr double kPresetHalfWidth = 25.0;
inline constexpr double kPresetStep = 0.01;

/// s tanh(t) in dimension 1.
OperatorPath scalar_tanh(double sign = 1.0);
/// diag(tanh t, -tanh t).
OperatorPath tanh_diag();
/// cos(angle) tanh(t) I + sin(angle) J with J the quarter turn; the limits are
/// rotations (not hyperbolic) at angle = pi/2.
OperatorPath rotation_path(double angle);

/// Scalar tanh(pi (t - 1/2)) on [0, 1].
OperatorPath unit_up_crossing();

enum class Family
{
  Diagonal,
  RotatedFrame,
  Patched,
  RandomPerturbed
};

std::string family_name(Family f);

struct BatteryMember
{
  int id = 0;
  Family family = Family::Diagonal;
  std::uint64_t seed = 0;
  Index dim = 0;
  OperatorPath path = OperatorPath::constant(Matrix::Identity(1, 1));
};

/// `count` asymptotically hyperbolic paths (n <= max_dim), families in rotation.
std::vector<BatteryMember> random_battery(std::uint64_t seed, int count, Index max_dim = 6);

/// One battery member rebuilt from its own seed.
BatteryMember battery_member(int id, Family family, std::uint64_t seed, Index max_dim = 6);

} // namespace hypflow

#pragma once

namespace heatlaw {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace heatlaw

#pragma once

namespace gridvolterra {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gridvolterra

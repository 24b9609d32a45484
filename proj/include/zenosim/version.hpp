#pragma once

namespace zenosim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace zenosim

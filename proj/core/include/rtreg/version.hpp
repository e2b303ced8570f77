#pragma once

namespace rtreg {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rtreg

#pragma once

namespace acro {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace acro

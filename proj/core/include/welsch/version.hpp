#pragma once

namespace welsch {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace welsch

#pragma once

namespace evoctrl {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace evoctrl

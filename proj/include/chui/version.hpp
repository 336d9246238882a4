#pragma once

namespace chui {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace chui

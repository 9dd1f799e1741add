#pragma once

namespace ideaforge {
inline constexpr const char* kVersion = "0.1.0";
}

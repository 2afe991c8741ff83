#pragma once

namespace vpgen {
inline constexpr const char* kVersion = "0.1.0";
}

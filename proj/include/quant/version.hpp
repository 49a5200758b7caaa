#pragma once

namespace quant {
inline constexpr const char* library_version = "0.1.0";
}

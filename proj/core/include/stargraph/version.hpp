#pragma once

namespace stargraph {
inline constexpr const char* kVersion = "0.1.0";
}

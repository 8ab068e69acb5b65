#pragma once

namespace codareg {
inline constexpr const char* kVersion = "0.1.0";
}

#pragma once

namespace neurotopo {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace neurotopo

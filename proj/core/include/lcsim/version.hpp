#pragma once

namespace lcsim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lcsim

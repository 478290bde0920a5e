#pragma once

namespace csde {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace csde

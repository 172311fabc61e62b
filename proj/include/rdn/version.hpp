#pragma once

namespace rdn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace rdn

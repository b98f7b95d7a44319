#pragma once

namespace subsaa {

inline constexpr const char* kVersion = "subsaa 0.1.0";

} // namespace subsaa

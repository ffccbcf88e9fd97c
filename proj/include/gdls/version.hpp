#pragma once

namespace gdls {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace gdls

#pragma once

namespace qcantor {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qcantor

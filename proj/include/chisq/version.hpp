#pragma once

namespace chisq {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace chisq

#pragma once

namespace cyldet {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cyldet

#pragma once

namespace funcclust {

inline constexpr const char* version() { return "0.1.0"; }

}  // namespace funcclust

#pragma once

namespace deva {

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace deva

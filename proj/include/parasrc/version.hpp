#pragma once

namespace parasrc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace parasrc

#pragma once

namespace proplab {
inline constexpr const char* kToolVersion = "proplab 0.1.0";
}

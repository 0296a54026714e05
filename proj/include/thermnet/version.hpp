#pragma once

namespace thermnet {

inline constexpr const char* version_string = "0.1.0";

}

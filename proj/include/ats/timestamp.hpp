#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace ats {

// UTC instant with millisecond resolution.
using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

// Accepts "YYYY-MM-DDTHH:MM:SS[.fff]Z". Throws Error(Malformed) otherwise.
Timestamp parse_timestamp(std::string_view text);

// Always emits "YYYY-MM-DDTHH:MM:SSZ", or with ".fff" when milliseconds are nonzero.
std::string format_timestamp(Timestamp ts);

}  // namespace ats

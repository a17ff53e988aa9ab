#pragma once

#include <chrono>
#include <string>

namespace doccat {

using Clock = std::chrono::system_clock;

/// UTC timestamp as "YYYY-MM-DD HH:MM:SS.ffffff".
std::string format_timestamp(Clock::time_point tp);

inline std::string now_timestamp() { return format_timestamp(Clock::now()); }

}  // namespace doccat

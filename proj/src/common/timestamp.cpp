#include "doccat/common/timestamp.hpp"

#include <ctime>

#include <fmt/format.h>

namespace doccat {

std::string format_timestamp(Clock::time_point tp) {
  const auto micros =
      std::chrono::duration_cast<std::chrono::microseconds>(tp.time_since_epoch()).count();
  auto seconds = static_cast<std::time_t>(micros / 1'000'000);
  auto fraction = micros % 1'000'000;
  if (fraction < 0) {
    fraction += 1'000'000;
    --seconds;
  }
  std::tm utc{};
  gmtime_r(&seconds, &utc);
  return fmt::format("{:04}-{:02}-{:02} {:02}:{:02}:{:02}.{:06}", utc.tm_year + 1900, utc.tm_mon + 1,
                     utc.tm_mday, utc.tm_hour, utc.tm_min, utc.tm_sec, fraction);
}

}  // namespace doccat

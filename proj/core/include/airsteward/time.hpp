#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace airsteward {

/// Wall-clock instant with one-second resolution, always UTC.
using Timestamp = std::chrono::sys_seconds;

/// Parses an ISO-8601 UTC instant such as "2025-01-15T08:30:00Z".
/// Accepts a trailing "Z" or a "+HH:MM" / "-HH:MM" offset; fractional seconds
/// are truncated. Throws std::invalid_argument on anything else.
Timestamp parse_timestamp(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp ts);

/// Calendar month (1..12) of a timestamp.
unsigned month_of(Timestamp ts);

}  // namespace airsteward

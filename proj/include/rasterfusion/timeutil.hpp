#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace rasterfusion {

/// Seconds since 1970-01-01T00:00:00Z.
using EpochSeconds = std::int64_t;

/// Parses `YYYY-MM-DDTHH:MM:SS` followed by `Z` or `+00:00`. Returns nullopt on
/// anything else, including out-of-range calendar fields.
std::optional<EpochSeconds> parse_iso8601_utc(std::string_view text);

/// Formats as `YYYY-MM-DDTHH:MM:SSZ`.
std::string format_iso8601_utc(EpochSeconds t);

}  // namespace rasterfusion

// Small shared utilities: locale-independent number formatting and a
// stable 64-bit content hash used for config digests.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace truncvar {

// Formats a double with 17 significant digits via std::to_chars.
// Round-trips any finite double exactly and never consults the locale.
std::string format_g17(double x);

// FNV-1a over raw bytes, rendered as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view data);

// UTC timestamp "YYYY-MM-DDTHH:MM:SSZ" (wall clock; excluded from digests).
std::string utc_timestamp();

}  // namespace truncvar

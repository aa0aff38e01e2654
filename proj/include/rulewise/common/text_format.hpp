#pragma once

#include <string>
#include <string_view>

namespace rulewise {

/// Shortest-round-trip is not enough for checkpoints; this always emits 17 significant digits.
std::string format_double(double v);

/// Strict parse of a full token; throws std::invalid_argument on trailing garbage.
double parse_double(std::string_view token);

}  // namespace rulewise

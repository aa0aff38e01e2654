#include "rulewise/common/text_format.hpp"

#include <array>
#include <charconv>
#include <stdexcept>

namespace rulewise {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  if (ec != std::errc{}) throw std::runtime_error("to_chars failed");
  return {buf.data(), end};
}

double parse_double(std::string_view token) {
  double v = 0.0;
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc{} || end != token.data() + token.size() || token.empty())
    throw std::invalid_argument("not a number: '" + std::string(token) + "'");
  return v;
}

}  // namespace rulewise

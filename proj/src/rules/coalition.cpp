#include "rulewise/rules/coalition.hpp"

#include <bit>
#include <stdexcept>

namespace rulewise::rules {

namespace {

void check_rule_count(std::size_t n) {
  if (n > kMaxRules) throw std::invalid_argument("at most " + std::to_string(kMaxRules) + " rules are supported");
}

void check_index(std::size_t i, std::size_t n) {
  check_rule_count(n);
  if (i >= n) throw std::out_of_range("rule index " + std::to_string(i + 1) + " out of range 1.." + std::to_string(n));
}

}  // namespace

Coalition::Coalition(std::uint32_t m, std::size_t count) : mask(m), n(count) {
  check_rule_count(count);
  if (count < 32 && (m >> count) != 0) throw std::invalid_argument("coalition mask has bits beyond the rule count");
}

Coalition Coalition::full(std::size_t n) {
  check_rule_count(n);
  return Coalition((1U << n) - 1U, n);
}

std::size_t Coalition::size() const { return static_cast<std::size_t>(std::popcount(mask)); }

Coalition Coalition::with(std::size_t i) const {
  check_index(i, n);
  return Coalition(mask | (1U << i), n);
}

Coalition Coalition::without(std::size_t i) const {
  check_index(i, n);
  return Coalition(mask & ~(1U << i), n);
}

std::string Coalition::to_string() const {
  std::string s = "{";
  bool first = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!contains(i)) continue;
    if (!first) s += ',';
    s += std::to_string(i + 1);
    first = false;
  }
  return s + "}";
}

std::vector<Coalition> enumerate_coalitions(std::size_t n) {
  check_rule_count(n);
  std::vector<Coalition> out;
  out.reserve(std::size_t{1} << n);
  for (std::uint32_t m = 0; m < (1U << n); ++m) out.emplace_back(m, n);
  return out;
}

std::vector<Coalition> coalitions_containing(std::size_t i, std::size_t n) {
  check_index(i, n);
  std::vector<Coalition> out;
  out.reserve(std::size_t{1} << (n - 1));
  for (std::uint32_t m = 0; m < (1U << n); ++m) {
    if ((m >> i) & 1U) out.emplace_back(m, n);
  }
  return out;
}

std::vector<Coalition> relying_groups(std::size_t i, std::size_t n, std::size_t r) {
  check_index(i, n);
  if (r + 1 > n) throw std::out_of_range("relying count must be below the rule count");
  std::vector<Coalition> out;
  for (const auto& c : coalitions_containing(i, n)) {
    if (c.size() == r + 1) out.push_back(c);
  }
  return out;
}

}  // namespace rulewise::rules

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace rulewise::rules {

inline constexpr std::size_t kMaxRules = 20;

/// A subset of rules as a bit mask; bit i is rule i (0-based, reported as i + 1).
struct Coalition {
  std::uint32_t mask = 0;
  std::size_t n = 0;

  Coalition() = default;
  /// Throws std::invalid_argument when n exceeds kMaxRules or mask has bits at or above n.
  Coalition(std::uint32_t mask, std::size_t n);

  static Coalition full(std::size_t n);

  [[nodiscard]] bool contains(std::size_t i) const { return (mask >> i) & 1U; }
  [[nodiscard]] std::size_t size() const;
  [[nodiscard]] bool empty() const { return mask == 0; }
  [[nodiscard]] Coalition with(std::size_t i) const;
  [[nodiscard]] Coalition without(std::size_t i) const;
  /// 1-based member list such as "{1,3}".
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const Coalition&, const Coalition&) = default;
  friend auto operator<=>(const Coalition& a, const Coalition& b) { return a.mask <=> b.mask; }
};

/// All 2^n coalitions in ascending mask order.
std::vector<Coalition> enumerate_coalitions(std::size_t n);

/// The 2^(n-1) coalitions containing rule i, ascending.
std::vector<Coalition> coalitions_containing(std::size_t i, std::size_t n);

/// Coalitions containing rule i together with exactly r other rules.
std::vector<Coalition> relying_groups(std::size_t i, std::size_t n, std::size_t r);

}  // namespace rulewise::rules

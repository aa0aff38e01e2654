#pragma once

#include "rulewise/common/domain.hpp"
#include "rulewise/rules/rule.hpp"

#include <vector>

namespace rulewise::rules {

enum class Layout { FullGrid, FaceGrid };

struct CollocationSet {
  Points points;
  Layout layout = Layout::FullGrid;
  std::vector<std::size_t> grid_shape;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(points.cols()); }
};

/// Grid sizes: `interior` per axis for whole-domain rules, `face` points per free
/// axis for rules living on a face.
struct CollocationShape {
  std::vector<std::size_t> interior;
  std::size_t face = 256;

  friend bool operator==(const CollocationShape&, const CollocationShape&) = default;
};

CollocationSet make_collocation(const Region& region, const CollocationShape& shape);

/// One set per rule, in rule order.
std::vector<CollocationSet> collocation_table(const RuleSet& rules, const CollocationShape& shape);

}  // namespace rulewise::rules

#include "rulewise/rules/collocation.hpp"

#include <stdexcept>

namespace rulewise::rules {

CollocationSet make_collocation(const Region& region, const CollocationShape& shape) {
  region.box.validate();
  const auto dim = region.box.dim();
  CollocationSet set;
  if (!region.face_axis) {
    if (shape.interior.size() != dim) throw std::invalid_argument("interior collocation shape does not match the domain");
    set.layout = Layout::FullGrid;
    set.grid_shape = shape.interior;
    set.points = tensor_grid(region.box, shape.interior);
    return set;
  }
  if (shape.face == 0) throw std::invalid_argument("face collocation count must be positive");
  const auto axis = *region.face_axis;
  set.layout = Layout::FaceGrid;
  set.grid_shape.assign(dim, shape.face);
  set.grid_shape[axis] = 1;
  set.points = tensor_grid(region.box, set.grid_shape);
  set.points.row(static_cast<Eigen::Index>(axis)).setConstant(region.face_value);
  return set;
}

std::vector<CollocationSet> collocation_table(const RuleSet& rules, const CollocationShape& shape) {
  std::vector<CollocationSet> table;
  table.reserve(rules.size());
  for (const auto& r : rules.rules()) table.push_back(make_collocation(r.region, shape));
  return table;
}

}  // namespace rulewise::rules

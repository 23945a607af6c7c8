#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ortho/geometry.hpp"

namespace ortho::testing {

/// Random free placement on an integer grid: enlarged boxes keep a gap of at
/// least `gap` between each other. Integer coordinates keep every route
/// cost exact in floating point.
inline std::vector<NodeDisc> random_layout(std::size_t count, std::uint64_t seed, double delta,
                                           int side, double gap = 0.0, int min_r = 2,
                                           int max_r = 6) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coord(0, side);
  std::uniform_int_distribution<int> radius(min_r, max_r);
  std::vector<NodeDisc> nodes;
  int attempts = 0;
  while (nodes.size() < count && attempts < 100000) {
    ++attempts;
    NodeDisc n{NodeId{nodes.size() + 1}, {double(coord(rng)), double(coord(rng))}, double(radius(rng)), ""};
    const AABox grown{n.center, n.radius + delta + gap};
    bool free = true;
    for (const NodeDisc& m : nodes) {
      if (boxes_overlap(grown, m.enlarged_box(delta))) {
        free = false;
        break;
      }
    }
    if (free) nodes.push_back(n);
  }
  return nodes;
}

/// A 3x3 block of equal, edge-adjacent boxes; the middle node is walled in.
/// Returns the nine nodes with the middle one last.
inline std::vector<NodeDisc> walled_block(Point center, double radius, double delta,
                                          std::uint64_t first_id) {
  const double step = 2 * (radius + delta);
  std::vector<NodeDisc> out;
  std::uint64_t next = first_id;
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      out.push_back({NodeId{next++}, {center.x + dx * step, center.y + dy * step}, radius, "wall"});
    }
  }
  out.push_back({NodeId{next}, center, radius, "inside"});
  return out;
}

}  // namespace ortho::testing

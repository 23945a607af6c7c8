#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "ortho/error.hpp"
#include "ortho/geometry.hpp"

namespace ortho {

struct IndexEntry {
  NodeId node_id;
  AABox box;
};

namespace index_change {
struct Insert {
  NodeId node_id;
  AABox box;
};
struct Remove {
  NodeId node_id;
};
struct Move {
  NodeId node_id;
  AABox new_box;
};
}  // namespace index_change

using IndexChange = std::variant<index_change::Insert, index_change::Remove, index_change::Move>;

/// R-tree over node boxes (quadratic split, at most 8 entries per node).
///
/// Segment queries use open-interior semantics; box queries use closed
/// semantics. Const member functions may run concurrently.
class SpatialIndex {
  using BgPoint = boost::geometry::model::point<double, 2, boost::geometry::cs::cartesian>;
  using BgBox = boost::geometry::model::box<BgPoint>;
  using Value = std::tuple<BgBox, NodeId, AABox>;
  using Tree = boost::geometry::index::rtree<Value, boost::geometry::index::quadratic<8>>;

 public:
  void apply(const IndexChange& change) {
    std::visit([this](const auto& c) { apply_one(c); }, change);
  }

  void insert(NodeId id, const AABox& box) { apply(index_change::Insert{id, box}); }
  void remove(NodeId id) { apply(index_change::Remove{id}); }
  void move(NodeId id, const AABox& box) { apply(index_change::Move{id, box}); }

  bool contains(NodeId id) const { return boxes_.contains(id); }
  std::size_t size() const { return boxes_.size(); }

  const AABox& box_of(NodeId id) const {
    auto it = boxes_.find(id);
    if (it == boxes_.end()) throw Error(ErrorCode::unknown_id, "node not in index");
    return it->second;
  }

  /// Ids not in `exclude` whose box interiors the segment passes through, sorted.
  std::vector<NodeId> query_segment(const Segment& seg,
                                    const std::unordered_set<NodeId>& exclude = {}) const {
    std::vector<NodeId> out;
    for_each_touching(seg, [&](NodeId id, const AABox& box) {
      if (!exclude.contains(id) && segment_intersects_box(seg, box)) out.push_back(id);
      return true;
    });
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Ids whose closed boxes share a point with the closed query box, sorted.
  std::vector<NodeId> query_box(const AABox& box) const {
    std::vector<NodeId> out;
    const BgBox q = to_bg(box, kEpsilon);
    for (auto it = tree_.qbegin(boost::geometry::index::intersects(q)); it != tree_.qend(); ++it) {
      if (boxes_touch(box, std::get<2>(*it))) out.push_back(std::get<1>(*it));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Visits every entry whose closed box touches the segment until the
  /// visitor returns false.
  template <typename Visitor>
  void for_each_touching(const Segment& seg, Visitor&& visit) const {
    const BgBox q(BgPoint(std::min(seg.a.x, seg.b.x) - kEpsilon, std::min(seg.a.y, seg.b.y) - kEpsilon),
                  BgPoint(std::max(seg.a.x, seg.b.x) + kEpsilon, std::max(seg.a.y, seg.b.y) + kEpsilon));
    for (auto it = tree_.qbegin(boost::geometry::index::intersects(q)); it != tree_.qend(); ++it) {
      const AABox& box = std::get<2>(*it);
      if (!segment_touches_box(seg, box)) continue;
      if (!visit(std::get<1>(*it), box)) return;
    }
  }

  /// All entries sorted by id.
  std::vector<IndexEntry> entries() const {
    std::vector<IndexEntry> out;
    out.reserve(boxes_.size());
    for (const auto& [id, box] : boxes_) out.push_back({id, box});
    std::sort(out.begin(), out.end(),
              [](const IndexEntry& a, const IndexEntry& b) { return a.node_id < b.node_id; });
    return out;
  }

  /// Deterministic text listing for golden-file and rollback comparisons.
  std::string debug_dump() const {
    std::string out;
    char line[160];
    for (const auto& e : entries()) {
      std::snprintf(line, sizeof line, "node %llu box %.17g %.17g %.17g\n",
                    static_cast<unsigned long long>(e.node_id.value), e.box.center.x,
                    e.box.center.y, e.box.half_extent);
      out += line;
    }
    return out;
  }

 private:
  static BgBox to_bg(const AABox& box, double pad = 0.0) {
    return BgBox(BgPoint(box.min_x() - pad, box.min_y() - pad),
                 BgPoint(box.max_x() + pad, box.max_y() + pad));
  }

  static void check_box(const AABox& box) {
    if (!(box.half_extent > 0.0) || !std::isfinite(box.center.x) || !std::isfinite(box.center.y)) {
      throw Error(ErrorCode::invalid_argument, "index box must be finite with positive extent");
    }
  }

  void apply_one(const index_change::Insert& c) {
    check_box(c.box);
    if (boxes_.contains(c.node_id)) {
      throw Error(ErrorCode::duplicate_id,
                  "node " + std::to_string(c.node_id.value) + " already indexed");
    }
    boxes_.emplace(c.node_id, c.box);
    tree_.insert(Value(to_bg(c.box), c.node_id, c.box));
  }

  void apply_one(const index_change::Remove& c) {
    auto it = boxes_.find(c.node_id);
    if (it == boxes_.end()) {
      throw Error(ErrorCode::unknown_id, "node " + std::to_string(c.node_id.value) + " not indexed");
    }
    tree_.remove(Value(to_bg(it->second), c.node_id, it->second));
    boxes_.erase(it);
  }

  void apply_one(const index_change::Move& c) {
    check_box(c.new_box);
    auto it = boxes_.find(c.node_id);
    if (it == boxes_.end()) {
      throw Error(ErrorCode::unknown_id, "node " + std::to_string(c.node_id.value) + " not indexed");
    }
    tree_.remove(Value(to_bg(it->second), c.node_id, it->second));
    it->second = c.new_box;
    tree_.insert(Value(to_bg(c.new_box), c.node_id, c.new_box));
  }

  Tree tree_;
  std::unordered_map<NodeId, AABox> boxes_;
};

}  // namespace ortho

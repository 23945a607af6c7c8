#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ortho/error.hpp"
#include "ortho/geometry.hpp"
#include "ortho/spatial_index.hpp"

namespace ortho {

struct ConnectorIdTag {};
struct EdgeIdTag {};
using ConnectorId = StrongId<ConnectorIdTag, std::uint32_t>;
using EdgeId = StrongId<EdgeIdTag, std::uint32_t>;

enum class ConnectorKind : std::uint8_t { primary, ne, nw, se, sw };

inline constexpr const char* kind_name(ConnectorKind k) {
  switch (k) {
    case ConnectorKind::primary: return "primary";
    case ConnectorKind::ne: return "ne";
    case ConnectorKind::nw: return "nw";
    case ConnectorKind::se: return "se";
    case ConnectorKind::sw: return "sw";
  }
  return "?";
}

struct ConnectorPoint {
  ConnectorId id;
  NodeId owner;
  ConnectorKind kind = ConnectorKind::primary;
  Point position;
};

/// Shape of an OVG edge seen from the endpoint it is traversed from.
/// vertical_first bends at (from.x, to.y); horizontal_first at (to.x, from.y).
enum class EdgeShape : std::uint8_t { straight, vertical_first, horizontal_first };

inline EdgeShape flipped(EdgeShape s) {
  switch (s) {
    case EdgeShape::vertical_first: return EdgeShape::horizontal_first;
    case EdgeShape::horizontal_first: return EdgeShape::vertical_first;
    case EdgeShape::straight: break;
  }
  return EdgeShape::straight;
}

/// Up to three points; the middle one is the bend.
struct EdgeGeometry {
  std::array<Point, 3> pts{};
  std::uint8_t count = 0;

  std::span<const Point> points() const { return {pts.data(), count}; }
  Point front() const { return pts[0]; }
  Point back() const { return pts[count - 1]; }
};

inline EdgeGeometry edge_geometry(Point from, Point to, EdgeShape shape) {
  switch (shape) {
    case EdgeShape::straight: return {{from, to, {}}, 2};
    case EdgeShape::vertical_first: return {{from, Point{from.x, to.y}, to}, 3};
    case EdgeShape::horizontal_first: return {{from, Point{to.x, from.y}, to}, 3};
  }
  return {};
}

/// Candidate orthogonal connections between two connector positions: the
/// straight line when they share a coordinate, otherwise both L shapes.
struct ShapeSet {
  std::array<EdgeShape, 2> shapes{};
  std::uint8_t count = 0;

  const EdgeShape* begin() const { return shapes.data(); }
  const EdgeShape* end() const { return shapes.data() + count; }
};

inline ShapeSet candidate_shapes(Point v1, Point v2) {
  if (nearly_equal(v1, v2)) return {};
  if (nearly_equal(v1.x, v2.x) || nearly_equal(v1.y, v2.y)) return {{EdgeShape::straight}, 1};
  return {{EdgeShape::vertical_first, EdgeShape::horizontal_first}, 2};
}

inline std::vector<OrthoRoute> candidate_edges(Point v1, Point v2) {
  if (nearly_equal(v1, v2)) {
    throw Error(ErrorCode::invalid_argument, "candidate endpoints coincide");
  }
  std::vector<OrthoRoute> out;
  for (EdgeShape s : candidate_shapes(v1, v2)) {
    const auto g = edge_geometry(v1, v2, s);
    out.emplace_back(std::vector<Point>(g.points().begin(), g.points().end()));
  }
  return out;
}

inline std::vector<OrthoRoute> candidate_edges(const ConnectorPoint& v1, const ConnectorPoint& v2) {
  return candidate_edges(v1.position, v2.position);
}

/// Center plus the four corners of the enlarged box. Ids are left unassigned.
inline std::array<ConnectorPoint, 5> connector_points(const NodeDisc& node, double delta) {
  const double h = node.radius + delta;
  const Point c = node.center;
  return {{
      {ConnectorId{}, node.id, ConnectorKind::primary, c},
      {ConnectorId{}, node.id, ConnectorKind::ne, {c.x + h, c.y + h}},
      {ConnectorId{}, node.id, ConnectorKind::nw, {c.x - h, c.y + h}},
      {ConnectorId{}, node.id, ConnectorKind::se, {c.x + h, c.y - h}},
      {ConnectorId{}, node.id, ConnectorKind::sw, {c.x - h, c.y - h}},
  }};
}

/// Public view of one OVG edge.
struct OvgEdge {
  EdgeId id;
  std::array<ConnectorId, 2> endpoints;
  OrthoRoute geometry;
  std::vector<NodeId> blocked_by;

  bool traversable() const { return blocked_by.empty(); }
};

/// Identity of an edge that does not depend on pool slots, for comparing OVGs.
struct EdgeKey {
  NodeId owner_a;
  ConnectorKind kind_a = ConnectorKind::primary;
  NodeId owner_b;
  ConnectorKind kind_b = ConnectorKind::primary;
  std::vector<Point> geometry;
  std::vector<NodeId> blocked_by;

  auto operator<=>(const EdgeKey&) const = default;
};

/// Orthogonal visibility graph over the connector points of all layout nodes.
///
/// The edge set is a function of the node set and insertion order alone: a
/// candidate between two connectors is an edge iff it is unobstructed by the
/// nodes inserted no later than its younger owner, and it is traversable iff
/// it is unobstructed by every current node. Moving a node keeps its place in
/// the insertion order. Obstruction means passing through a box interior, or
/// running along a seam between two boxes that touch from opposite sides. An
/// owner is ignored only when the edge ends at its primary connector.
///
/// Mutations must be serialized; const members may be called concurrently.
class Ovg {
 public:
  struct Adjacent {
    ConnectorId other;
    EdgeId edge;
    EdgeShape shape;  // seen from the connector owning this list
    bool traversable;
  };

  explicit Ovg(double delta) : delta_(delta) {
    if (!(delta > 0.0)) throw Error(ErrorCode::invalid_argument, "delta must be positive");
  }

  double delta() const { return delta_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t connector_count() const { return connectors_.size() - free_connectors_.size(); }
  std::size_t edge_count() const { return edges_.size() - free_edges_.size(); }
  std::size_t connector_capacity() const { return connectors_.size(); }
  bool contains(NodeId id) const { return nodes_.contains(id); }

  /// Adds the node's five connectors and every unobstructed candidate edge
  /// between them and the existing connectors. Existing edges the new box
  /// obstructs are marked blocked. The node must already be in `index`.
  std::vector<EdgeId> add_node(const NodeDisc& node, const SpatialIndex& index) {
    if (nodes_.contains(node.id)) {
      throw Error(ErrorCode::duplicate_id, "node " + std::to_string(node.id.value) + " already in OVG");
    }
    check_indexed(node, index);
    check_free(node.id, node.enlarged_box(delta_), index);
    NodeRecord& rec = nodes_[node.id];
    rec.disc = node;
    rec.epoch = next_epoch_++;
    return place(rec, index);
  }

  /// Deletes the node's connectors and edges, releases edges it blocked and
  /// creates candidates it had suppressed. The node must already be gone
  /// from `index`.
  void remove_node(NodeId id, const SpatialIndex& index) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
      throw Error(ErrorCode::unknown_id, "node " + std::to_string(id.value) + " not in OVG");
    }
    if (index.contains(id)) {
      throw Error(ErrorCode::invalid_argument, "remove the node from the index first");
    }
    const AABox old_box = it->second.disc.enlarged_box(delta_);
    unplace(it->second, index);
    nodes_.erase(it);
    release_region(old_box, index);
  }

  /// Relocates the node. `index` must already hold its new box.
  void move_node(NodeId id, Point new_center, const SpatialIndex& index) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
      throw Error(ErrorCode::unknown_id, "node " + std::to_string(id.value) + " not in OVG");
    }
    NodeRecord& rec = it->second;
    NodeDisc moved = rec.disc;
    moved.center = new_center;
    check_indexed(moved, index);
    check_free(id, moved.enlarged_box(delta_), index);
    const AABox old_box = rec.disc.enlarged_box(delta_);
    // Every evaluation below already sees the node at its new position, which
    // is the final state place() converges to.
    unplace(rec, index);
    rec.disc = moved;
    release_region(old_box, index);
    place(rec, index);
  }

  struct Rebuilt;

  /// Builds an OVG by adding `nodes` in order to an empty graph.
  static Rebuilt rebuild_from_scratch(std::span<const NodeDisc> nodes, double delta);

  struct Neighbor {
    EdgeId edge;
    ConnectorPoint far;
  };

  /// Traversable incident edges with their far endpoints.
  std::vector<Neighbor> neighbors(ConnectorId id) const {
    const ConnectorRecord& c = live_connector(id);
    std::vector<Neighbor> out;
    for (const Adjacent& a : c.adj) {
      if (a.traversable) out.push_back({a.edge, connector(a.other)});
    }
    return out;
  }

  /// All incident edges, traversable or not.
  std::span<const Adjacent> adjacency(ConnectorId id) const { return live_connector(id).adj; }

  ConnectorPoint connector(ConnectorId id) const {
    const ConnectorRecord& c = live_connector(id);
    return {id, c.owner, c.kind, c.pos};
  }

  /// Unchecked accessors for the search loop.
  Point position_unchecked(ConnectorId id) const { return connectors_[id.value].pos; }
  bool is_primary_unchecked(ConnectorId id) const {
    return connectors_[id.value].kind == ConnectorKind::primary;
  }
  std::span<const Adjacent> adjacency_unchecked(ConnectorId id) const {
    return connectors_[id.value].adj;
  }
  NodeId owner_unchecked(ConnectorId id) const { return connectors_[id.value].owner; }
  std::span<const NodeId> blocked_by_unchecked(EdgeId id) const { return edges_[id.value].blocked_by; }

  std::array<ConnectorId, 5> connectors_of(NodeId id) const { return live_node(id).connectors; }
  ConnectorId primary_of(NodeId id) const { return live_node(id).connectors[0]; }
  const NodeDisc& node(NodeId id) const { return live_node(id).disc; }
  std::uint64_t insertion_rank(NodeId id) const { return live_node(id).epoch; }

  /// Nodes in insertion order; rebuilding from this list reproduces the OVG.
  std::vector<NodeDisc> nodes_in_insertion_order() const {
    std::vector<const NodeRecord*> recs;
    recs.reserve(nodes_.size());
    for (const auto& [id, rec] : nodes_) recs.push_back(&rec);
    std::sort(recs.begin(), recs.end(),
              [](const NodeRecord* a, const NodeRecord* b) { return a->epoch < b->epoch; });
    std::vector<NodeDisc> out;
    out.reserve(recs.size());
    for (const NodeRecord* r : recs) out.push_back(r->disc);
    return out;
  }

  OvgEdge edge(EdgeId id) const {
    const EdgeRecord& e = live_edge(id);
    const auto g = geometry_of(e);
    return {id, {e.a, e.b}, OrthoRoute(std::vector<Point>(g.points().begin(), g.points().end())),
            e.blocked_by};
  }

  /// Edges incident to the node's connectors, counted once per incident
  /// connector (edges between two of its own connectors count twice).
  /// Calls fn(const Adjacent&) for every edge joining `from` and `to`, with
  /// the shape seen from `from`. Cost depends only on the edges between the
  /// two owning nodes.
  template <typename Fn>
  void for_each_edge_joining(ConnectorId from, ConnectorId to, Fn&& fn) const {
    const ConnectorRecord& cf = connectors_[from.value];
    const ConnectorRecord& ct = connectors_[to.value];
    auto it = pair_edges_.find(pair_key(cf.owner, ct.owner));
    if (it == pair_edges_.end()) return;
    for (const PairEntry& e : it->second) {
      if (e.a == from && e.b == to) fn(Adjacent{to, e.edge, e.shape, e.traversable});
      else if (e.b == from && e.a == to) fn(Adjacent{to, e.edge, flipped(e.shape), e.traversable});
    }
  }

  std::size_t registry_size(NodeId id) const {
    std::size_t n = 0;
    for (ConnectorId c : live_node(id).connectors) n += connectors_[c.value].adj.size();
    return n;
  }

  template <typename Fn>
  void for_each_edge(Fn&& fn) const {
    for (std::uint32_t i = 0; i < edges_.size(); ++i) {
      if (edges_[i].alive) fn(EdgeId{i});
    }
  }

  template <typename Fn>
  void for_each_connector(Fn&& fn) const {
    for (std::uint32_t i = 0; i < connectors_.size(); ++i) {
      if (connectors_[i].alive) fn(ConnectorId{i});
    }
  }

  std::vector<EdgeKey> edge_keys(bool traversable_only) const {
    std::vector<EdgeKey> out;
    out.reserve(edge_count());
    for (const EdgeRecord& e : edges_) {
      if (!e.alive || (traversable_only && !e.blocked_by.empty())) continue;
      const ConnectorRecord& ca = connectors_[e.a.value];
      const ConnectorRecord& cb = connectors_[e.b.value];
      EdgeKey k;
      auto g = geometry_of(e);
      if (std::pair(cb.owner, cb.kind) < std::pair(ca.owner, ca.kind)) {
        k = {cb.owner, cb.kind, ca.owner, ca.kind, {}, e.blocked_by};
        std::reverse(g.pts.begin(), g.pts.begin() + g.count);
      } else {
        k = {ca.owner, ca.kind, cb.owner, cb.kind, {}, e.blocked_by};
      }
      k.geometry.assign(g.points().begin(), g.points().end());
      out.push_back(std::move(k));
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Deterministic listing of connectors and edges, sorted by owner then kind.
  std::string debug_dump() const {
    std::vector<ConnectorPoint> cs;
    for_each_connector([&](ConnectorId id) { cs.push_back(connector(id)); });
    std::sort(cs.begin(), cs.end(), [](const ConnectorPoint& a, const ConnectorPoint& b) {
      return std::pair(a.owner, a.kind) < std::pair(b.owner, b.kind);
    });
    std::string out;
    char buf[256];
    for (const auto& c : cs) {
      std::snprintf(buf, sizeof buf, "connector %llu %s %.17g %.17g\n",
                    static_cast<unsigned long long>(c.owner.value), kind_name(c.kind),
                    c.position.x, c.position.y);
      out += buf;
    }
    for (const EdgeKey& k : edge_keys(false)) {
      std::snprintf(buf, sizeof buf, "edge %llu:%s %llu:%s", static_cast<unsigned long long>(k.owner_a.value),
                    kind_name(k.kind_a), static_cast<unsigned long long>(k.owner_b.value),
                    kind_name(k.kind_b));
      out += buf;
      for (const Point& p : k.geometry) {
        std::snprintf(buf, sizeof buf, " (%.17g,%.17g)", p.x, p.y);
        out += buf;
      }
      if (!k.blocked_by.empty()) {
        out += " blocked";
        for (NodeId b : k.blocked_by) out += " " + std::to_string(b.value);
      }
      out += '\n';
    }
    return out;
  }

 private:
  static constexpr std::uint64_t kNoNode = ~std::uint64_t{0};

  struct ConnectorRecord {
    NodeId owner;
    ConnectorKind kind = ConnectorKind::primary;
    Point pos;
    std::uint64_t epoch = 0;
    bool alive = false;
    std::vector<Adjacent> adj;
  };

  struct EdgeRecord {
    ConnectorId a;
    ConnectorId b;
    std::uint32_t slot_a = 0;
    std::uint32_t slot_b = 0;
    std::uint32_t slot_pair = 0;
    EdgeShape shape = EdgeShape::straight;  // seen from a
    bool alive = false;
    std::vector<NodeId> blocked_by;  // sorted
  };

  struct NodeRecord {
    NodeDisc disc;
    std::uint64_t epoch = 0;
    std::array<ConnectorId, 5> connectors{};
  };

  struct Verdict {
    bool exists = true;
    std::vector<NodeId> blockers;
  };

  // Boundary contact of a segment with a box along one of its sides.
  struct SideContact {
    NodeId id;
    int side;  // -1 below/left of the segment, +1 above/right
    double lo;
    double hi;
    bool early;
  };

  static std::pair<NodeId, NodeId> pair_key(NodeId a, NodeId b) {
    return a < b ? std::pair(a, b) : std::pair(b, a);
  }

  // Copy of an edge's search-relevant fields, grouped by owner pair.
  struct PairEntry {
    ConnectorId a;
    ConnectorId b;
    EdgeId edge;
    EdgeShape shape;  // seen from a
    bool traversable;
  };

  struct PairHash {
    std::size_t operator()(const std::pair<NodeId, NodeId>& p) const {
      return std::hash<std::uint64_t>{}(p.first.value * 0x9e3779b97f4a7c15ULL ^ p.second.value);
    }
  };

  const ConnectorRecord& live_connector(ConnectorId id) const {
    if (id.value >= connectors_.size() || !connectors_[id.value].alive) {
      throw Error(ErrorCode::unknown_id, "unknown connector " + std::to_string(id.value));
    }
    return connectors_[id.value];
  }

  const EdgeRecord& live_edge(EdgeId id) const {
    if (id.value >= edges_.size() || !edges_[id.value].alive) {
      throw Error(ErrorCode::unknown_id, "unknown edge " + std::to_string(id.value));
    }
    return edges_[id.value];
  }

  const NodeRecord& live_node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
      throw Error(ErrorCode::unknown_id, "node " + std::to_string(id.value) + " not in OVG");
    }
    return it->second;
  }

  EdgeGeometry geometry_of(const EdgeRecord& e) const {
    return edge_geometry(connectors_[e.a.value].pos, connectors_[e.b.value].pos, e.shape);
  }

  void check_indexed(const NodeDisc& node, const SpatialIndex& index) const {
    if (!index.contains(node.id) || !(index.box_of(node.id) == node.enlarged_box(delta_))) {
      throw Error(ErrorCode::invalid_argument,
                  "index must hold node " + std::to_string(node.id.value) + " with its enlarged box");
    }
  }

  static void check_free(NodeId self, const AABox& box, const SpatialIndex& index) {
    for (NodeId other : index.query_box(box)) {
      if (other != self && boxes_overlap(box, index.box_of(other))) {
        throw Error(ErrorCode::placement_overlap, "node " + std::to_string(self.value) +
                                                      " overlaps node " + std::to_string(other.value));
      }
    }
  }

  std::uint64_t epoch_of_indexed(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) {
      throw Error(ErrorCode::invalid_argument,
                  "index holds node " + std::to_string(id.value) + " unknown to the OVG");
    }
    return it->second.epoch;
  }

  // Obstruction of a candidate geometry. `exists` is false when the nodes of
  // rank <= threshold obstruct it; `blockers` lists every current node taking
  // part in an obstruction (complete unless `collect` is unset and the
  // candidate does not exist).
  Verdict evaluate(const EdgeGeometry& g, NodeId excl_a, NodeId excl_b, std::uint64_t threshold,
                   const SpatialIndex& index, bool collect) const {
    Verdict v;
    std::vector<SideContact> sides;
    for (std::uint8_t s = 0; s + 1 < g.count; ++s) {
      const Segment seg{g.pts[s], g.pts[s + 1]};
      const bool horiz = seg.horizontal();
      const double lo = horiz ? std::min(seg.a.x, seg.b.x) : std::min(seg.a.y, seg.b.y);
      const double hi = horiz ? std::max(seg.a.x, seg.b.x) : std::max(seg.a.y, seg.b.y);
      const double line = horiz ? seg.a.y : seg.a.x;
      sides.clear();
      bool stop = false;
      index.for_each_touching(seg, [&](NodeId id, const AABox& box) {
        if (id == excl_a || id == excl_b) return true;
        const bool early = epoch_of_indexed(id) <= threshold;
        if (segment_intersects_box(seg, box)) {
          if (early) {
            v.exists = false;
            if (!collect) {
              stop = true;
              return false;
            }
          }
          v.blockers.push_back(id);
          return true;
        }
        const double blo = horiz ? box.min_x() : box.min_y();
        const double bhi = horiz ? box.max_x() : box.max_y();
        const double a = std::max(lo, blo);
        const double b = std::min(hi, bhi);
        if (b - a <= kEpsilon) return true;
        const double low_side = horiz ? box.min_y() : box.min_x();
        const double high_side = horiz ? box.max_y() : box.max_x();
        if (nearly_equal(line, high_side)) sides.push_back({id, -1, a, b, early});
        else if (nearly_equal(line, low_side)) sides.push_back({id, +1, a, b, early});
        return true;
      });
      if (stop) return v;
      for (std::size_t i = 0; i < sides.size(); ++i) {
        for (std::size_t j = i + 1; j < sides.size(); ++j) {
          const SideContact& p = sides[i];
          const SideContact& q = sides[j];
          if (p.side == q.side) continue;
          if (std::min(p.hi, q.hi) - std::max(p.lo, q.lo) <= kEpsilon) continue;
          if (p.early && q.early) {
            v.exists = false;
            if (!collect) return v;
          }
          v.blockers.push_back(p.id);
          v.blockers.push_back(q.id);
        }
      }
    }
    std::sort(v.blockers.begin(), v.blockers.end());
    v.blockers.erase(std::unique(v.blockers.begin(), v.blockers.end()), v.blockers.end());
    return v;
  }

  // Owners excluded from obstruction tests: those whose primary connector is an endpoint.
  std::pair<NodeId, NodeId> exclusions(const ConnectorRecord& a, const ConnectorRecord& b) const {
    return {a.kind == ConnectorKind::primary ? a.owner : NodeId{kNoNode},
            b.kind == ConnectorKind::primary ? b.owner : NodeId{kNoNode}};
  }

  ConnectorId alloc_connector(const NodeRecord& rec, const ConnectorPoint& cp) {
    std::uint32_t slot;
    if (!free_connectors_.empty()) {
      slot = free_connectors_.back();
      free_connectors_.pop_back();
    } else {
      slot = static_cast<std::uint32_t>(connectors_.size());
      connectors_.emplace_back();
    }
    ConnectorRecord& c = connectors_[slot];
    c.owner = rec.disc.id;
    c.kind = cp.kind;
    c.pos = cp.position;
    c.epoch = rec.epoch;
    c.alive = true;
    c.adj.clear();
    return ConnectorId{slot};
  }

  EdgeId create_edge(ConnectorId a, ConnectorId b, EdgeShape shape, std::vector<NodeId> blocked_by) {
    std::uint32_t slot;
    if (!free_edges_.empty()) {
      slot = free_edges_.back();
      free_edges_.pop_back();
    } else {
      slot = static_cast<std::uint32_t>(edges_.size());
      edges_.emplace_back();
    }
    EdgeRecord& e = edges_[slot];
    const bool traversable = blocked_by.empty();
    e.a = a;
    e.b = b;
    e.shape = shape;
    e.alive = true;
    e.blocked_by = std::move(blocked_by);
    auto& adj_a = connectors_[a.value].adj;
    auto& adj_b = connectors_[b.value].adj;
    e.slot_a = static_cast<std::uint32_t>(adj_a.size());
    adj_a.push_back({b, EdgeId{slot}, shape, traversable});
    e.slot_b = static_cast<std::uint32_t>(adj_b.size());
    adj_b.push_back({a, EdgeId{slot}, flipped(shape), traversable});
    auto& pair = pair_edges_[pair_key(connectors_[a.value].owner, connectors_[b.value].owner)];
    e.slot_pair = static_cast<std::uint32_t>(pair.size());
    pair.push_back({a, b, EdgeId{slot}, shape, traversable});
    return EdgeId{slot};
  }

  void detach(ConnectorId c, std::uint32_t slot) {
    auto& adj = connectors_[c.value].adj;
    const std::uint32_t last = static_cast<std::uint32_t>(adj.size() - 1);
    if (slot != last) {
      adj[slot] = adj[last];
      EdgeRecord& moved = edges_[adj[slot].edge.value];
      if (moved.a == c) moved.slot_a = slot;
      else moved.slot_b = slot;
    }
    adj.pop_back();
  }

  void delete_edge(EdgeId id) {
    EdgeRecord& e = edges_[id.value];
    detach(e.a, e.slot_a);
    detach(e.b, e.slot_b);
    auto it = pair_edges_.find(pair_key(connectors_[e.a.value].owner, connectors_[e.b.value].owner));
    auto& pair = it->second;
    if (e.slot_pair + 1 != pair.size()) {
      pair[e.slot_pair] = pair.back();
      edges_[pair[e.slot_pair].edge.value].slot_pair = e.slot_pair;
    }
    pair.pop_back();
    if (pair.empty()) pair_edges_.erase(it);
    e.alive = false;
    e.blocked_by.clear();
    e.blocked_by.shrink_to_fit();
    free_edges_.push_back(id.value);
  }

  void set_blocked(EdgeId id, std::vector<NodeId> blocked_by) {
    EdgeRecord& e = edges_[id.value];
    e.blocked_by = std::move(blocked_by);
    const bool traversable = e.blocked_by.empty();
    connectors_[e.a.value].adj[e.slot_a].traversable = traversable;
    connectors_[e.b.value].adj[e.slot_b].traversable = traversable;
    pair_edges_.find(pair_key(connectors_[e.a.value].owner, connectors_[e.b.value].owner))
        ->second[e.slot_pair]
        .traversable = traversable;
  }

  bool geometry_touches(const EdgeGeometry& g, const AABox& box) const {
    for (std::uint8_t s = 0; s + 1 < g.count; ++s) {
      if (segment_touches_box({g.pts[s], g.pts[s + 1]}, box)) return true;
    }
    return false;
  }

  // Re-evaluates an existing edge; deletes it when it should not exist.
  void reassess(EdgeId id, const SpatialIndex& index) {
    const EdgeRecord& e = edges_[id.value];
    const ConnectorRecord& ca = connectors_[e.a.value];
    const ConnectorRecord& cb = connectors_[e.b.value];
    const auto [xa, xb] = exclusions(ca, cb);
    Verdict v = evaluate(geometry_of(e), xa, xb, std::max(ca.epoch, cb.epoch), index, true);
    if (!v.exists) delete_edge(id);
    else if (v.blockers != e.blocked_by) set_blocked(id, std::move(v.blockers));
  }

  // Candidate between a and b with the given shape (seen from a); created when it should exist.
  bool try_create(ConnectorId a, ConnectorId b, EdgeShape shape, const SpatialIndex& index,
                  std::vector<EdgeId>* created) {
    const ConnectorRecord& ca = connectors_[a.value];
    const ConnectorRecord& cb = connectors_[b.value];
    const auto [xa, xb] = exclusions(ca, cb);
    Verdict v = evaluate(edge_geometry(ca.pos, cb.pos, shape), xa, xb, std::max(ca.epoch, cb.epoch),
                         index, false);
    if (!v.exists) return false;
    const EdgeId id = create_edge(a, b, shape, std::move(v.blockers));
    if (created) created->push_back(id);
    return true;
  }

  std::vector<EdgeId> place(NodeRecord& rec, const SpatialIndex& index) {
    const AABox box = rec.disc.enlarged_box(delta_);

    // Existing edges the new box touches may become blocked or, when the
    // node predates their owners, cease to exist.
    std::vector<EdgeId> touched;
    for (EdgeId id : edges_in_strip(box)) {
      if (geometry_touches(geometry_of(edges_[id.value]), box)) touched.push_back(id);
    }
    for (EdgeId id : touched) reassess(id, index);

    const auto cps = connector_points(rec.disc, delta_);
    for (std::size_t k = 0; k < cps.size(); ++k) rec.connectors[k] = alloc_connector(rec, cps[k]);

    std::vector<EdgeId> created;
    for (std::size_t k = 0; k < cps.size(); ++k) {
      const ConnectorId a = rec.connectors[k];
      for (std::size_t m = k + 1; m < cps.size(); ++m) {
        const ConnectorId b = rec.connectors[m];
        for (EdgeShape s : candidate_shapes(cps[k].position, cps[m].position)) {
          try_create(a, b, s, index, &created);
        }
      }
    }
    for (std::uint32_t q = 0; q < connectors_.size(); ++q) {
      const ConnectorRecord& cq = connectors_[q];
      if (!cq.alive || cq.owner == rec.disc.id) continue;
      for (std::size_t k = 0; k < cps.size(); ++k) {
        for (EdgeShape s : candidate_shapes(cps[k].position, cq.pos)) {
          try_create(rec.connectors[k], ConnectorId{q}, s, index, &created);
        }
      }
    }
    return created;
  }

  void unplace(NodeRecord& rec, const SpatialIndex& index) {
    for (ConnectorId c : rec.connectors) {
      auto& adj = connectors_[c.value].adj;
      while (!adj.empty()) delete_edge(adj.back().edge);
    }
    for (ConnectorId c : rec.connectors) {
      connectors_[c.value].alive = false;
      connectors_[c.value].adj.shrink_to_fit();
      free_connectors_.push_back(c.value);
    }
    const NodeId gone = rec.disc.id;
    for (EdgeId id : edges_in_strip(rec.disc.enlarged_box(delta_))) {
      const EdgeRecord& e = edges_[id.value];
      if (e.alive && std::binary_search(e.blocked_by.begin(), e.blocked_by.end(), gone)) reassess(id, index);
    }
  }

  // Every segment of an edge lies on a line through one of its endpoints, so
  // an edge touching `box` has an endpoint whose x or y falls in the box's
  // closed extent. Returns those edges, sorted and unique.
  std::vector<EdgeId> edges_in_strip(const AABox& box) const {
    std::vector<EdgeId> out;
    for (const ConnectorRecord& c : connectors_) {
      if (!c.alive) continue;
      const bool in_x = c.pos.x >= box.min_x() - kEpsilon && c.pos.x <= box.max_x() + kEpsilon;
      const bool in_y = c.pos.y >= box.min_y() - kEpsilon && c.pos.y <= box.max_y() + kEpsilon;
      if (!in_x && !in_y) continue;
      for (const Adjacent& a : c.adj) out.push_back(a.edge);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  // Creates candidates that were suppressed by a node that occupied `box`.
  // A candidate can only touch the box through a segment whose fixed
  // coordinate is one of its endpoints' coordinates.
  void release_region(const AABox& box, const SpatialIndex& index) {
    std::vector<ConnectorId> strip;
    for (std::uint32_t i = 0; i < connectors_.size(); ++i) {
      const ConnectorRecord& c = connectors_[i];
      if (!c.alive) continue;
      const bool in_x = c.pos.x >= box.min_x() - kEpsilon && c.pos.x <= box.max_x() + kEpsilon;
      const bool in_y = c.pos.y >= box.min_y() - kEpsilon && c.pos.y <= box.max_y() + kEpsilon;
      if (in_x || in_y) strip.push_back(ConnectorId{i});
    }
    std::unordered_set<std::uint64_t> existing;
    for (ConnectorId p : strip) {
      existing.clear();
      for (const Adjacent& a : connectors_[p.value].adj) {
        existing.insert(std::uint64_t{a.other.value} << 2 | static_cast<std::uint64_t>(a.shape));
      }
      for (std::uint32_t q = 0; q < connectors_.size(); ++q) {
        if (q == p.value || !connectors_[q].alive) continue;
        const Point pp = connectors_[p.value].pos;
        const Point pq = connectors_[q].pos;
        for (EdgeShape s : candidate_shapes(pp, pq)) {
          if (existing.contains(std::uint64_t{q} << 2 | static_cast<std::uint64_t>(s))) continue;
          if (!geometry_touches(edge_geometry(pp, pq, s), box)) continue;
          if (try_create(p, ConnectorId{q}, s, index, nullptr)) {
            existing.insert(std::uint64_t{q} << 2 | static_cast<std::uint64_t>(s));
          }
        }
      }
    }
  }

  double delta_;
  std::uint64_t next_epoch_ = 0;
  std::unordered_map<NodeId, NodeRecord> nodes_;
  std::vector<ConnectorRecord> connectors_;
  std::vector<std::uint32_t> free_connectors_;
  std::vector<EdgeRecord> edges_;
  std::vector<std::uint32_t> free_edges_;
  // Edges grouped by the unordered pair of owning nodes.
  std::unordered_map<std::pair<NodeId, NodeId>, std::vector<PairEntry>, PairHash> pair_edges_;
};

struct Ovg::Rebuilt {
  SpatialIndex index;
  Ovg ovg;
};

inline Ovg::Rebuilt Ovg::rebuild_from_scratch(std::span<const NodeDisc> nodes, double delta) {
  Rebuilt out{SpatialIndex{}, Ovg(delta)};
  for (const NodeDisc& n : nodes) {
    out.index.insert(n.id, n.enlarged_box(delta));
    try {
      out.ovg.add_node(n, out.index);
    } catch (...) {
      out.index.remove(n.id);
      throw;
    }
  }
  return out;
}

}  // namespace ortho

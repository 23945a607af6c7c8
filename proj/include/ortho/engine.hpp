#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ortho/document.hpp"
#include "ortho/error.hpp"
#include "ortho/geometry.hpp"
#include "ortho/nudger.hpp"
#include "ortho/ovg.hpp"
#include "ortho/router.hpp"
#include "ortho/spatial_index.hpp"

namespace ortho {

struct GraphEdgeIdTag {};
using GraphEdgeId = StrongId<GraphEdgeIdTag>;

struct EngineConfig {
  double delta = 5.0;
  double mu = 1.0;
  double default_radius = 10.0;
  double bend_penalty = 20.0;
  std::chrono::nanoseconds time_budget = std::chrono::milliseconds(500);
  std::uint64_t seed = 0;
  std::size_t max_workers = 0;  // 0: one per hardware thread

  CostParams cost_params() const { return {bend_penalty, time_budget}; }
  NudgeParams nudge_params() const { return {delta, mu, seed}; }

  void validate() const {
    nudge_params().validate();
    cost_params().validate();
    if (!(default_radius > 0.0)) throw Error(ErrorCode::invalid_argument, "default radius must be positive");
  }
};

struct GraphEdge {
  GraphEdgeId id;
  NodeId src;
  NodeId dst;
  OrthoRoute route;  // post-nudge; empty while unrouted
  NudgeOffset offset;

  bool routed() const { return !route.empty(); }
  bool operator==(const GraphEdge&) const = default;
};

enum class PreviewKind : std::uint8_t { insert_node, move_node, insert_edge };

inline constexpr const char* preview_kind_name(PreviewKind k) {
  switch (k) {
    case PreviewKind::insert_node: return "insert_node";
    case PreviewKind::move_node: return "move_node";
    case PreviewKind::insert_edge: return "insert_edge";
  }
  return "?";
}

struct SuggestedRoute {
  GraphEdgeId edge;
  NodeId src;
  NodeId dst;
  RouteResult search;
  NudgeOffset offset;
  OrthoRoute route;  // nudged; empty unless found
};

struct PreviewTimings {
  double ovg_update_ms = 0.0;
  double search_ms = 0.0;
  double nudge_ms = 0.0;

  double route_ms() const { return search_ms + nudge_ms; }
};

struct EditPreview {
  std::uint64_t id = 0;
  PreviewKind kind = PreviewKind::insert_node;
  std::optional<NodeDisc> node;  // staged or moved node
  std::vector<SuggestedRoute> routes;
  PreviewTimings timings;

  bool all_found() const {
    for (const auto& r : routes) {
      if (!r.search.found()) return false;
    }
    return true;
  }
};

struct RoutingSummary {
  std::size_t kept = 0;
  std::size_t found = 0;
  std::size_t no_route = 0;
  std::size_t timed_out = 0;
};

/// Single owner of a layout, its OVG and spatial index, and at most one open
/// preview. Cancel undoes a preview through inverse OVG operations.
class Engine {
 public:
  explicit Engine(EngineConfig config = {})
      : config_(validated(config)), ovg_(config_.delta), rng_(splitmix64(config_.seed)) {}

  const EngineConfig& config() const { return config_; }
  const Ovg& ovg() const { return ovg_; }
  const SpatialIndex& index() const { return index_; }
  const std::map<NodeId, NodeDisc>& nodes() const { return nodes_; }
  const std::map<GraphEdgeId, GraphEdge>& edges() const { return edges_; }
  const std::optional<EditPreview>& preview() const { return preview_; }
  const PreviewTimings& last_timings() const { return last_timings_; }

  /// Replaces the layout. Enlarged boxes must be pairwise open-disjoint; node
  /// order sets OVG insertion ranks. Stored routes are kept as they are.
  void load(const GraphDocument& doc) {
    require_no_preview();
    EngineConfig cfg = config_;
    cfg.delta = doc.delta;
    cfg.mu = doc.mu;
    validated(cfg);
    SpatialIndex index;
    Ovg ovg(cfg.delta);
    std::map<NodeId, NodeDisc> nodes;
    for (const NodeDisc& n : doc.nodes) {
      const AABox box = n.enlarged_box(cfg.delta);
      for (NodeId other : index.query_box(box)) {
        if (boxes_overlap(box, index.box_of(other))) {
          throw Error(ErrorCode::placement_violation, "node " + std::to_string(n.id.value) + " overlaps node " +
                                                          std::to_string(other.value));
        }
      }
      index.insert(n.id, box);
      ovg.add_node(n, index);
      nodes.emplace(n.id, n);
    }
    std::map<GraphEdgeId, GraphEdge> edges;
    for (const DocumentEdge& de : doc.edges) {
      GraphEdge e{GraphEdgeId{de.id}, de.src, de.dst, {}, de.offset.value_or(NudgeOffset{})};
      if (de.route) {
        const Point a = nodes.at(de.src).center, b = nodes.at(de.dst).center;
        if (!endpoints_match(*de.route, {a.x + e.offset.dx, a.y + e.offset.dy},
                             {b.x + e.offset.dx, b.y + e.offset.dy})) {
          throw Error(ErrorCode::document_parse,
                      "edge " + std::to_string(de.id) + ": route does not end at its offset node centers");
        }
        e.route = *de.route;
      }
      edges.emplace(e.id, std::move(e));
    }
    config_ = cfg;
    index_ = std::move(index);
    ovg_ = std::move(ovg);
    nodes_ = std::move(nodes);
    edges_ = std::move(edges);
    next_node_id_ = nodes_.empty() ? 1 : nodes_.rbegin()->first.value + 1;
    next_edge_id_ = edges_.empty() ? 1 : edges_.rbegin()->first.value + 1;
  }

  /// Nodes in insertion order, edges by id.
  GraphDocument to_document() const {
    GraphDocument doc{config_.delta, config_.mu, {}, {}};
    for (const NodeDisc& n : ovg_.nodes_in_insertion_order()) {
      if (nodes_.contains(n.id)) doc.nodes.push_back(nodes_.at(n.id));
    }
    for (const auto& [id, e] : edges_) {
      DocumentEdge de{id.value, e.src, e.dst, {}, {}};
      if (e.routed()) {
        de.route = e.route;
        de.offset = e.offset;
      }
      doc.edges.push_back(std::move(de));
    }
    return doc;
  }

  /// Routes and nudges every committed edge that has no route yet.
  RoutingSummary route_missing() {
    require_no_preview();
    RoutingSummary summary;
    std::vector<GraphEdgeId> ids;
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (const auto& [id, e] : edges_) {
      if (e.routed()) {
        ++summary.kept;
      } else {
        ids.push_back(id);
        pairs.emplace_back(e.src, e.dst);
      }
    }
    auto batch = find_routes_batch(ovg_, pairs, config_.cost_params(), config_.max_workers);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (batch[i].error) throw *batch[i].error;
      const RouteResult& r = *batch[i].result;
      switch (r.outcome) {
        case RouteOutcome::found: {
          ++summary.found;
          GraphEdge& e = edges_.at(ids[i]);
          e.offset = draw_offset(nodes_.at(e.src).radius, nodes_.at(e.dst).radius, config_.nudge_params(), rng_);
          e.route = apply_nudge(r.route, e.offset);
          break;
        }
        case RouteOutcome::no_route: ++summary.no_route; break;
        case RouteOutcome::timed_out: ++summary.timed_out; break;
      }
    }
    return summary;
  }

  /// Interactive placement rule: the enlarged box grown by a further delta
  /// must not meet any other enlarged box, boundary contact included, and the
  /// circle must keep mu from committed routes that the edit does not reroute.
  bool placement_free(Point center, double radius, std::optional<NodeId> self = std::nullopt) const {
    const AABox grown{center, radius + 2 * config_.delta};
    for (NodeId other : index_.query_box(grown)) {
      if (!self || other != *self) return false;
    }
    const double reach = radius + config_.mu - kEpsilon;
    for (const auto& [id, e] : edges_) {
      if (self && (e.src == *self || e.dst == *self)) continue;
      const auto pts = e.route.points();
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (std::min(pts[i].x, pts[i + 1].x) - reach > center.x || std::max(pts[i].x, pts[i + 1].x) + reach < center.x ||
            std::min(pts[i].y, pts[i + 1].y) - reach > center.y || std::max(pts[i].y, pts[i + 1].y) + reach < center.y) {
          continue;
        }
        if (distance_to_segment(center, pts[i], pts[i + 1]) < reach) return false;
      }
    }
    return true;
  }

  const EditPreview& preview_insert_node(Point center, std::optional<double> radius,
                                         std::span<const NodeId> neighbors, std::string label = {}) {
    require_no_preview();
    const double r = radius.value_or(config_.default_radius);
    if (!(r > 0.0) || !std::isfinite(center.x) || !std::isfinite(center.y)) {
      throw Error(ErrorCode::invalid_argument, "node needs a finite center and positive radius");
    }
    std::set<NodeId> seen;
    for (NodeId n : neighbors) {
      require_node(n);
      if (!seen.insert(n).second) {
        throw Error(ErrorCode::invalid_argument, "neighbor " + std::to_string(n.value) + " listed twice");
      }
    }
    require_free(center, r, std::nullopt);

    EditPreview p;
    p.id = next_preview_id_;
    p.kind = PreviewKind::insert_node;
    p.node = NodeDisc{NodeId{next_node_id_}, center, r, std::move(label)};
    std::uint64_t edge_id = next_edge_id_;
    for (NodeId n : neighbors) p.routes.push_back({GraphEdgeId{edge_id++}, p.node->id, n, {}, {}, {}});

    const auto t0 = Clock::now();
    index_.insert(p.node->id, p.node->enlarged_box(config_.delta));
    try {
      ovg_.add_node(*p.node, index_);
    } catch (...) {
      index_.remove(p.node->id);
      throw;
    }
    p.timings.ovg_update_ms = ms_since(t0);
    try {
      route_preview(p);
    } catch (...) {
      index_.remove(p.node->id);
      ovg_.remove_node(p.node->id, index_);
      throw;
    }
    return open(std::move(p));
  }

  const EditPreview& preview_move_node(NodeId id, Point center) {
    require_no_preview();
    const NodeDisc& n = require_node(id);
    require_free(center, n.radius, id);

    EditPreview p;
    p.id = next_preview_id_;
    p.kind = PreviewKind::move_node;
    p.node = n;
    p.node->center = center;
    for (const auto& [eid, e] : edges_) {
      if (e.src == id || e.dst == id) p.routes.push_back({eid, e.src, e.dst, {}, {}, {}});
    }
    moved_from_ = n.center;
    const auto t0 = Clock::now();
    relocate(id, center);
    p.timings.ovg_update_ms = ms_since(t0);
    try {
      route_preview(p);
    } catch (...) {
      relocate(id, moved_from_);
      throw;
    }
    return open(std::move(p));
  }

  const EditPreview& preview_insert_edge(NodeId src, NodeId dst) {
    require_no_preview();
    require_node(src);
    require_node(dst);
    if (src == dst) throw Error(ErrorCode::invalid_argument, "an edge needs two distinct nodes");
    EditPreview p;
    p.id = next_preview_id_;
    p.kind = PreviewKind::insert_edge;
    p.routes.push_back({GraphEdgeId{next_edge_id_}, src, dst, {}, {}, {}});
    route_preview(p);
    return open(std::move(p));
  }

  /// Relocates the staged node of an insert or move preview and searches again.
  const EditPreview& move_preview(std::uint64_t preview_id, Point center) {
    EditPreview& p = require_preview(preview_id);
    if (p.kind == PreviewKind::insert_edge) {
      throw Error(ErrorCode::invalid_argument, "an edge preview has no node to move");
    }
    require_free(center, p.node->radius, p.node->id);
    const auto t0 = Clock::now();
    relocate(p.node->id, center);
    p.node->center = center;
    p.timings = {};
    p.timings.ovg_update_ms = ms_since(t0);
    route_preview(p);
    last_timings_ = p.timings;
    return p;
  }

  /// Fresh offsets for the found routes; the searches are kept.
  const EditPreview& reroll(std::uint64_t preview_id) {
    EditPreview& p = require_preview(preview_id);
    const auto t0 = Clock::now();
    nudge(p);
    p.timings.nudge_ms = ms_since(t0);
    last_timings_ = p.timings;
    return p;
  }

  void commit(std::uint64_t preview_id) {
    EditPreview& p = require_preview(preview_id);
    if (!p.all_found()) {
      throw Error(ErrorCode::commit_with_missing_route, "preview has routes that were not found");
    }
    switch (p.kind) {
      case PreviewKind::insert_node:
        nodes_.emplace(p.node->id, *p.node);
        next_node_id_ = std::max(next_node_id_, p.node->id.value + 1);
        break;
      case PreviewKind::move_node: nodes_.at(p.node->id).center = p.node->center; break;
      case PreviewKind::insert_edge: break;
    }
    for (const SuggestedRoute& s : p.routes) {
      GraphEdge& e = edges_[s.edge];
      e = {s.edge, s.src, s.dst, s.route, s.offset};
      next_edge_id_ = std::max(next_edge_id_, s.edge.value + 1);
    }
    close();
  }

  void cancel(std::uint64_t preview_id) {
    EditPreview& p = require_preview(preview_id);
    switch (p.kind) {
      case PreviewKind::insert_node:
        index_.remove(p.node->id);
        ovg_.remove_node(p.node->id, index_);
        break;
      case PreviewKind::move_node: relocate(p.node->id, moved_from_); break;
      case PreviewKind::insert_edge: break;
    }
    close();
  }

  void delete_node(NodeId id) {
    require_no_preview();
    require_node(id);
    std::erase_if(edges_, [&](const auto& kv) { return kv.second.src == id || kv.second.dst == id; });
    index_.remove(id);
    ovg_.remove_node(id, index_);
    nodes_.erase(id);
  }

  void delete_edge(GraphEdgeId id) {
    require_no_preview();
    if (edges_.erase(id) == 0) throw Error(ErrorCode::unknown_id, "edge " + std::to_string(id.value) + " not found");
  }

 private:
  using Clock = std::chrono::steady_clock;

  static double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  }

  static const EngineConfig& validated(const EngineConfig& c) {
    c.validate();
    return c;
  }

  static bool endpoints_match(const OrthoRoute& r, Point a, Point b) {
    const double tol = 1e-6;
    return std::abs(r.front().x - a.x) <= tol && std::abs(r.front().y - a.y) <= tol &&
           std::abs(r.back().x - b.x) <= tol && std::abs(r.back().y - b.y) <= tol;
  }

  void require_no_preview() const {
    if (preview_) {
      throw Error(ErrorCode::open_preview_exists, "preview " + std::to_string(preview_->id) + " is still open");
    }
  }

  EditPreview& require_preview(std::uint64_t id) {
    if (!preview_ || preview_->id != id) {
      throw Error(ErrorCode::unknown_preview, "no open preview " + std::to_string(id));
    }
    return *preview_;
  }

  const NodeDisc& require_node(NodeId id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorCode::unknown_id, "node " + std::to_string(id.value) + " not found");
    return it->second;
  }

  void require_free(Point center, double radius, std::optional<NodeId> self) const {
    if (!placement_free(center, radius, self)) {
      throw Error(ErrorCode::placement_occupied, "position is too close to another node");
    }
  }

  void relocate(NodeId id, Point center) {
    NodeDisc moved = ovg_.node(id);
    moved.center = center;
    index_.move(id, moved.enlarged_box(config_.delta));
    ovg_.move_node(id, center, index_);
  }

  double radius_of(NodeId id) const { return ovg_.node(id).radius; }

  void route_preview(EditPreview& p) {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (const SuggestedRoute& s : p.routes) pairs.emplace_back(s.src, s.dst);
    const auto t0 = Clock::now();
    auto batch = find_routes_batch(ovg_, pairs, config_.cost_params(), config_.max_workers);
    p.timings.search_ms = ms_since(t0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      if (batch[i].error) throw *batch[i].error;
      p.routes[i].search = std::move(*batch[i].result);
    }
    const auto t1 = Clock::now();
    nudge(p);
    p.timings.nudge_ms = ms_since(t1);
  }

  void nudge(EditPreview& p) {
    const NudgeParams np = config_.nudge_params();
    for (SuggestedRoute& s : p.routes) {
      if (!s.search.found()) {
        s.offset = {};
        s.route = {};
        continue;
      }
      s.offset = draw_offset(radius_of(s.src), radius_of(s.dst), np, rng_);
      s.route = apply_nudge(s.search.route, s.offset);
    }
  }

  const EditPreview& open(EditPreview p) {
    ++next_preview_id_;
    last_timings_ = p.timings;
    preview_ = std::move(p);
    return *preview_;
  }

  void close() { preview_.reset(); }

  EngineConfig config_;
  SpatialIndex index_;
  Ovg ovg_;
  NudgeRng rng_;
  std::map<NodeId, NodeDisc> nodes_;
  std::map<GraphEdgeId, GraphEdge> edges_;
  std::optional<EditPreview> preview_;
  Point moved_from_;
  PreviewTimings last_timings_;
  std::uint64_t next_node_id_ = 1;
  std::uint64_t next_edge_id_ = 1;
  std::uint64_t next_preview_id_ = 1;
};

}  // namespace ortho

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ortho/detail/parallel.hpp"
#include "ortho/error.hpp"
#include "ortho/geometry.hpp"
#include "ortho/ovg.hpp"

namespace ortho {

struct CostParams {
  double bend_penalty = 20.0;
  std::chrono::nanoseconds time_budget = std::chrono::milliseconds(500);

  void validate() const {
    if (!(bend_penalty >= 0.0) || !std::isfinite(bend_penalty)) {
      throw Error(ErrorCode::invalid_argument, "bend_penalty must be finite and non-negative");
    }
    if (time_budget <= std::chrono::nanoseconds::zero()) {
      throw Error(ErrorCode::invalid_argument, "time_budget must be positive");
    }
  }
};

enum class RouteOutcome : std::uint8_t { found, no_route, timed_out };

constexpr const char* outcome_name(RouteOutcome o) {
  switch (o) {
    case RouteOutcome::found: return "found";
    case RouteOutcome::no_route: return "no_route";
    case RouteOutcome::timed_out: return "timed_out";
  }
  return "?";
}

struct RouteResult {
  RouteOutcome outcome = RouteOutcome::no_route;
  OrthoRoute route;  // empty unless found
  double total_cost = 0.0;
  int bends = 0;
  std::chrono::nanoseconds elapsed{};
  std::size_t expanded_states = 0;

  bool found() const { return outcome == RouteOutcome::found; }
};

/// States in expansion order with their g and h values.
struct SearchTrace {
  struct Entry {
    ConnectorId connector;
    Direction incoming;
    double g;
    double h;
  };
  std::vector<Entry> expanded;
};

/// Fewest turns any rectilinear path needs from `from`, currently heading
/// `incoming`, to reach `goal` without reversing.
inline int bend_lower_bound(Point from, Direction incoming, Point goal) {
  const double dx = goal.x - from.x;
  const double dy = goal.y - from.y;
  const bool aligned_x = std::abs(dx) <= kEpsilon;
  const bool aligned_y = std::abs(dy) <= kEpsilon;
  if (aligned_x && aligned_y) return 0;
  const Direction toward_x = dx > 0 ? Direction::east : Direction::west;
  const Direction toward_y = dy > 0 ? Direction::north : Direction::south;
  if (aligned_x || aligned_y) {
    const Direction need = aligned_x ? toward_y : toward_x;
    if (incoming == Direction::none || incoming == need) return 0;
    return incoming == opposite(need) ? 2 : 1;
  }
  if (incoming == Direction::none || incoming == toward_x || incoming == toward_y) return 1;
  return 2;
}

inline double route_heuristic(Point from, Direction incoming, Point goal, double bend_penalty) {
  return l1_distance(from, goal) + bend_penalty * bend_lower_bound(from, incoming, goal);
}

namespace detail {

struct SearchSpec {
  ConnectorId start;
  Direction start_dir = Direction::none;
  ConnectorId goal;
  ConnectorId source;  // never re-entered
  bool informed = true;
  bool deadline = true;
  SearchTrace* trace = nullptr;
};

inline constexpr std::uint32_t kNoState = ~std::uint32_t{0};
// The clock is read once this many work units (expansions plus adjacency
// entries scanned) have passed since the last read.
inline constexpr std::size_t kDeadlineWork = 4096;

struct StateRecord {
  double g;
  std::uint32_t stamp;
  std::uint32_t bends;
  std::uint32_t parent;
  EdgeShape via;  // shape of the edge into the state, seen from the parent
};

struct QueueEntry {
  double f;
  double g;
  std::uint32_t bends;
  std::uint32_t state;
  bool rekeyed = false;
};

struct QueueOrder {
  bool operator()(const QueueEntry& a, const QueueEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.bends != b.bends) return a.bends > b.bends;
    return a.state > b.state;
  }
};

// Per-thread search memory, reused across searches; a generation stamp marks
// which records belong to the current search.
struct SearchScratch {
  std::vector<StateRecord> states;
  std::vector<QueueEntry> heap;
  std::uint32_t generation = 0;

  void prepare(std::size_t count) {
    // Geometric growth: the OVG gains five connectors per node insertion.
    if (states.size() < count) {
      states.resize(std::max(count, 2 * states.size()), StateRecord{0.0, 0, 0, 0, EdgeShape::straight});
    }
    heap.clear();
    if (++generation == 0) {
      for (StateRecord& r : states) r.stamp = 0;
      generation = 1;
    }
  }
  bool seen(std::uint32_t s) const { return states[s].stamp == generation; }

  void push(const QueueEntry& e) {
    heap.push_back(e);
    std::push_heap(heap.begin(), heap.end(), QueueOrder{});
  }
  QueueEntry pop() {
    std::pop_heap(heap.begin(), heap.end(), QueueOrder{});
    const QueueEntry e = heap.back();
    heap.pop_back();
    return e;
  }
};

inline SearchScratch& thread_scratch() {
  thread_local SearchScratch scratch;
  return scratch;
}

inline std::uint32_t state_of(ConnectorId c, Direction d) {
  return c.value * 5 + static_cast<std::uint32_t>(d);
}
inline ConnectorId connector_of(std::uint32_t s) { return ConnectorId{s / 5}; }
inline Direction direction_of(std::uint32_t s) { return static_cast<Direction>(s % 5); }

// First and last heading of an edge traversed from `from` to `to`.
inline std::pair<Direction, Direction> edge_headings(Point from, Point to, EdgeShape shape) {
  const Direction h = to.x > from.x ? Direction::east : Direction::west;
  const Direction v = to.y > from.y ? Direction::north : Direction::south;
  switch (shape) {
    case EdgeShape::straight: {
      const Direction d = direction_between(from, to);
      return {d, d};
    }
    case EdgeShape::vertical_first: return {v, h};
    case EdgeShape::horizontal_first: return {h, v};
  }
  return {Direction::none, Direction::none};
}

inline RouteResult run_search(const Ovg& ovg, const SearchSpec& spec, const CostParams& params) {
  using Clock = std::chrono::steady_clock;
  const auto started = Clock::now();
  const auto deadline = started + params.time_budget;
  const double bp = params.bend_penalty;
  const Point goal_pos = ovg.position_unchecked(spec.goal);

  SearchScratch& sc = thread_scratch();
  sc.prepare(ovg.connector_capacity() * 5);

  const auto h_of = [&](Point p, Direction d) {
    return spec.informed ? route_heuristic(p, d, goal_pos, bp) : 0.0;
  };

  RouteResult result;
  const std::uint32_t s0 = state_of(spec.start, spec.start_dir);
  sc.states[s0] = {0.0, sc.generation, 0, kNoState, EdgeShape::straight};
  sc.push({h_of(ovg.position_unchecked(spec.start), spec.start_dir), 0.0, 0, s0});

  double incumbent = std::numeric_limits<double>::infinity();
  std::uint32_t best_goal = kNoState;
  if (spec.start == spec.goal) {
    incumbent = 0.0;
    best_goal = s0;
  }

  const auto relax = [&](std::uint32_t from, Point p, Direction din, const Ovg::Adjacent& a) {
    const Point q = ovg.position_unchecked(a.other);
    const auto [first, last] = edge_headings(p, q, a.shape);
    if (din != Direction::none && first == opposite(din)) return;
    const std::uint32_t turns =
        (a.shape != EdgeShape::straight ? 1u : 0u) + (din != Direction::none && first != din ? 1u : 0u);
    const double g = sc.states[from].g + l1_distance(p, q) + bp * turns;
    const std::uint32_t bends = sc.states[from].bends + turns;
    const std::uint32_t to = state_of(a.other, last);
    const bool at_goal = a.other == spec.goal;
    const double f = at_goal ? g : g + h_of(q, last);
    if (f >= incumbent) return;
    StateRecord& rec = sc.states[to];
    if (rec.stamp == sc.generation && (rec.g < g || (rec.g == g && rec.bends <= bends))) return;
    rec = {g, sc.generation, bends, from, a.shape};
    if (at_goal) {
      incumbent = g;
      best_goal = to;
      return;
    }
    sc.push({f, g, bends, to});
  };

  // Two-edge paths through corners of the endpoints and of the nodes
  // blocking their direct edges. Cheap, and often already optimal.
  const auto probe_corners = [&](std::uint32_t from) {
    const Point p0 = ovg.position_unchecked(spec.start);
    std::vector<NodeId> via{ovg.owner_unchecked(spec.start), ovg.owner_unchecked(spec.goal)};
    ovg.for_each_edge_joining(spec.start, spec.goal, [&](const Ovg::Adjacent& a) {
      for (NodeId b : ovg.blocked_by_unchecked(a.edge)) via.push_back(b);
    });
    std::sort(via.begin(), via.end());
    via.erase(std::unique(via.begin(), via.end()), via.end());
    for (NodeId n : via) {
      const auto cs = ovg.connectors_of(n);
      for (std::size_t k = 1; k < cs.size(); ++k) {
        const ConnectorId corner = cs[k];
        ovg.for_each_edge_joining(spec.start, corner, [&](const Ovg::Adjacent& a) {
          if (a.traversable) relax(from, p0, spec.start_dir, a);
        });
        const Point q = ovg.position_unchecked(corner);
        for (std::uint8_t d = 1; d < 5; ++d) {
          const std::uint32_t s = state_of(corner, static_cast<Direction>(d));
          if (!sc.seen(s) || sc.states[s].parent != from) continue;
          ovg.for_each_edge_joining(corner, spec.goal, [&](const Ovg::Adjacent& a) {
            if (a.traversable) relax(s, q, static_cast<Direction>(d), a);
          });
        }
      }
    }
  };

  bool timed_out = false;
  std::size_t work = 0;
  std::size_t next_check = kDeadlineWork;
  while (!sc.heap.empty()) {
    if (sc.heap.front().f >= incumbent) break;
    const QueueEntry top = sc.pop();
    if (top.g != sc.states[top.state].g || top.bends != sc.states[top.state].bends) continue;
    if (spec.deadline && work >= next_check) {
      next_check = work + kDeadlineWork;
      if (Clock::now() >= deadline) {
        timed_out = true;
        break;
      }
    }
    ++result.expanded_states;
    ++work;
    const ConnectorId c = connector_of(top.state);
    const Direction din = direction_of(top.state);
    const Point p = ovg.position_unchecked(c);
    if (spec.trace) spec.trace->expanded.push_back({c, din, top.g, top.f - top.g});
    // Edges into the goal first so the incumbent prunes the rest.
    ovg.for_each_edge_joining(c, spec.goal, [&](const Ovg::Adjacent& a) {
      if (a.traversable) relax(top.state, p, din, a);
    });
    // top.f bounds every remaining path, so a matching incumbent is optimal.
    if (incumbent <= top.f) break;
    if (spec.informed && top.state == s0 && spec.start == spec.source) probe_corners(s0);
    // Paths with fewer than two bends follow one of the direct geometries
    // just tried. None reached top.f, so at least two bends are needed.
    if (spec.informed && !top.rekeyed && bp > 0 && bend_lower_bound(p, din, goal_pos) < 2) {
      const double f = top.g + l1_distance(p, goal_pos) + 2 * bp;
      if (f < incumbent) sc.push({f, top.g, top.bends, top.state, true});
      continue;
    }
    const auto adjacent = ovg.adjacency_unchecked(c);
    work += adjacent.size();
    for (const Ovg::Adjacent& a : adjacent) {
      if (!a.traversable || a.other == spec.goal || a.other == spec.source) continue;
      if (ovg.is_primary_unchecked(a.other)) continue;
      relax(top.state, p, din, a);
    }
  }

  if (timed_out) {
    result.outcome = RouteOutcome::timed_out;
  } else if (best_goal != kNoState) {
    std::vector<std::uint32_t> chain;
    for (std::uint32_t s = best_goal; s != kNoState; s = sc.states[s].parent) chain.push_back(s);
    std::vector<Point> pts{ovg.position_unchecked(connector_of(chain.back()))};
    for (std::size_t i = chain.size() - 1; i-- > 0;) {
      const Point from = ovg.position_unchecked(connector_of(chain[i + 1]));
      const Point to = ovg.position_unchecked(connector_of(chain[i]));
      const EdgeGeometry eg = edge_geometry(from, to, sc.states[chain[i]].via);
      for (std::uint8_t k = 1; k < eg.count; ++k) pts.push_back(eg.pts[k]);
    }
    if (pts.size() == 1) pts.push_back(pts.front());
    result.outcome = RouteOutcome::found;
    result.route = OrthoRoute(std::move(pts));
    result.bends = count_bends(result.route);
    result.total_cost = polyline_length(result.route) + bp * result.bends;
  } else {
    result.outcome = RouteOutcome::no_route;
  }
  result.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - started);
  return result;
}

inline SearchSpec route_spec(const Ovg& ovg, NodeId src, NodeId dst) {
  if (src == dst) throw Error(ErrorCode::invalid_argument, "source and target must differ");
  SearchSpec spec;
  spec.start = ovg.primary_of(src);
  spec.goal = ovg.primary_of(dst);
  spec.source = spec.start;
  return spec;
}

}  // namespace detail

/// Minimum-cost route between the primary connectors of two nodes, cost
/// being L1 length plus bend_penalty per bend. Routes never pass through
/// another node's primary connector and never reverse direction.
inline RouteResult find_route(const Ovg& ovg, NodeId src, NodeId dst, const CostParams& params,
                              SearchTrace* trace = nullptr) {
  params.validate();
  detail::SearchSpec spec = detail::route_spec(ovg, src, dst);
  spec.trace = trace;
  return detail::run_search(ovg, spec, params);
}

/// Uninformed exhaustive search with no deadline, for checking find_route.
inline RouteResult dijkstra_oracle(const Ovg& ovg, NodeId src, NodeId dst, const CostParams& params) {
  params.validate();
  detail::SearchSpec spec = detail::route_spec(ovg, src, dst);
  spec.informed = false;
  spec.deadline = false;
  return detail::run_search(ovg, spec, params);
}

struct BatchEntry {
  std::optional<RouteResult> result;
  std::optional<Error> error;
};

/// Independent find_route calls spread over worker threads. The OVG must
/// not change while the batch runs. Output order follows `pairs`.
inline std::vector<BatchEntry> find_routes_batch(const Ovg& ovg,
                                                 std::span<const std::pair<NodeId, NodeId>> pairs,
                                                 const CostParams& params, std::size_t max_workers = 0) {
  std::vector<BatchEntry> out(pairs.size());
  detail::parallel_for(
      pairs.size(),
      [&](std::size_t i) {
        try {
          out[i].result = find_route(ovg, pairs[i].first, pairs[i].second, params);
        } catch (const Error& e) {
          out[i].error = e;
        }
      },
      max_workers);
  return out;
}

}  // namespace ortho

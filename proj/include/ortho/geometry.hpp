#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ortho/error.hpp"

namespace ortho {

/// Tolerance for axis-alignment and boundary predicates, in layout units.
inline constexpr double kEpsilon = 1e-9;

template <typename Tag, typename Rep = std::uint64_t>
struct StrongId {
  Rep value{};

  constexpr auto operator<=>(const StrongId&) const = default;
};

struct NodeIdTag {};
using NodeId = StrongId<NodeIdTag>;

struct Point {
  double x = 0.0;
  double y = 0.0;

  constexpr auto operator<=>(const Point&) const = default;
};

inline bool nearly_equal(double a, double b) { return std::abs(a - b) <= kEpsilon; }
inline bool nearly_equal(Point a, Point b) {
  return nearly_equal(a.x, b.x) && nearly_equal(a.y, b.y);
}

inline double l1_distance(Point a, Point b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

struct Segment {
  Point a;
  Point b;

  bool axis_aligned() const { return nearly_equal(a.x, b.x) || nearly_equal(a.y, b.y); }
  bool horizontal() const { return nearly_equal(a.y, b.y); }
};

/// Axis-aligned square given by its center and half side length.
struct AABox {
  Point center;
  double half_extent = 0.0;

  double min_x() const { return center.x - half_extent; }
  double max_x() const { return center.x + half_extent; }
  double min_y() const { return center.y - half_extent; }
  double max_y() const { return center.y + half_extent; }

  constexpr auto operator<=>(const AABox&) const = default;
};

/// Closed regions share at least one point.
inline bool boxes_touch(const AABox& a, const AABox& b) {
  return a.min_x() <= b.max_x() + kEpsilon && b.min_x() <= a.max_x() + kEpsilon &&
         a.min_y() <= b.max_y() + kEpsilon && b.min_y() <= a.max_y() + kEpsilon;
}

/// Open interiors overlap with positive area.
inline bool boxes_overlap(const AABox& a, const AABox& b) {
  return a.min_x() < b.max_x() - kEpsilon && b.min_x() < a.max_x() - kEpsilon &&
         a.min_y() < b.max_y() - kEpsilon && b.min_y() < a.max_y() - kEpsilon;
}

/// True iff the segment passes through the open interior of the box.
/// Running along the boundary does not count.
inline bool segment_intersects_box(const Segment& seg, const AABox& box) {
  const double x0 = std::min(seg.a.x, seg.b.x);
  const double x1 = std::max(seg.a.x, seg.b.x);
  const double y0 = std::min(seg.a.y, seg.b.y);
  const double y1 = std::max(seg.a.y, seg.b.y);
  return x0 < box.max_x() - kEpsilon && x1 > box.min_x() + kEpsilon &&
         y0 < box.max_y() - kEpsilon && y1 > box.min_y() + kEpsilon;
}

/// True iff the segment shares at least one point with the closed box.
inline bool segment_touches_box(const Segment& seg, const AABox& box) {
  const double x0 = std::min(seg.a.x, seg.b.x);
  const double x1 = std::max(seg.a.x, seg.b.x);
  const double y0 = std::min(seg.a.y, seg.b.y);
  const double y1 = std::max(seg.a.y, seg.b.y);
  return x0 <= box.max_x() + kEpsilon && x1 >= box.min_x() - kEpsilon &&
         y0 <= box.max_y() + kEpsilon && y1 >= box.min_y() - kEpsilon;
}

enum class Direction : std::uint8_t { none, east, west, north, south };

inline Direction opposite(Direction d) {
  switch (d) {
    case Direction::east: return Direction::west;
    case Direction::west: return Direction::east;
    case Direction::north: return Direction::south;
    case Direction::south: return Direction::north;
    case Direction::none: break;
  }
  return Direction::none;
}

inline bool is_horizontal(Direction d) { return d == Direction::east || d == Direction::west; }

/// Direction of travel from a to b; none for coincident or non-aligned points.
inline Direction direction_between(Point a, Point b) {
  const bool same_x = nearly_equal(a.x, b.x);
  const bool same_y = nearly_equal(a.y, b.y);
  if (same_x == same_y) return Direction::none;
  if (same_y) return b.x > a.x ? Direction::east : Direction::west;
  return b.y > a.y ? Direction::north : Direction::south;
}

/// Axis-aligned polyline. Every constructor normalizes: zero-length segments
/// are dropped and consecutive segments running the same direction are merged.
class OrthoRoute {
 public:
  OrthoRoute() = default;

  explicit OrthoRoute(std::vector<Point> points) : points_(std::move(points)) { normalize(); }
  OrthoRoute(std::initializer_list<Point> points) : points_(points) { normalize(); }

  std::span<const Point> points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Point& front() const { return points_.front(); }
  const Point& back() const { return points_.back(); }

  bool operator==(const OrthoRoute&) const = default;

 private:
  void normalize() {
    if (points_.empty()) return;
    if (points_.size() == 1) {
      throw Error(ErrorCode::invalid_argument, "route needs at least two points");
    }
    std::vector<Point> out;
    out.reserve(points_.size());
    out.push_back(points_.front());
    for (std::size_t i = 1; i < points_.size(); ++i) {
      const Point p = points_[i];
      const Point last = out.back();
      if (nearly_equal(p, last)) continue;
      if (!nearly_equal(p.x, last.x) && !nearly_equal(p.y, last.y)) {
        throw Error(ErrorCode::invalid_argument, "route segment is not axis-aligned");
      }
      if (out.size() >= 2 &&
          direction_between(out[out.size() - 2], last) == direction_between(last, p)) {
        out.back() = p;
      } else {
        out.push_back(p);
      }
    }
    // A route whose points all coincide keeps both ends.
    if (out.size() == 1) out.push_back(points_.back());
    points_ = std::move(out);
  }

  std::vector<Point> points_;
};

inline double polyline_length(const OrthoRoute& route) {
  const auto pts = route.points();
  double total = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) total += l1_distance(pts[i - 1], pts[i]);
  return total;
}

inline int count_bends(const OrthoRoute& route) {
  const auto pts = route.points();
  int bends = 0;
  for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
    const Direction in = direction_between(pts[i - 1], pts[i]);
    const Direction out = direction_between(pts[i], pts[i + 1]);
    if (is_horizontal(in) != is_horizontal(out)) ++bends;
  }
  return bends;
}

inline OrthoRoute translate_route(const OrthoRoute& route, double dx, double dy) {
  if (route.empty()) return route;
  std::vector<Point> moved(route.points().begin(), route.points().end());
  for (auto& p : moved) {
    p.x += dx;
    p.y += dy;
  }
  return OrthoRoute(std::move(moved));
}

/// A circular layout node. Its enlarged box is the square of half extent
/// radius + delta around the center.
struct NodeDisc {
  NodeId id;
  Point center;
  double radius = 0.0;
  std::string label;

  AABox enlarged_box(double delta) const { return AABox{center, radius + delta}; }

  bool operator==(const NodeDisc&) const = default;
};

}  // namespace ortho

template <typename Tag, typename Rep>
struct std::hash<ortho::StrongId<Tag, Rep>> {
  std::size_t operator()(const ortho::StrongId<Tag, Rep>& id) const noexcept {
    return std::hash<Rep>{}(id.value);
  }
};

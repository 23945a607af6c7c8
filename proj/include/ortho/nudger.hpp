#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ortho/error.hpp"
#include "ortho/geometry.hpp"

namespace ortho {

struct NudgeParams {
  double delta = 5.0;
  double mu = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(delta > 0.0)) throw Error(ErrorCode::invalid_argument, "delta must be positive");
    if (!(mu > 0.0) || !(mu < delta)) throw Error(ErrorCode::invalid_argument, "mu must lie in (0, delta)");
  }
};

struct NudgeOffset {
  double dx = 0.0;
  double dy = 0.0;

  bool operator==(const NudgeOffset&) const = default;
};

/// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seedable stream for offsets: MT19937-64 as fixed by the C++ standard,
/// with doubles taken from the top 53 bits so replays match on every platform.
class NudgeRng {
 public:
  explicit NudgeRng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool coin() { return (next() >> 63) != 0; }

 private:
  std::mt19937_64 engine_;
};

inline double offset_bound(double r_src, double r_dst, const NudgeParams& params) {
  return std::min({r_src, r_dst, params.delta - params.mu});
}

/// Per axis: magnitude uniform in [0, min(r_src, r_dst, delta - mu)], then a
/// fair sign. Always consumes four draws; a non-positive bound gives zero.
inline NudgeOffset draw_offset(double r_src, double r_dst, const NudgeParams& params, NudgeRng& rng) {
  params.validate();
  const double bound = offset_bound(r_src, r_dst, params);
  const double ux = rng.uniform01();
  const bool nx = rng.coin();
  const double uy = rng.uniform01();
  const bool ny = rng.coin();
  if (!(bound > 0.0)) return {};
  return {(nx ? -ux : ux) * bound, (ny ? -uy : uy) * bound};
}

inline OrthoRoute apply_nudge(const OrthoRoute& route, NudgeOffset offset) {
  return translate_route(route, offset.dx, offset.dy);
}

inline double distance_to_segment(Point p, Point a, Point b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(a.x + t * vx - p.x, a.y + t * vy - p.y);
}

/// True when the route keeps at least `mu` from every circle except src and dst.
inline bool verify_clearance(const OrthoRoute& route, std::span<const NodeDisc> nodes, NodeId src, NodeId dst,
                             double mu) {
  const auto pts = route.points();
  for (const NodeDisc& n : nodes) {
    if (n.id == src || n.id == dst) continue;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Point b = pts[std::min(i + 1, pts.size() - 1)];
      if (distance_to_segment(n.center, pts[i], b) < n.radius + mu - kEpsilon) return false;
    }
  }
  return true;
}

namespace detail {

// Parameter along a->b where the segment leaves the circle, or -1 when it
// never crosses outward.
inline double exit_parameter(Point a, Point b, Point c, double r) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double fx = a.x - c.x, fy = a.y - c.y;
  const double qa = vx * vx + vy * vy;
  if (qa == 0.0) return -1.0;
  const double qb = 2 * (fx * vx + fy * vy);
  const double qc = fx * fx + fy * fy - r * r;
  const double disc = qb * qb - 4 * qa * qc;
  if (disc < 0) return -1.0;
  const double t = (-qb + std::sqrt(disc)) / (2 * qa);
  return (t >= 0.0 && t <= 1.0) ? t : -1.0;
}

inline std::vector<Point> clip_front(std::vector<Point> pts, const NodeDisc& node) {
  const auto inside = [&](Point p) { return std::hypot(p.x - node.center.x, p.y - node.center.y) < node.radius; };
  if (!inside(pts.front())) return pts;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (inside(pts[i + 1])) continue;
    const double t = exit_parameter(pts[i], pts[i + 1], node.center, node.radius);
    if (t < 0) continue;
    const Point cut{pts[i].x + t * (pts[i + 1].x - pts[i].x), pts[i].y + t * (pts[i + 1].y - pts[i].y)};
    std::vector<Point> out{cut};
    out.insert(out.end(), pts.begin() + static_cast<std::ptrdiff_t>(i) + 1, pts.end());
    return out;
  }
  return pts;
}

}  // namespace detail

/// Drawable polyline: the parts inside the src and dst circles are cut off
/// so the line attaches to their boundaries. Ends that already lie outside
/// their circle are kept.
inline std::vector<Point> clip_to_endpoints(const OrthoRoute& route, const NodeDisc& src, const NodeDisc& dst) {
  std::vector<Point> pts(route.points().begin(), route.points().end());
  if (pts.size() < 2) return pts;
  pts = detail::clip_front(std::move(pts), src);
  std::reverse(pts.begin(), pts.end());
  pts = detail::clip_front(std::move(pts), dst);
  std::reverse(pts.begin(), pts.end());
  return pts;
}

}  // namespace ortho

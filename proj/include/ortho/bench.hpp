#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ortho/document.hpp"
#include "ortho/engine.hpp"
#include "ortho/error.hpp"

namespace ortho {

struct BenchRecord {
  std::size_t node_count = 0;
  std::size_t edge_count = 0;
  double route_time_ms = 0.0;  // two-route search plus nudge
  double ovg_update_time_ms = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const BenchRecord&) const = default;
};

inline constexpr int kSamplerMaxRejections = 10000;
inline constexpr int kSamplerGrowAfter = 1000;
inline constexpr int kBenchNeighbors = 2;

namespace detail {

// Rejection sampler over a square of side 40 * radius * sqrt(node count)
// centered on the origin; the square doubles after a run of rejections.
class FreePositionSampler {
 public:
  explicit FreePositionSampler(std::uint64_t seed) : rng_(seed) {}

  Point sample(const Engine& engine) {
    const double r = engine.config().default_radius;
    for (int rejected = 0; rejected < kSamplerMaxRejections; ++rejected) {
      if (rejected > 0 && rejected % kSamplerGrowAfter == 0) scale_ *= 2.0;
      const double n = static_cast<double>(std::max<std::size_t>(engine.nodes().size(), 1));
      const double side = 40.0 * r * std::sqrt(n) * scale_;
      const Point p{(rng_.uniform01() - 0.5) * side, (rng_.uniform01() - 0.5) * side};
      if (engine.placement_free(p, r)) return p;
    }
    throw Error(ErrorCode::sampling_failed, "no free position after " + std::to_string(kSamplerMaxRejections) +
                                                " rejections");
  }

  std::uint64_t pick(std::uint64_t bound) { return rng_.next() % bound; }

 private:
  NudgeRng rng_;
  double scale_ = 1.0;
};

}  // namespace detail

/// Incremental insertion benchmark. Per seed: two unconnected nodes, then
/// nodes at random free positions, each joined to two distinct random
/// existing nodes, until `max_nodes`. One record per routed insertion.
/// `final_layouts`, when given, receives each run's committed document.
inline std::vector<BenchRecord> run_scaling_benchmark(std::size_t max_nodes, std::span<const std::uint64_t> seeds,
                                                      const EngineConfig& config,
                                                      std::vector<GraphDocument>* final_layouts = nullptr) {
  if (max_nodes < 3) throw Error(ErrorCode::invalid_argument, "max_nodes must be at least 3");
  std::vector<BenchRecord> records;
  for (std::uint64_t seed : seeds) {
    EngineConfig cfg = config;
    cfg.seed = seed;
    Engine engine(cfg);
    detail::FreePositionSampler sampler(splitmix64(seed ^ 0x5ca1ab1eULL));
    std::vector<NodeId> ids;
    for (int i = 0; i < 2; ++i) {
      const auto& pv = engine.preview_insert_node(sampler.sample(engine), std::nullopt, {});
      ids.push_back(pv.node->id);
      engine.commit(pv.id);
    }
    while (engine.nodes().size() < max_nodes) {
      const std::uint64_t a = sampler.pick(ids.size());
      std::uint64_t b = sampler.pick(ids.size() - 1);
      if (b >= a) ++b;
      const NodeId neighbors[kBenchNeighbors] = {ids[a], ids[b]};
      // An insertion whose routes are not all found is discarded and resampled.
      for (int attempt = 0;; ++attempt) {
        if (attempt == 100) throw Error(ErrorCode::sampling_failed, "no routable position found");
        const auto& pv = engine.preview_insert_node(sampler.sample(engine), std::nullopt, neighbors);
        if (!pv.all_found()) {
          engine.cancel(pv.id);
          continue;
        }
        const PreviewTimings t = pv.timings;
        ids.push_back(pv.node->id);
        engine.commit(pv.id);
        records.push_back({engine.nodes().size(), engine.edges().size(), t.route_ms(), t.ovg_update_ms, seed});
        break;
      }
    }
    if (final_layouts) final_layouts->push_back(engine.to_document());
  }
  return records;
}

inline constexpr std::string_view kCsvHeader = "node_count,edge_count,route_time_ms,ovg_update_time_ms,seed";

inline std::string emit_csv(std::span<const BenchRecord> records) {
  if (records.empty()) throw Error(ErrorCode::invalid_argument, "no records to emit");
  std::string out(kCsvHeader);
  out += '\n';
  char line[160];
  for (const BenchRecord& r : records) {
    std::snprintf(line, sizeof line, "%zu,%zu,%.3f,%.3f,%llu\n", r.node_count, r.edge_count, r.route_time_ms,
                  r.ovg_update_time_ms, static_cast<unsigned long long>(r.seed));
    out += line;
  }
  return out;
}

inline std::vector<BenchRecord> parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(ErrorCode::document_parse, "missing CSV header");
  }
  std::vector<BenchRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    BenchRecord r;
    unsigned long long seed = 0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf,%llu", &r.node_count, &r.edge_count, &r.route_time_ms,
                    &r.ovg_update_time_ms, &seed) != 5) {
      throw Error(ErrorCode::document_parse, "bad CSV row: " + line);
    }
    r.seed = seed;
    out.push_back(r);
  }
  return out;
}

inline double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  return (*std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)) + hi) / 2;
}

/// Median route time over records with node_count in [lo, hi].
inline double median_route_time(std::span<const BenchRecord> records, std::size_t lo, std::size_t hi) {
  std::vector<double> v;
  for (const BenchRecord& r : records) {
    if (r.node_count >= lo && r.node_count <= hi) v.push_back(r.route_time_ms);
  }
  return median(std::move(v));
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::document_parse, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw Error(ErrorCode::invalid_argument, "cannot write " + path.string());
  }
}

/// Loads a document, routes the edges that have no stored route and writes
/// the result. Delta and mu come from the document.
inline RoutingSummary route_document(std::string_view input, std::string& output, const EngineConfig& config) {
  Engine engine(config);
  engine.load(parse_document(input));
  const RoutingSummary summary = engine.route_missing();
  output = serialize_document(engine.to_document());
  return summary;
}

inline RoutingSummary route_file(const std::filesystem::path& input, const std::filesystem::path& output,
                                 const EngineConfig& config) {
  std::string text;
  const RoutingSummary summary = route_document(read_text_file(input), text, config);
  write_text_file(output, text);
  return summary;
}

}  // namespace ortho

#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ortho/error.hpp"
#include "ortho/geometry.hpp"
#include "ortho/nudger.hpp"

namespace ortho {

inline constexpr std::string_view kDocumentVersion = "v1";

struct DocumentEdge {
  std::uint64_t id = 0;
  NodeId src;
  NodeId dst;
  std::optional<OrthoRoute> route;
  std::optional<NudgeOffset> offset;

  bool operator==(const DocumentEdge&) const = default;
};

struct GraphDocument {
  double delta = 5.0;
  double mu = 1.0;
  std::vector<NodeDisc> nodes;
  std::vector<DocumentEdge> edges;

  bool operator==(const GraphDocument&) const = default;
};

/// Rounds to the nine fractional digits the document format keeps.
inline double round_coordinate(double v) {
  const double r = std::round(v * 1e9) / 1e9;
  return r == 0.0 ? 0.0 : r;
}

namespace detail {

using ojson = nlohmann::ordered_json;

[[noreturn]] inline void document_error(const std::string& what) {
  throw Error(ErrorCode::document_parse, what);
}

inline const nlohmann::json& field(const nlohmann::json& obj, const char* name, const std::string& where) {
  auto it = obj.find(name);
  if (it == obj.end()) document_error(where + ": missing field '" + name + "'");
  return *it;
}

inline double number_field(const nlohmann::json& obj, const char* name, const std::string& where) {
  const auto& v = field(obj, name, where);
  if (!v.is_number()) document_error(where + ": field '" + name + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) document_error(where + ": field '" + name + "' must be finite");
  return d;
}

inline std::uint64_t id_field(const nlohmann::json& obj, const char* name, const std::string& where) {
  const auto& v = field(obj, name, where);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    document_error(where + ": field '" + name + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

inline Point point_of(const nlohmann::json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    document_error(where + ": expected [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

inline ojson pair_json(double a, double b) { return ojson::array({round_coordinate(a), round_coordinate(b)}); }

}  // namespace detail

inline GraphDocument document_from_json(const nlohmann::json& j) {
  using namespace detail;
  if (!j.is_object()) document_error("document must be a JSON object");
  const auto& version = field(j, "version", "document");
  if (!version.is_string() || version.get<std::string>() != kDocumentVersion) {
    document_error("document: version must be \"v1\"");
  }
  GraphDocument doc;
  if (auto it = j.find("config"); it != j.end()) {
    if (!it->is_object()) document_error("config must be an object");
    if (it->contains("delta")) doc.delta = number_field(*it, "delta", "config");
    if (it->contains("mu")) doc.mu = number_field(*it, "mu", "config");
  }
  if (!(doc.delta > 0.0) || !(doc.mu > 0.0) || !(doc.mu < doc.delta)) {
    document_error("config: need 0 < mu < delta");
  }

  std::set<NodeId> node_ids;
  const auto& nodes = field(j, "nodes", "document");
  if (!nodes.is_array()) document_error("nodes must be an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const auto& n = nodes[i];
    if (!n.is_object()) document_error(where + " must be an object");
    NodeDisc d;
    d.id = NodeId{id_field(n, "id", where)};
    d.center = {number_field(n, "x", where), number_field(n, "y", where)};
    d.radius = number_field(n, "r", where);
    if (!(d.radius > 0.0)) document_error(where + ": r must be positive");
    if (auto it = n.find("label"); it != n.end()) {
      if (!it->is_string()) document_error(where + ": label must be a string");
      d.label = it->get<std::string>();
    }
    if (!node_ids.insert(d.id).second) document_error(where + ": duplicate node id");
    doc.nodes.push_back(std::move(d));
  }

  std::set<std::uint64_t> edge_ids;
  if (auto eit = j.find("edges"); eit != j.end()) {
    if (!eit->is_array()) document_error("edges must be an array");
    for (std::size_t i = 0; i < eit->size(); ++i) {
      const std::string where = "edges[" + std::to_string(i) + "]";
      const auto& e = (*eit)[i];
      if (!e.is_object()) document_error(where + " must be an object");
      DocumentEdge de;
      de.id = id_field(e, "id", where);
      de.src = NodeId{id_field(e, "src", where)};
      de.dst = NodeId{id_field(e, "dst", where)};
      if (!node_ids.contains(de.src) || !node_ids.contains(de.dst)) {
        document_error(where + ": endpoint is not a node");
      }
      if (de.src == de.dst) document_error(where + ": self loops are not supported");
      if (!edge_ids.insert(de.id).second) document_error(where + ": duplicate edge id");
      if (auto rit = e.find("route"); rit != e.end() && !rit->is_null()) {
        if (!rit->is_array() || rit->size() < 2) document_error(where + ": route needs at least two points");
        std::vector<Point> pts;
        for (const auto& p : *rit) pts.push_back(point_of(p, where + ".route"));
        try {
          de.route = OrthoRoute(std::move(pts));
        } catch (const Error& err) {
          document_error(where + ": " + err.what());
        }
      }
      if (auto oit = e.find("offset"); oit != e.end() && !oit->is_null()) {
        const Point o = point_of(*oit, where + ".offset");
        de.offset = NudgeOffset{o.x, o.y};
      }
      doc.edges.push_back(std::move(de));
    }
  }
  return doc;
}

inline GraphDocument parse_document(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::document_parse, std::string("invalid JSON: ") + e.what());
  }
  return document_from_json(j);
}

/// Fixed field order; coordinates rounded to nine fractional digits.
inline nlohmann::ordered_json document_to_json(const GraphDocument& doc) {
  using detail::ojson;
  ojson j;
  j["version"] = kDocumentVersion;
  j["config"] = ojson{{"delta", doc.delta}, {"mu", doc.mu}};
  ojson nodes = ojson::array();
  for (const NodeDisc& n : doc.nodes) {
    ojson o;
    o["id"] = n.id.value;
    o["x"] = round_coordinate(n.center.x);
    o["y"] = round_coordinate(n.center.y);
    o["r"] = round_coordinate(n.radius);
    o["label"] = n.label;
    nodes.push_back(std::move(o));
  }
  j["nodes"] = std::move(nodes);
  ojson edges = ojson::array();
  for (const DocumentEdge& e : doc.edges) {
    ojson o;
    o["id"] = e.id;
    o["src"] = e.src.value;
    o["dst"] = e.dst.value;
    if (e.route) {
      ojson pts = ojson::array();
      for (const Point& p : e.route->points()) pts.push_back(detail::pair_json(p.x, p.y));
      o["route"] = std::move(pts);
    }
    if (e.offset) o["offset"] = detail::pair_json(e.offset->dx, e.offset->dy);
    edges.push_back(std::move(o));
  }
  j["edges"] = std::move(edges);
  return j;
}

inline std::string serialize_document(const GraphDocument& doc) { return document_to_json(doc).dump(2) + "\n"; }

}  // namespace ortho

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ortho/bench.hpp"
#include "ortho/document.hpp"
#include "ortho/engine.hpp"
#include "ortho/error.hpp"
#include "ortho/nudger.hpp"

namespace ortho {

using WireJson = nlohmann::ordered_json;

inline constexpr std::string_view kProtocolVersion = "v1";

struct WireRequest {
  std::string version{kProtocolVersion};
  WireJson id;  // echoed verbatim; null when absent
  std::string op;
  WireJson params = WireJson::object();

  bool operator==(const WireRequest&) const = default;
};

struct WireResponse {
  std::string version{kProtocolVersion};
  WireJson id;
  bool ok = true;
  WireJson payload = WireJson::object();  // when ok
  std::string error_code;                 // otherwise
  std::string error_message;

  bool operator==(const WireResponse&) const = default;
};

namespace detail {

[[noreturn]] inline void wire_error(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline WireJson parse_wire_object(std::string_view line) {
  WireJson j;
  try {
    j = WireJson::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    wire_error(ErrorCode::parse_error, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) wire_error(ErrorCode::parse_error, "message must be a JSON object");
  return j;
}

inline void check_version(const WireJson& j) {
  auto it = j.find("version");
  if (it == j.end() || !it->is_string() || it->get<std::string>() != kProtocolVersion) {
    wire_error(ErrorCode::unsupported_version, "field \"version\" must be \"v1\"");
  }
}

}  // namespace detail

/// Best effort: the request id of a line that may fail to parse further.
inline WireJson request_id_of(std::string_view line) {
  try {
    const WireJson j = WireJson::parse(line);
    if (j.is_object()) {
      if (auto it = j.find("id"); it != j.end()) return *it;
    }
  } catch (const nlohmann::json::exception&) {
  }
  return nullptr;
}

inline WireRequest parse_request(std::string_view line) {
  const WireJson j = detail::parse_wire_object(line);
  WireRequest r;
  if (auto it = j.find("id"); it != j.end()) r.id = *it;
  detail::check_version(j);
  auto op = j.find("op");
  if (op == j.end() || !op->is_string()) detail::wire_error(ErrorCode::parse_error, "field \"op\" must be a string");
  r.op = op->get<std::string>();
  if (auto it = j.find("params"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) detail::wire_error(ErrorCode::parse_error, "field \"params\" must be an object");
    r.params = *it;
  }
  return r;
}

inline std::string serialize_request(const WireRequest& r) {
  WireJson j;
  j["version"] = r.version;
  j["id"] = r.id;
  j["op"] = r.op;
  j["params"] = r.params;
  return j.dump();
}

inline WireResponse parse_response(std::string_view line) {
  const WireJson j = detail::parse_wire_object(line);
  detail::check_version(j);
  WireResponse r;
  if (auto it = j.find("id"); it != j.end()) r.id = *it;
  const auto status = j.value("status", std::string{});
  if (status == "ok") {
    r.payload = j.value("payload", WireJson::object());
  } else if (status == "error") {
    r.ok = false;
    const WireJson err = j.value("error", WireJson::object());
    r.error_code = err.value("code", std::string{});
    r.error_message = err.value("message", std::string{});
  } else {
    detail::wire_error(ErrorCode::parse_error, "field \"status\" must be \"ok\" or \"error\"");
  }
  return r;
}

inline std::string serialize_response(const WireResponse& r) {
  WireJson j;
  j["version"] = r.version;
  j["id"] = r.id;
  if (r.ok) {
    j["status"] = "ok";
    j["payload"] = r.payload;
  } else {
    j["status"] = "error";
    j["error"] = WireJson{{"code", r.error_code}, {"message", r.error_message}};
  }
  return j.dump();
}

/// One engine behind the line protocol. Not thread-safe: the transport
/// serializes requests per session.
class Session {
 public:
  explicit Session(EngineConfig config = {}) : config_(config), engine_(config) {}

  const Engine& engine() const { return engine_; }

  /// One request line in, one response line out (without newline).
  std::string handle_line(std::string_view line) {
    WireRequest req;
    try {
      req = parse_request(line);
    } catch (const Error& e) {
      return serialize_response(error_response(request_id_of(line), e.code(), e.what()));
    }
    return serialize_response(handle(req));
  }

  WireResponse handle(const WireRequest& req) {
    const auto t0 = std::chrono::steady_clock::now();
    WireResponse res;
    res.id = req.id;
    try {
      if (req.version != kProtocolVersion) {
        throw Error(ErrorCode::unsupported_version, "field \"version\" must be \"v1\"");
      }
      res.payload = dispatch(req.op, req.params);
    } catch (const Error& e) {
      res = error_response(req.id, e.code(), e.what());
    } catch (const nlohmann::json::exception& e) {
      res = error_response(req.id, ErrorCode::invalid_argument, e.what());
    }
    last_request_ms_ = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    ++requests_;
    return res;
  }

 private:
  static WireResponse error_response(const WireJson& id, ErrorCode code, const std::string& message) {
    WireResponse r;
    r.id = id;
    r.ok = false;
    r.error_code = std::string(code_name(code));
    r.error_message = message;
    return r;
  }

  // Parameter access; missing or mistyped fields are invalid-argument.
  static const WireJson& param(const WireJson& p, const char* name) {
    auto it = p.find(name);
    if (it == p.end()) throw Error(ErrorCode::invalid_argument, std::string("missing parameter \"") + name + "\"");
    return *it;
  }
  static double number(const WireJson& p, const char* name) {
    const WireJson& v = param(p, name);
    if (!v.is_number()) throw Error(ErrorCode::invalid_argument, std::string("parameter \"") + name + "\" must be a number");
    return v.get<double>();
  }
  static std::uint64_t unsigned_id(const WireJson& v, const std::string& name) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      throw Error(ErrorCode::invalid_argument, "parameter \"" + name + "\" must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }
  static std::uint64_t id(const WireJson& p, const char* name) { return unsigned_id(param(p, name), name); }
  static Point point(const WireJson& p) { return {number(p, "x"), number(p, "y")}; }

  WireJson dispatch(const std::string& op, const WireJson& p) {
    using Handler = WireJson (Session::*)(const WireJson&);
    static const std::map<std::string, Handler, std::less<>> table{
        {"load_graph", &Session::op_load_graph},
        {"save_graph", &Session::op_save_graph},
        {"get_layout", &Session::op_get_layout},
        {"get_timings", &Session::op_get_timings},
        {"preview_insert_node", &Session::op_preview_insert_node},
        {"preview_move_node", &Session::op_preview_move_node},
        {"preview_insert_edge", &Session::op_preview_insert_edge},
        {"move_preview", &Session::op_move_preview},
        {"reroll", &Session::op_reroll},
        {"commit", &Session::op_commit},
        {"cancel", &Session::op_cancel},
        {"delete_node", &Session::op_delete_node},
        {"delete_edge", &Session::op_delete_edge},
    };
    auto it = table.find(op);
    if (it == table.end()) throw Error(ErrorCode::unknown_op, "unknown op \"" + op + "\"");
    return (this->*(it->second))(p);
  }

  WireJson op_load_graph(const WireJson& p) {
    GraphDocument doc;
    if (auto it = p.find("document"); it != p.end()) {
      doc = document_from_json(nlohmann::json::parse(it->dump()));
    } else if (auto path = p.find("path"); path != p.end() && path->is_string()) {
      doc = parse_document(read_text_file(path->get<std::string>()));
    } else {
      throw Error(ErrorCode::invalid_argument, "load_graph needs \"document\" or \"path\"");
    }
    engine_.load(doc);
    const RoutingSummary s = engine_.route_missing();
    return {{"node_count", engine_.nodes().size()},
            {"edge_count", engine_.edges().size()},
            {"routing", {{"kept", s.kept}, {"found", s.found}, {"no_route", s.no_route}, {"timed_out", s.timed_out}}}};
  }

  WireJson op_save_graph(const WireJson& p) {
    const GraphDocument doc = engine_.to_document();
    WireJson out{{"document", document_to_json(doc)}};
    if (auto path = p.find("path"); path != p.end()) {
      if (!path->is_string()) throw Error(ErrorCode::invalid_argument, "parameter \"path\" must be a string");
      write_text_file(path->get<std::string>(), serialize_document(doc));
      out["path"] = *path;
    }
    return out;
  }

  WireJson op_get_layout(const WireJson&) {
    WireJson nodes = WireJson::array();
    for (const auto& [nid, n] : engine_.nodes()) nodes.push_back(node_json(n));
    WireJson edges = WireJson::array();
    for (const auto& [eid, e] : engine_.edges()) {
      WireJson o{{"id", eid.value}, {"src", e.src.value}, {"dst", e.dst.value}};
      o["offset"] = WireJson::array({e.offset.dx, e.offset.dy});
      o["points"] = e.routed() ? points_json(clip_to_endpoints(e.route, engine_.nodes().at(e.src), engine_.nodes().at(e.dst)))
                              : WireJson::array();
      edges.push_back(std::move(o));
    }
    WireJson out{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    out["preview"] = engine_.preview() ? preview_json(*engine_.preview()) : WireJson(nullptr);
    return out;
  }

  WireJson op_get_timings(const WireJson&) {
    return {{"last_preview", timings_json(engine_.last_timings())},
            {"last_request_ms", last_request_ms_},
            {"requests", requests_}};
  }

  WireJson op_preview_insert_node(const WireJson& p) {
    std::optional<double> radius;
    if (auto it = p.find("r"); it != p.end() && !it->is_null()) radius = number(p, "r");
    std::vector<NodeId> neighbors;
    if (auto it = p.find("neighbors"); it != p.end()) {
      if (!it->is_array()) throw Error(ErrorCode::invalid_argument, "parameter \"neighbors\" must be an array");
      for (const auto& v : *it) neighbors.push_back(NodeId{unsigned_id(v, "neighbors")});
    }
    std::string label;
    if (auto it = p.find("label"); it != p.end() && it->is_string()) label = it->get<std::string>();
    return preview_json(engine_.preview_insert_node(point(p), radius, neighbors, std::move(label)));
  }

  WireJson op_preview_move_node(const WireJson& p) {
    return preview_json(engine_.preview_move_node(NodeId{id(p, "node_id")}, point(p)));
  }

  WireJson op_preview_insert_edge(const WireJson& p) {
    return preview_json(engine_.preview_insert_edge(NodeId{id(p, "src")}, NodeId{id(p, "dst")}));
  }

  WireJson op_move_preview(const WireJson& p) { return preview_json(engine_.move_preview(id(p, "preview_id"), point(p))); }

  WireJson op_reroll(const WireJson& p) { return preview_json(engine_.reroll(id(p, "preview_id"))); }

  WireJson op_commit(const WireJson& p) {
    const std::uint64_t pid = id(p, "preview_id");
    const auto& pv = engine_.preview();
    WireJson out{{"preview_id", pid}};
    if (pv && pv->id == pid) {
      out["node_id"] = pv->node && pv->kind == PreviewKind::insert_node ? WireJson(pv->node->id.value) : WireJson(nullptr);
      WireJson edges = WireJson::array();
      for (const auto& r : pv->routes) edges.push_back(r.edge.value);
      out["edge_ids"] = std::move(edges);
    }
    engine_.commit(pid);
    return out;
  }

  WireJson op_cancel(const WireJson& p) {
    const std::uint64_t pid = id(p, "preview_id");
    engine_.cancel(pid);
    return {{"preview_id", pid}};
  }

  WireJson op_delete_node(const WireJson& p) {
    const std::uint64_t nid = id(p, "node_id");
    engine_.delete_node(NodeId{nid});
    return {{"node_id", nid}};
  }

  WireJson op_delete_edge(const WireJson& p) {
    const std::uint64_t eid = id(p, "edge_id");
    engine_.delete_edge(GraphEdgeId{eid});
    return {{"edge_id", eid}};
  }

  // Preview routes attach to the staged node of the preview.
  const NodeDisc& disc(NodeId id) const {
    const auto& pv = engine_.preview();
    if (pv && pv->node && pv->node->id == id) return *pv->node;
    return engine_.nodes().at(id);
  }

  std::vector<Point> clipped(const OrthoRoute& route, NodeId src, NodeId dst) const {
    return clip_to_endpoints(route, disc(src), disc(dst));
  }

  static WireJson points_json(const std::vector<Point>& pts) {
    WireJson out = WireJson::array();
    for (const Point& q : pts) out.push_back(WireJson::array({q.x, q.y}));
    return out;
  }

  static WireJson node_json(const NodeDisc& n) {
    return {{"id", n.id.value}, {"x", n.center.x}, {"y", n.center.y}, {"r", n.radius}, {"label", n.label}};
  }

  static WireJson timings_json(const PreviewTimings& t) {
    return {{"ovg_update_ms", t.ovg_update_ms},
            {"search_ms", t.search_ms},
            {"nudge_ms", t.nudge_ms},
            {"route_ms", t.route_ms()}};
  }

  WireJson preview_json(const EditPreview& pv) const {
    WireJson routes = WireJson::array();
    for (const SuggestedRoute& r : pv.routes) {
      WireJson o{{"edge_id", r.edge.value}, {"src", r.src.value}, {"dst", r.dst.value},
                 {"outcome", outcome_name(r.search.outcome)}};
      o["cost"] = r.search.found() ? WireJson(r.search.total_cost) : WireJson(nullptr);
      o["bends"] = r.search.bends;
      o["expanded_states"] = r.search.expanded_states;
      o["search_ms"] = std::chrono::duration<double, std::milli>(r.search.elapsed).count();
      o["offset"] = WireJson::array({r.offset.dx, r.offset.dy});
      o["points"] = r.search.found() ? points_json(clipped(r.route, r.src, r.dst)) : WireJson::array();
      routes.push_back(std::move(o));
    }
    WireJson out{{"preview_id", pv.id}, {"kind", preview_kind_name(pv.kind)}};
    out["node"] = pv.node ? node_json(*pv.node) : WireJson(nullptr);
    out["routes"] = std::move(routes);
    out["all_found"] = pv.all_found();
    out["timings"] = timings_json(pv.timings);
    return out;
  }

  EngineConfig config_;
  Engine engine_;
  double last_request_ms_ = 0.0;
  std::uint64_t requests_ = 0;
};

}  // namespace ortho

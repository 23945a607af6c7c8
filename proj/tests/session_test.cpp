#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "ortho/server.hpp"
#include "ortho/session.hpp"

using namespace ortho;

namespace {

std::vector<std::string> lines_of(const std::string& name) {
  std::ifstream in(std::string(ORTHO_TEST_DATA_DIR) + "/" + name);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

EngineConfig config() {
  EngineConfig c;
  c.max_workers = 1;
  c.seed = 11;
  return c;
}

WireJson call(Session& s, const std::string& op, WireJson params = WireJson::object(), WireJson id = 1) {
  WireRequest req;
  req.id = id;
  req.op = op;
  req.params = std::move(params);
  const WireResponse res = parse_response(s.handle_line(serialize_request(req)));
  EXPECT_EQ(res.id, id);
  return res.ok ? WireJson{{"ok", res.payload}} : WireJson{{"error", res.error_code}};
}

WireJson ok(Session& s, const std::string& op, WireJson params = WireJson::object()) {
  WireJson r = call(s, op, std::move(params));
  EXPECT_TRUE(r.contains("ok")) << op << " failed: " << r.dump();
  return r.value("ok", WireJson::object());
}

std::string error_of(Session& s, const std::string& op, WireJson params = WireJson::object()) {
  return call(s, op, std::move(params)).value("error", std::string("<ok>"));
}

std::string sample(const char* name) { return std::string(ORTHO_SAMPLES_DIR) + "/" + name; }

// First free spot on a coarse grid.
Point free_spot(const Engine& e) {
  for (double y = -400; y <= 400; y += 10) {
    for (double x = -400; x <= 400; x += 10) {
      if (e.placement_free({x, y}, e.config().default_radius)) return {x, y};
    }
  }
  return {1e4, 1e4};
}

}  // namespace

TEST(Wire, FixtureRequestsRoundTrip) {
  const auto lines = lines_of("wire_requests.jsonl");
  ASSERT_GE(lines.size(), 13u);
  for (const auto& line : lines) EXPECT_EQ(serialize_request(parse_request(line)), line);
}

TEST(Wire, FixtureResponsesRoundTrip) {
  const auto lines = lines_of("wire_responses.jsonl");
  ASSERT_GE(lines.size(), 5u);
  for (const auto& line : lines) EXPECT_EQ(serialize_response(parse_response(line)), line);
}

TEST(Wire, MissingParamsDefaultToEmpty) {
  const WireRequest r = parse_request(R"({"op":"get_layout","version":"v1","id":3})");
  EXPECT_EQ(r.params, WireJson::object());
  EXPECT_EQ(serialize_request(r), R"({"version":"v1","id":3,"op":"get_layout","params":{}})");
}

TEST(Session, EmptyLayout) {
  Session s(config());
  const WireJson p = ok(s, "get_layout");
  EXPECT_TRUE(p["nodes"].empty());
  EXPECT_TRUE(p["edges"].empty());
  EXPECT_TRUE(p["preview"].is_null());
}

TEST(Session, ProtocolErrorsEchoTheId) {
  Session s(config());
  auto res = [&](std::string_view line) { return parse_response(s.handle_line(line)); };
  auto r = res("not json");
  EXPECT_EQ(r.error_code, "parse-error");
  EXPECT_TRUE(r.id.is_null());
  r = res(R"([1,2])");
  EXPECT_EQ(r.error_code, "parse-error");
  r = res(R"({"version":"v1","id":5,"op":"fly"})");
  EXPECT_EQ(r.error_code, "unknown-op");
  EXPECT_EQ(r.id, 5);
  r = res(R"({"id":6,"op":"get_layout"})");
  EXPECT_EQ(r.error_code, "unsupported-version");
  EXPECT_EQ(r.id, 6);
  r = res(R"({"version":"v2","id":7,"op":"get_layout"})");
  EXPECT_EQ(r.error_code, "unsupported-version");
  r = res(R"({"version":"v1","id":8,"op":3})");
  EXPECT_EQ(r.error_code, "parse-error");
  r = res(R"({"version":"v1","id":9,"op":"get_layout","params":[]})");
  EXPECT_EQ(r.error_code, "parse-error");
  EXPECT_EQ(r.id, 9);
}

TEST(Session, EngineErrorsPassThrough) {
  Session s(config());
  ok(s, "load_graph", {{"path", sample("graph50.json")}});
  const auto& n = s.engine().nodes().begin()->second;
  EXPECT_EQ(error_of(s, "preview_insert_node", {{"x", n.center.x}, {"y", n.center.y}, {"neighbors", WireJson::array()}}),
            "placement-occupied");
  EXPECT_EQ(error_of(s, "preview_insert_node", {{"x", "1"}, {"y", 0}}), "invalid-argument");
  EXPECT_EQ(error_of(s, "preview_insert_edge", {{"src", 1}, {"dst", 999}}), "unknown-id");
  EXPECT_EQ(error_of(s, "delete_node", {{"node_id", -1}}), "invalid-argument");
  EXPECT_EQ(error_of(s, "commit", {{"preview_id", 42}}), "unknown-preview");
  EXPECT_EQ(error_of(s, "load_graph", {{"document", {{"version", "v9"}}}}), "document-parse");
  EXPECT_EQ(error_of(s, "load_graph"), "invalid-argument");
  const Point p = free_spot(s.engine());
  const WireJson pv = ok(s, "preview_insert_node", {{"x", p.x}, {"y", p.y}, {"neighbors", {1}}});
  EXPECT_EQ(error_of(s, "preview_insert_edge", {{"src", 1}, {"dst", 2}}), "open-preview-exists");
  ok(s, "cancel", {{"preview_id", pv["preview_id"]}});
}

TEST(Session, LoadRoutesMissingEdges) {
  Session s(config());
  const WireJson p = ok(s, "load_graph", {{"path", sample("graph50_unrouted.json")}});
  EXPECT_EQ(p["node_count"], 50);
  EXPECT_EQ(p["edge_count"], 96);
  EXPECT_EQ(p["routing"]["found"], 96);
  EXPECT_EQ(p["routing"]["kept"], 0);
  const WireJson again = ok(s, "load_graph", {{"document", ok(s, "save_graph")["document"]}});
  EXPECT_EQ(again["routing"]["kept"], 96);
}

TEST(Session, PreviewPayloadCarriesClippedGeometry) {
  Session s(config());
  ok(s, "load_graph", {{"path", sample("graph50.json")}});
  const Point p = free_spot(s.engine());
  const WireJson pv = ok(s, "preview_insert_node", {{"x", p.x}, {"y", p.y}, {"r", 8}, {"neighbors", {1, 2}}});
  EXPECT_EQ(pv["kind"], "insert_node");
  EXPECT_EQ(pv["node"]["r"], 8.0);
  ASSERT_EQ(pv["routes"].size(), 2u);
  for (const auto& r : pv["routes"]) {
    ASSERT_EQ(r["outcome"], "found");
    const auto& pts = r["points"];
    ASSERT_GE(pts.size(), 2u);
    const NodeDisc& dst = s.engine().nodes().at(NodeId{r["dst"].get<std::uint64_t>()});
    const double dx = pts[0][0].get<double>() - p.x, dy = pts[0][1].get<double>() - p.y;
    EXPECT_NEAR(std::hypot(dx, dy), 8.0, 1e-9);
    const auto& last = pts[pts.size() - 1];
    EXPECT_NEAR(std::hypot(last[0].get<double>() - dst.center.x, last[1].get<double>() - dst.center.y), dst.radius,
                1e-9);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      EXPECT_TRUE(pts[i][0] == pts[i + 1][0] || pts[i][1] == pts[i + 1][1]);
    }
  }
  const WireJson layout = ok(s, "get_layout");
  EXPECT_EQ(layout["preview"], pv);
  EXPECT_EQ(layout["nodes"].size(), 50u);
  const WireJson t = ok(s, "get_timings");
  EXPECT_EQ(t["last_preview"], pv["timings"]);
  EXPECT_EQ(t["requests"], 3);  // handled before this one
}

TEST(Session, ScriptedSessionSavesAndReloadsIdentically) {
  Session s(config());
  ok(s, "load_graph", {{"path", sample("graph50.json")}});
  const Point p = free_spot(s.engine());
  WireJson pv = ok(s, "preview_insert_node", {{"x", p.x}, {"y", p.y}, {"label", "new"}, {"neighbors", {1, 2, 3, 4, 5}}});
  ASSERT_TRUE(pv["all_found"].get<bool>());
  const WireJson rerolled = ok(s, "reroll", {{"preview_id", pv["preview_id"]}});
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(rerolled["routes"][i]["cost"], pv["routes"][i]["cost"]);
  }
  EXPECT_NE(rerolled["routes"], pv["routes"]);
  const WireJson committed = ok(s, "commit", {{"preview_id", pv["preview_id"]}});
  EXPECT_EQ(committed["node_id"], 51);
  EXPECT_EQ(committed["edge_ids"].size(), 5u);

  const auto path = std::filesystem::temp_directory_path() / "ortho_session_saved.json";
  const WireJson saved = ok(s, "save_graph", {{"path", path.string()}});
  EXPECT_EQ(parse_document(read_text_file(path)), document_from_json(nlohmann::json::parse(saved["document"].dump())));

  // Saved coordinates are rounded, so the reloaded layout is compared with
  // the saved document and with a second reload.
  Session t(config());
  const WireJson loaded = ok(t, "load_graph", {{"path", path.string()}});
  EXPECT_EQ(loaded["node_count"], 51);
  EXPECT_EQ(loaded["edge_count"], 101);
  EXPECT_EQ(loaded["routing"]["kept"], 101);
  EXPECT_EQ(ok(t, "save_graph")["document"], saved["document"]);
  const WireJson layout = ok(t, "get_layout");
  ASSERT_EQ(layout["nodes"].size(), 51u);
  for (std::size_t i = 0; i < 51; ++i) {
    const auto& a = layout["nodes"][i];
    const auto& b = saved["document"]["nodes"][i];
    EXPECT_EQ(a["id"], b["id"]);
    EXPECT_EQ(a["x"], b["x"]);
    EXPECT_EQ(a["y"], b["y"]);
  }
  EXPECT_EQ(layout["edges"].size(), 101u);
  Session u(config());
  ok(u, "load_graph", {{"document", saved["document"]}});
  EXPECT_EQ(ok(u, "get_layout"), layout);
  EXPECT_EQ(u.engine().ovg().debug_dump(), t.engine().ovg().debug_dump());
  EXPECT_EQ(u.engine().index().debug_dump(), t.engine().index().debug_dump());
  std::filesystem::remove(path);
}

TEST(Session, MovePreviewAndDeletes) {
  Session s(config());
  ok(s, "load_graph", {{"path", sample("graph50.json")}});
  const auto& e = s.engine().edges().begin()->second;
  const std::uint64_t node = e.src.value;
  const Point p = free_spot(s.engine());
  const WireJson pv = ok(s, "preview_move_node", {{"node_id", node}, {"x", p.x}, {"y", p.y}});
  EXPECT_EQ(pv["kind"], "move_node");
  EXPECT_FALSE(pv["routes"].empty());
  ok(s, "cancel", {{"preview_id", pv["preview_id"]}});
  const std::size_t edges = s.engine().edges().size();
  ok(s, "delete_edge", {{"edge_id", e.id.value}});
  EXPECT_EQ(s.engine().edges().size(), edges - 1);
  EXPECT_EQ(error_of(s, "delete_edge", {{"edge_id", 100000}}), "unknown-id");
  ok(s, "delete_node", {{"node_id", node}});
  EXPECT_EQ(s.engine().nodes().size(), 49u);
  auto it = s.engine().nodes().begin();
  const std::uint64_t u = it->first.value, v = (++it)->first.value;
  const WireJson ep = ok(s, "preview_insert_edge", {{"src", u}, {"dst", v}});
  EXPECT_EQ(ep["kind"], "insert_edge");
  EXPECT_TRUE(ep["node"].is_null());
}

namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
using tcp = asio::ip::tcp;

std::string read_line(tcp::socket& sock, std::string& pending) {
  for (;;) {
    if (auto nl = pending.find('\n'); nl != std::string::npos) {
      std::string line = pending.substr(0, nl);
      pending.erase(0, nl + 1);
      return line;
    }
    char chunk[4096];
    const std::size_t n = sock.read_some(asio::buffer(chunk));
    pending.append(chunk, n);
  }
}

}  // namespace

TEST(Transport, LinesOverTcpKeepOrder) {
  SessionServer server(config());
  server.start();
  asio::io_context ioc;
  tcp::socket a(ioc), b(ioc);
  a.connect({asio::ip::make_address("127.0.0.1"), server.port()});
  b.connect({asio::ip::make_address("127.0.0.1"), server.port()});

  std::string batch;
  batch += R"({"version":"v1","id":1,"op":"load_graph","params":{"path":")" + sample("graph50.json") + "\"}}\n";
  batch += "{\"version\":\"v1\",\"id\":2,\"op\":\"get_layout\",\"params\":{}}\r\n";
  batch += "\n";
  batch += "garbage\n";
  batch += R"({"version":"v1","id":4,"op":"get_timings"})" "\n";
  asio::write(a, asio::buffer(batch));
  std::string pa;
  const auto r1 = parse_response(read_line(a, pa));
  EXPECT_EQ(r1.id, 1);
  EXPECT_TRUE(r1.ok);
  const auto r2 = parse_response(read_line(a, pa));
  EXPECT_EQ(r2.id, 2);
  EXPECT_EQ(r2.payload["nodes"].size(), 50u);
  const auto r3 = parse_response(read_line(a, pa));
  EXPECT_EQ(r3.error_code, "parse-error");
  const auto r4 = parse_response(read_line(a, pa));
  EXPECT_EQ(r4.id, 4);

  // The second connection has its own session.
  asio::write(b, asio::buffer(std::string("{\"version\":\"v1\",\"id\":9,\"op\":\"get_layout\"}\n")));
  std::string pb;
  const auto rb = parse_response(read_line(b, pb));
  EXPECT_EQ(rb.id, 9);
  EXPECT_TRUE(rb.payload["nodes"].empty());
  server.stop();
}

TEST(Transport, WebSocketTextFrames) {
  SessionServer server(config());
  server.start();
  asio::io_context ioc;
  beast::websocket::stream<tcp::socket> ws(ioc);
  ws.next_layer().connect({asio::ip::make_address("127.0.0.1"), server.port()});
  ws.handshake("127.0.0.1", "/");
  ws.text(true);
  for (int i = 1; i <= 3; ++i) {
    ws.write(asio::buffer(std::string(R"({"version":"v1","id":)") + std::to_string(i) +
                          R"(,"op":"get_layout","params":{}})"));
    beast::flat_buffer buf;
    ws.read(buf);
    const auto r = parse_response(beast::buffers_to_string(buf.data()));
    EXPECT_EQ(r.id, i);
    EXPECT_TRUE(r.ok);
  }
  ws.close(beast::websocket::close_code::normal);
  server.stop();
}

TEST(Transport, StopWithOpenConnections) {
  auto server = std::make_unique<SessionServer>(config());
  server->start();
  asio::io_context ioc;
  tcp::socket a(ioc);
  a.connect({asio::ip::make_address("127.0.0.1"), server->port()});
  asio::write(a, asio::buffer(std::string("{\"version\":\"v1\",\"id\":1,\"op\":\"get_layout\"}\n")));
  std::string pa;
  EXPECT_TRUE(parse_response(read_line(a, pa)).ok);
  server.reset();
  boost::system::error_code ec;
  char c;
  a.read_some(asio::buffer(&c, 1), ec);
  EXPECT_TRUE(ec);
}

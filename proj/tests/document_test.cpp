#include <gtest/gtest.h>

#include "ortho/document.hpp"

using namespace ortho;

namespace {

ErrorCode code_of(std::string_view text) {
  try {
    parse_document(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST(Document, SerializesInFixedOrder) {
  GraphDocument doc{5, 1, {{NodeId{1}, {0, 0.1 + 0.2}, 10, "a"}, {NodeId{2}, {100, 0}, 4, "b"}}, {}};
  doc.edges.push_back({3, NodeId{1}, NodeId{2}, OrthoRoute{{1, 1}, {101, 1}}, NudgeOffset{1, 1}});
  doc.edges.push_back({4, NodeId{2}, NodeId{1}, std::nullopt, std::nullopt});
  const std::string text = serialize_document(doc);
  EXPECT_EQ(text,
            "{\n"
            "  \"version\": \"v1\",\n"
            "  \"config\": {\n    \"delta\": 5.0,\n    \"mu\": 1.0\n  },\n"
            "  \"nodes\": [\n"
            "    {\n      \"id\": 1,\n      \"x\": 0.0,\n      \"y\": 0.3,\n      \"r\": 10.0,\n      \"label\": \"a\"\n    },\n"
            "    {\n      \"id\": 2,\n      \"x\": 100.0,\n      \"y\": 0.0,\n      \"r\": 4.0,\n      \"label\": \"b\"\n    }\n"
            "  ],\n"
            "  \"edges\": [\n"
            "    {\n      \"id\": 3,\n      \"src\": 1,\n      \"dst\": 2,\n"
            "      \"route\": [\n        [\n          1.0,\n          1.0\n        ],\n"
            "        [\n          101.0,\n          1.0\n        ]\n      ],\n"
            "      \"offset\": [\n        1.0,\n        1.0\n      ]\n    },\n"
            "    {\n      \"id\": 4,\n      \"src\": 2,\n      \"dst\": 1\n    }\n"
            "  ]\n"
            "}\n");
  const GraphDocument back = parse_document(text);
  EXPECT_EQ(back.nodes[0].center.y, 0.3);
  EXPECT_EQ(back.edges, doc.edges);
  EXPECT_EQ(serialize_document(back), text);
}

TEST(Document, RoundsToNineDigits) {
  EXPECT_EQ(round_coordinate(1.0000000004), 1.0);
  EXPECT_EQ(round_coordinate(-2.1234567896), -2.12345679);
  EXPECT_EQ(round_coordinate(-1e-12), 0.0);
}

TEST(Document, RejectsMalformedInput) {
  EXPECT_EQ(code_of("not json"), ErrorCode::document_parse);
  EXPECT_EQ(code_of(R"({"nodes":[]})"), ErrorCode::document_parse);
  EXPECT_EQ(code_of(R"({"version":"v2","nodes":[]})"), ErrorCode::document_parse);
  EXPECT_EQ(code_of(R"({"version":"v1","nodes":[{"id":1,"x":0,"y":0,"r":0}]})"), ErrorCode::document_parse);
  EXPECT_EQ(code_of(R"({"version":"v1","nodes":[{"id":1,"x":0,"y":0,"r":1},{"id":1,"x":9,"y":0,"r":1}]})"),
            ErrorCode::document_parse);
  EXPECT_EQ(code_of(R"({"version":"v1","nodes":[{"id":1,"x":0,"y":0,"r":1}],"edges":[{"id":1,"src":1,"dst":2}]})"),
            ErrorCode::document_parse);
  EXPECT_EQ(code_of(R"({"version":"v1","nodes":[{"id":1,"x":0,"y":0,"r":1},{"id":2,"x":9,"y":9,"r":1}],
                        "edges":[{"id":1,"src":1,"dst":2,"route":[[0,0],[9,9]]}]})"),
            ErrorCode::document_parse);
  EXPECT_EQ(code_of(R"({"version":"v1","config":{"delta":1,"mu":2},"nodes":[]})"), ErrorCode::document_parse);
  const GraphDocument ok = parse_document(R"({"version":"v1","nodes":[{"id":4,"x":1.5,"y":-2,"r":3}]})");
  EXPECT_EQ(ok.delta, 5);
  EXPECT_EQ(ok.mu, 1);
  EXPECT_EQ(ok.nodes[0].label, "");
}

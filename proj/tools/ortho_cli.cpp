#include <chrono>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ortho/bench.hpp"
#include "ortho/document.hpp"
#include "ortho/engine.hpp"
#include "ortho/server.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct CommonFlags {
  double delta = 5.0;
  double mu = 1.0;
  double bend_penalty = 20.0;
  double time_budget_ms = 500.0;
  std::uint64_t seed = 1;

  ortho::EngineConfig config() const {
    ortho::EngineConfig c;
    c.delta = delta;
    c.mu = mu;
    c.bend_penalty = bend_penalty;
    c.time_budget = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::duration<double, std::milli>(time_budget_ms));
    c.seed = seed;
    return c;
  }
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--delta", f.delta, "Safety gap around node boxes")->capture_default_str();
  app->add_option("--mu", f.mu, "Route clearance from node circles")->capture_default_str();
  app->add_option("--bend-penalty", f.bend_penalty, "Cost of one bend")->capture_default_str();
  app->add_option("--time-budget-ms", f.time_budget_ms, "Per-route search budget")->capture_default_str();
  app->add_option("--seed", f.seed, "Nudge / benchmark seed")->capture_default_str();
}

void print_summary(const ortho::RoutingSummary& s) {
  std::fprintf(stderr, "kept %zu, found %zu, no_route %zu, timed_out %zu\n", s.kept, s.found, s.no_route,
               s.timed_out);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental orthogonal edge router"};
  app.require_subcommand(1);
  CommonFlags flags;

  auto* bench = app.add_subcommand("bench", "Incremental insertion benchmark, CSV out");
  add_common(bench, flags);
  std::size_t max_nodes = 300;
  std::size_t runs = 5;
  std::string csv_path;
  std::string layout_path;
  bench->add_option("--max-nodes", max_nodes, "Nodes per run")->capture_default_str();
  bench->add_option("--runs", runs, "Runs, seeded --seed, --seed+1, ...")->capture_default_str();
  bench->add_option("--csv", csv_path, "CSV output (default stdout)");
  bench->add_option("--layout", layout_path, "Write the last run's final layout here");

  auto* route = app.add_subcommand("route", "Route edges without stored routes");
  add_common(route, flags);
  std::string in_path, out_path;
  route->add_option("input", in_path, "Graph document")->required();
  route->add_option("output", out_path, "Routed graph document")->required();

  auto* serve = app.add_subcommand("serve", "Session service over TCP lines and WebSocket");
  add_common(serve, flags);
  std::uint16_t port = 7878;
  std::string address = "127.0.0.1";
  serve->add_option("--port", port, "Listen port")->capture_default_str();
  serve->add_option("--address", address, "Listen address")->capture_default_str();

  auto* dump = app.add_subcommand("dump-ovg", "Print the OVG of a graph document");
  std::string dump_path;
  dump->add_option("input", dump_path, "Graph document")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*bench) {
      if (runs == 0) throw ortho::Error(ortho::ErrorCode::invalid_argument, "--runs must be positive");
      std::vector<std::uint64_t> seeds(runs);
      std::iota(seeds.begin(), seeds.end(), flags.seed);
      std::vector<ortho::GraphDocument> layouts;
      const auto records = ortho::run_scaling_benchmark(max_nodes, seeds, flags.config(), &layouts);
      const std::string csv = ortho::emit_csv(records);
      if (csv_path.empty()) {
        std::fwrite(csv.data(), 1, csv.size(), stdout);
      } else {
        ortho::write_text_file(csv_path, csv);
      }
      if (!layout_path.empty()) ortho::write_text_file(layout_path, ortho::serialize_document(layouts.back()));
      const double lo = ortho::median_route_time(records, 50, 65);
      const double hi = ortho::median_route_time(records, 200, 300);
      std::fprintf(stderr, "median route ms: N in [50,65] %.4f, N in [200,300] %.4f\n", lo, hi);
    } else if (*route) {
      print_summary(ortho::route_file(in_path, out_path, flags.config()));
    } else if (*serve) {
      ortho::SessionServer server(flags.config(), port, address);
      server.start();
      std::fprintf(stderr, "listening on %s:%u\n", address.c_str(), static_cast<unsigned>(server.port()));
      server.wait();
    } else if (*dump) {
      ortho::Engine engine(flags.config());
      engine.load(ortho::parse_document(ortho::read_text_file(dump_path)));
      std::cout << engine.ovg().debug_dump();
    }
  } catch (const ortho::Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(ortho::code_name(e.code())).c_str(), e.what());
    return e.code() == ortho::ErrorCode::invalid_argument ? kExitUsage : kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}

#include <csignal>
#include <cstdint>
#include <iostream>
#include <random>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "modelsync/canonical_json.hpp"
#include "modelsync/net/ws_client.hpp"
#include "modelsync/net/ws_server.hpp"
#include "modelsync/persistence.hpp"
#include "modelsync/scenario.hpp"
#include "modelsync/sim.hpp"

namespace {

using namespace modelsync;
using nlohmann::json;

enum Exit : int { kOk = 0, kUsage = 1, kFormat = 2, kConnection = 3 };

int error(int code, const std::string& message) {
  std::cerr << "error: " << message << '\n';
  return code;
}

std::optional<json> read_json(const std::string& path, std::string& failure) {
  auto text = persistence::read_file(path);
  if (!text) {
    failure = text.error().reason;
    return std::nullopt;
  }
  try {
    return json::parse(*text);
  } catch (const json::parse_error& e) {
    failure = path + ": " + e.what();
    return std::nullopt;
  }
}

struct ServeArgs {
  std::uint16_t port = 7420;
  std::size_t max_members = 16;
  double rate_limit = 20.0;
};

int serve(const ServeArgs& args) {
  net::ServeOptions options;
  options.port = args.port;
  options.config.max_members = args.max_members;
  options.config.movement_rate_limit = args.rate_limit;
  options.config.presence_rate_limit = args.rate_limit;
  options.seed = std::random_device{}() ^ (std::uint64_t(std::random_device{}()) << 32);
  if (!options.config.valid()) return error(kUsage, "--max-members and --rate-limit must be positive");

  // Signals are taken synchronously by a watcher thread.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  auto listening = net::WsServer::listen(options);
  if (!listening) return error(kConnection, listening.error().reason);
  auto& server = *listening.value();
  server.set_log_sink([](const json& record) { std::cerr << canonical_dump(record) << '\n'; });
  std::cerr << canonical_dump(json{{"event", "listening"},
                                   {"port", server.port()},
                                   {"session", server.session().state().session.to_string()}})
            << std::endl;

  std::thread watcher([&server, signals] {
    int received = 0;
    sigwait(&signals, &received);
    server.stop();
  });
  server.run();
  watcher.detach();
  std::cerr << canonical_dump(json{{"event", "stopped"}, {"last_seq", server.session().last_seq()}}) << '\n';
  return kOk;
}

int bot(const std::string& url, const std::string& script_path, const std::string& name) {
  auto endpoint = net::parse_url(url);
  if (!endpoint) return error(kUsage, endpoint.error().reason);
  std::string failure;
  auto doc = read_json(script_path, failure);
  if (!doc) return error(kFormat, failure);
  auto script = sim::bot_script_from_json(*doc);
  if (!script) return error(kFormat, script.error().reason);
  if (!name.empty()) script->name = name;
  if (auto status = sim::validate(*script); !status) return error(kFormat, status.error().reason);

  auto result = net::run_live_bot(*endpoint, std::move(script).value());
  if (!result) return error(kConnection, result.error().reason);
  const auto& stats = result->stats;
  std::cout << canonical_dump(json{{"last_applied_seq", result->last_applied_seq},
                                   {"events_submitted", stats.events_submitted},
                                   {"nacks", stats.nacks},
                                   {"grants", stats.grants},
                                   {"denies", stats.denies},
                                   {"movement_sent", stats.movement_sent},
                                   {"presence_sent", stats.presence_sent},
                                   {"order_violations", stats.order_violations}})
            << '\n';
  return kOk;
}

int simulate(const std::string& scenario_path, const sim::NetConfig& net) {
  if (!net.valid()) return error(kUsage, "--latency and --jitter must be >= 0 and --loss in [0, 1]");
  std::string failure;
  auto doc = read_json(scenario_path, failure);
  if (!doc) return error(kFormat, failure);
  auto scenario = sim::scenario_from_json(*doc);
  if (!scenario) return error(kFormat, scenario.error().reason);
  auto report = sim::run(*scenario, net);
  if (!report) return error(kFormat, report.error().reason);
  std::cout << canonical_dump(report->to_json()) << '\n';
  return kOk;
}

int export_snapshot(const std::string& path, const std::string& format) {
  auto bytes = persistence::read_file(path);
  if (!bytes) return error(kFormat, bytes.error().reason);
  auto doc = persistence::load_snapshot(*bytes);
  if (!doc) return error(kFormat, doc.error().reason);
  if (format == "plantuml") {
    std::cout << persistence::export_plantuml(doc->model);
  } else {
    std::cout << persistence::export_json(doc->model) << '\n';
  }
  return kOk;
}

int snapshot(const std::string& url, const std::string& out) {
  auto endpoint = net::parse_url(url);
  if (!endpoint) return error(kUsage, endpoint.error().reason);
  auto welcome = net::fetch_welcome(*endpoint, "snapshot");
  if (!welcome) return error(kConnection, welcome.error().reason);
  const auto doc = persistence::snapshot_of(*welcome);
  if (auto written = persistence::write_file(out, persistence::save_snapshot(doc)); !written) {
    return error(kFormat, written.error().reason);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative class-diagram session server, bots and tools"};
  app.require_subcommand(1);

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Host a session over WebSocket");
  serve_cmd->add_option("--port", serve_args.port, "TCP port (0 picks a free one)")->capture_default_str();
  serve_cmd->add_option("--max-members", serve_args.max_members, "Member limit")->capture_default_str();
  serve_cmd->add_option("--rate-limit", serve_args.rate_limit, "Movement/presence packets per second")
      ->capture_default_str();

  std::string server_url;
  std::string script_path;
  std::string bot_name;
  auto* bot_cmd = app.add_subcommand("bot", "Run a scripted bot against a live server");
  bot_cmd->add_option("--server", server_url, "ws://host:port")->required();
  bot_cmd->add_option("--script", script_path, "Bot script JSON")->required();
  bot_cmd->add_option("--name", bot_name, "Display name (overrides the script)");

  std::string scenario_path;
  sim::NetConfig net;
  auto* sim_cmd = app.add_subcommand("sim", "Simulate a scenario and print the report");
  sim_cmd->add_option("--scenario", scenario_path, "Scenario JSON")->required();
  sim_cmd->add_option("--latency", net.base_latency_ms, "Base one-way latency in ms")->capture_default_str();
  sim_cmd->add_option("--jitter", net.jitter_ms, "Uniform jitter bound in ms")->capture_default_str();
  sim_cmd->add_option("--loss", net.movement_loss_prob, "Movement/presence loss probability")->capture_default_str();
  sim_cmd->add_option("--seed", net.seed, "Random seed")->capture_default_str();

  std::string snapshot_path;
  std::string format = "plantuml";
  auto* export_cmd = app.add_subcommand("export", "Render a snapshot file");
  export_cmd->add_option("--snapshot", snapshot_path, "Snapshot JSON")->required();
  export_cmd->add_option("--format", format, "plantuml or json")
      ->check(CLI::IsMember({"plantuml", "json"}))
      ->capture_default_str();

  std::string out_path;
  auto* snapshot_cmd = app.add_subcommand("snapshot", "Save the current model of a live session");
  snapshot_cmd->add_option("--server", server_url, "ws://host:port")->required();
  snapshot_cmd->add_option("--out", out_path, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  if (*serve_cmd) return serve(serve_args);
  if (*bot_cmd) return bot(server_url, script_path, bot_name);
  if (*sim_cmd) return simulate(scenario_path, net);
  if (*export_cmd) return export_snapshot(snapshot_path, format);
  if (*snapshot_cmd) return snapshot(server_url, out_path);
  return kUsage;
}

// Runs the installed command-line tool as a child process.
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "modelsync/persistence.hpp"
#include "modelsync/scenario.hpp"
#include "modelsync/sim.hpp"

using namespace modelsync;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  const auto out_path = std::filesystem::temp_directory_path() / "modelsync_cli_out.txt";
  const std::string command = std::string(MODELSYNC_CLI) + " " + args + " >" + out_path.string() + " 2>/dev/null";
  const int status = std::system(command.c_str());
  Run run;
  run.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  run.out = ss.str();
  return run;
}

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << body;
  return path;
}

const std::string kFixture = std::string(MODELSYNC_SOURCE_DIR) + "/scenarios/five_class_split.json";

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli("").code == 1);
  CHECK(cli("frobnicate").code == 1);
  CHECK(cli("sim --latency 10").code == 1);
  CHECK(cli("sim --scenario " + kFixture + " --loss banana").code == 1);
  CHECK(cli("export --snapshot x --format svg").code == 1);
  CHECK(cli("serve --port 70000").code == 1);
  CHECK(cli("--help").code == 0);
}

TEST_CASE("sim prints a converged report") {
  auto run = cli("sim --scenario " + kFixture + " --latency 50 --jitter 10 --loss 0.1 --seed 7");
  REQUIRE(run.code == 0);
  const auto report = nlohmann::json::parse(run.out);
  CHECK(report.at("converged") == true);
  CHECK(report.at("events_broadcast") == 19);
  CHECK(report.at("order_violations") == 0);
  CHECK(report.contains("bytes_per_channel"));
  // Same seed, same bytes.
  CHECK(cli("sim --scenario " + kFixture + " --latency 50 --jitter 10 --loss 0.1 --seed 7").out == run.out);
}

TEST_CASE("sim format errors exit 2") {
  CHECK(cli("sim --scenario " + temp_file("bad_scenario.json", "{not json").string()).code == 2);
  CHECK(cli("sim --scenario " + temp_file("bad_bots.json", R"({"bots":[{"name":""}]})").string()).code == 2);
  CHECK(cli("sim --scenario /nonexistent/file.json").code == 2);
}

TEST_CASE("export formats") {
  auto scenario_text = persistence::read_file(kFixture);
  REQUIRE(scenario_text);
  auto scenario = sim::scenario_from_json(nlohmann::json::parse(*scenario_text));
  REQUIRE(scenario);
  sim::Simulator simulator(*scenario, sim::NetConfig{});
  simulator.run_to_quiescence();
  const auto doc = persistence::snapshot_of(simulator.session());
  const auto path = temp_file("five_class_snapshot.json", persistence::save_snapshot(doc));

  auto uml = cli("export --snapshot " + path.string() + " --format plantuml");
  REQUIRE(uml.code == 0);
  CHECK(uml.out.rfind("@startuml", 0) == 0);
  std::size_t classes = 0;
  std::istringstream lines(uml.out);
  for (std::string line; std::getline(lines, line);) classes += line.rfind("class ", 0) == 0;
  CHECK(classes == 5);

  auto json = cli("export --snapshot " + path.string() + " --format json");
  REQUIRE(json.code == 0);
  CHECK(json.out.find(persistence::export_json(doc.model)) != std::string::npos);

  auto future = nlohmann::json::parse(persistence::save_snapshot(doc));
  future["schema_version"] = 2;
  CHECK(cli("export --snapshot " + temp_file("v2.json", future.dump()).string() + " --format json").code == 2);
  CHECK(cli("export --snapshot " + temp_file("junk.json", "[]").string() + " --format json").code == 2);
}

TEST_CASE("snapshot against nothing exits 3") {
  const auto out = std::filesystem::temp_directory_path() / "never.json";
  CHECK(cli("snapshot --server ws://127.0.0.1:1 --out " + out.string()).code == 3);
  CHECK(cli("snapshot --server not-a-url --out " + out.string()).code == 1);
  const sim::BotScript script{"alice", 0.0, {sim::Action{0, sim::act::Join{}}}};
  const auto script_path = temp_file("bot_script.json", sim::to_json(script).dump());
  CHECK(cli("bot --server ws://127.0.0.1:1 --script " + script_path.string() + " --name alice").code == 3);
  CHECK(cli("bot --server ws://127.0.0.1:1 --script " + kFixture + " --name alice").code == 2);
}

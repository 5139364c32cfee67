#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

#include "modelsync/bot.hpp"
#include "modelsync/result.hpp"
#include "modelsync/scenario.hpp"
#include "modelsync/wire.hpp"

namespace modelsync::net {

struct Endpoint {
  std::string host;
  std::string port;
  std::string target = "/";
};

struct ConnectError {
  std::string reason;
};

// Accepts ws://host:port[/path] and host:port.
Result<Endpoint, ConnectError> parse_url(std::string_view url);

struct LiveBotOptions {
  // Once the script is done, wait this long for outstanding acks before leaving.
  std::chrono::milliseconds drain{2000};
  std::chrono::milliseconds connect_timeout{5000};
};

struct LiveBotResult {
  sim::BotDriver::Phase phase = sim::BotDriver::Phase::Idle;
  sim::BotStats stats;
  std::uint64_t last_applied_seq = 0;
  std::string model_bytes;  // canonical committed model when the bot stopped
};

// Drives a BotScript against a live server on the wall clock.
Result<LiveBotResult, ConnectError> run_live_bot(const Endpoint& endpoint, sim::BotScript script,
                                                 const LiveBotOptions& options = {});

// Joins, waits for Welcome, leaves.
Result<wire::msg::Welcome, ConnectError> fetch_welcome(const Endpoint& endpoint, std::string_view display_name,
                                                       std::chrono::milliseconds timeout = std::chrono::seconds(10));

}  // namespace modelsync::net

// Copyright 2026 The Ballbot Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Simulation service: HTTP endpoints for session management and one
// WebSocket channel per session at /session/<id>.
//
//   GET    /health              liveness and protocol version
//   GET    /session             list sessions
//   POST   /session             create {platform?, controller?, seed?}
//   GET    /session/<id>        session info, or WebSocket upgrade
//   GET    /session/<id>/log    recorded input log for replay
//   DELETE /session/<id>        stop and remove

#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ballbot/config.hpp"
#include "ballbot/service/session.hpp"

namespace ballbot::service {

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Request rejected with an HTTP status.
class HttpError : public std::runtime_error {
 public:
  HttpError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

/// One connected client: replies addressed to it plus its telemetry feed.
class Subscriber {
 public:
  explicit Subscriber(std::size_t depth) : telemetry(depth) {}
  void reply(std::string text);
  std::optional<std::string> next_reply();

  TelemetryQueue telemetry;

 private:
  std::mutex mu_;
  std::deque<std::string> replies_;
};

/// Owns a SimSession and the thread that paces it against the wall clock.
/// All session access happens on that thread; other threads post messages.
class SessionRunner {
 public:
  /// A non-empty `telemetry_log` receives every published frame as one JSON
  /// line, the format clients replay offline.
  SessionRunner(std::string id, SessionSettings settings, double realtime_factor,
                const std::filesystem::path& telemetry_log = {});
  ~SessionRunner();

  const std::string& id() const { return id_; }
  void post(nlohmann::ordered_json message, std::shared_ptr<Subscriber> from);
  void subscribe(std::shared_ptr<Subscriber> s);
  void unsubscribe(const std::shared_ptr<Subscriber>& s);
  void stop();
  bool stopped() const { return stopped_.load(); }
  nlohmann::ordered_json info() const;
  nlohmann::ordered_json input_log() const;

 private:
  void loop();
  void publish(const TelemetryFrame& f);

  std::string id_;
  SimSession session_;
  Pacer pacer_;
  std::atomic<bool> stopped_{false};

  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::pair<nlohmann::ordered_json, std::shared_ptr<Subscriber>>> inbox_;
  std::vector<std::shared_ptr<Subscriber>> subscribers_;
  nlohmann::ordered_json info_;  // refreshed by the loop
  nlohmann::ordered_json log_ = nlohmann::ordered_json::array();
  std::ofstream telemetry_log_;
  std::thread thread_;
};

class Server {
 public:
  Server(config::Document doc, config::ServiceSettings settings);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the listening socket; port 0 picks a free port. Throws BindError.
  unsigned short bind();
  /// Serves until stop() or, with `handle_signals`, SIGINT/SIGTERM.
  void run(bool handle_signals = false);
  void stop();
  unsigned short port() const { return port_; }
  /// Writes `<dir>/<session id>.jsonl` telemetry logs for new sessions.
  void set_telemetry_log_dir(std::filesystem::path dir) { log_dir_ = std::move(dir); }

  /// Session management shared by the HTTP handlers and tests.
  nlohmann::ordered_json create_session(const nlohmann::ordered_json& request);
  nlohmann::ordered_json list_sessions() const;
  bool delete_session(const std::string& id);
  std::shared_ptr<SessionRunner> find(const std::string& id) const;

  const config::ServiceSettings& settings() const { return settings_; }

 private:
  struct Impl;
  config::Document doc_;
  config::ServiceSettings settings_;
  std::unique_ptr<Impl> impl_;
  unsigned short port_ = 0;
  std::filesystem::path log_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<SessionRunner>> sessions_;
  std::uint64_t next_id_ = 1;
};

}  // namespace ballbot::service

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

// JSON wire protocol between the service and its clients. Every message is a
// JSON object carrying "type" and "proto_version".

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "ballbot/service/session.hpp"

namespace ballbot::service {

inline constexpr int kProtoVersion = 1;

/// Error codes carried by "error" messages.
namespace codes {
inline constexpr const char* kBadMessage = "bad_message";
inline constexpr const char* kVersionMismatch = "version_mismatch";
inline constexpr const char* kIllegalTransition = "illegal_transition";
inline constexpr const char* kParamRejected = "param_rejected";
inline constexpr const char* kOutOfRange = "out_of_range";
inline constexpr const char* kUnknownTrigger = "unknown_trigger";
inline constexpr const char* kInternal = "internal";
}  // namespace codes

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

enum class ControlAction { kStart, kPause, kReset, kSetParam, kPush, kTrigger };
std::string to_string(ControlAction a);

struct ClientMessage {
  enum class Type { kCommand, kControl } type = Type::kCommand;
  std::optional<std::int64_t> id;  // client reference echoed in the reply
  TeleopCommand command;
  ControlAction action = ControlAction::kStart;
  std::string key;  // set_param key or trigger name
  double value = 0.0;
  double fx = 0.0;
  double fy = 0.0;
  double duration = 0.0;
};

/// Validates and decodes a client message. Throws ProtocolError.
ClientMessage parse_client_message(const nlohmann::ordered_json& j);
ClientMessage parse_client_message(const std::string& text);

nlohmann::ordered_json ack_message(const ClientMessage& m, const nlohmann::ordered_json& body);
nlohmann::ordered_json error_message(const std::string& code, const std::string& detail,
                                     std::optional<std::int64_t> id = {});
nlohmann::ordered_json telemetry_message(const TelemetryFrame& f, const std::string& session);

}  // namespace ballbot::service

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

#include "ballbot/service/protocol.hpp"

#include <cmath>

namespace ballbot::service {

namespace {

using Json = nlohmann::ordered_json;

double number(const Json& j, const char* key, double fallback, bool required = false) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    if (required) throw ProtocolError(codes::kBadMessage, std::string("missing '") + key + "'");
    return fallback;
  }
  if (!it->is_number()) {
    throw ProtocolError(codes::kBadMessage, std::string("'") + key + "' must be a number");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) {
    throw ProtocolError(codes::kBadMessage, std::string("'") + key + "' must be finite");
  }
  return v;
}

std::string text(const Json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw ProtocolError(codes::kBadMessage, std::string("'") + key + "' must be a string");
  }
  return it->get<std::string>();
}

ControlAction parse_action(const std::string& s) {
  if (s == "start") return ControlAction::kStart;
  if (s == "pause") return ControlAction::kPause;
  if (s == "reset") return ControlAction::kReset;
  if (s == "set_param") return ControlAction::kSetParam;
  if (s == "push") return ControlAction::kPush;
  if (s == "trigger") return ControlAction::kTrigger;
  throw ProtocolError(codes::kBadMessage,
                      "unknown action '" + s +
                          "' (expected start, pause, reset, set_param, push or trigger)");
}

Json array3(const std::array<double, 3>& a) { return Json::array({a[0], a[1], a[2]}); }

Json plane(const PlaneFrame& p) {
  Json j;
  j["theta"] = p.theta;
  j["phi"] = p.phi;
  j["theta_dot"] = p.theta_dot;
  j["phi_dot"] = p.phi_dot;
  return j;
}

}  // namespace

std::string to_string(ControlAction a) {
  switch (a) {
    case ControlAction::kStart:
      return "start";
    case ControlAction::kPause:
      return "pause";
    case ControlAction::kReset:
      return "reset";
    case ControlAction::kSetParam:
      return "set_param";
    case ControlAction::kPush:
      return "push";
    case ControlAction::kTrigger:
      return "trigger";
  }
  return "unknown";
}

ClientMessage parse_client_message(const Json& j) {
  if (!j.is_object()) throw ProtocolError(codes::kBadMessage, "message must be a JSON object");
  ClientMessage m;
  if (const auto it = j.find("id"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ProtocolError(codes::kBadMessage, "'id' must be an integer");
    m.id = it->get<std::int64_t>();
  }
  const auto ver = j.find("proto_version");
  if (ver == j.end()) throw ProtocolError(codes::kBadMessage, "missing 'proto_version'");
  if (!ver->is_number_integer() || ver->get<std::int64_t>() != kProtoVersion) {
    throw ProtocolError(codes::kVersionMismatch,
                        "unsupported proto_version " + ver->dump() + ", server speaks " +
                            std::to_string(kProtoVersion));
  }
  const std::string type = text(j, "type");
  if (type == "command") {
    m.type = ClientMessage::Type::kCommand;
    m.command.v = number(j, "v", 0.0, true);
    if (j.contains("heading_deg")) {
      m.command.heading = number(j, "heading_deg", 0.0) * M_PI / 180.0;
    } else {
      m.command.heading = number(j, "heading", 0.0);
    }
    m.command.yaw_rate = number(j, "yaw_rate", 0.0);
  } else if (type == "control") {
    m.type = ClientMessage::Type::kControl;
    m.action = parse_action(text(j, "action"));
    switch (m.action) {
      case ControlAction::kSetParam:
        m.key = text(j, "key");
        m.value = number(j, "value", 0.0, true);
        break;
      case ControlAction::kPush:
        m.fx = number(j, "fx", 0.0);
        m.fy = number(j, "fy", 0.0);
        m.duration = number(j, "duration", 0.0, true);
        break;
      case ControlAction::kTrigger:
        m.key = text(j, "name");
        break;
      default:
        break;
    }
  } else {
    throw ProtocolError(codes::kBadMessage,
                        "unknown message type '" + type + "' (expected command or control)");
  }
  return m;
}

ClientMessage parse_client_message(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(codes::kBadMessage, std::string("malformed JSON: ") + e.what());
  }
  return parse_client_message(j);
}

Json ack_message(const ClientMessage& m, const Json& body) {
  Json j;
  j["type"] = "ack";
  j["proto_version"] = kProtoVersion;
  if (m.id) j["id"] = *m.id;
  j["for"] = m.type == ClientMessage::Type::kCommand ? std::string("command")
                                                      : to_string(m.action);
  for (const auto& [k, v] : body.items()) j[k] = v;
  return j;
}

Json error_message(const std::string& code, const std::string& detail,
                   std::optional<std::int64_t> id) {
  Json j;
  j["type"] = "error";
  j["proto_version"] = kProtoVersion;
  if (id) j["id"] = *id;
  j["code"] = code;
  j["detail"] = detail;
  return j;
}

Json telemetry_message(const TelemetryFrame& f, const std::string& session) {
  Json j;
  j["type"] = "telemetry";
  j["proto_version"] = kProtoVersion;
  j["session"] = session;
  j["seq"] = f.seq;
  j["tick"] = f.tick;
  j["t"] = f.t;
  j["status"] = to_string(f.status);
  j["mode"] = f.planar ? "planar" : "ballbot";
  Json planes;
  planes["x"] = plane(f.x);
  planes["y"] = plane(f.y);
  planes["z"] = {{"yaw", f.yaw}, {"yaw_rate", f.yaw_rate}};
  j["planes"] = planes;
  j["position"] = {{"x", f.pos_x}, {"y", f.pos_y}};
  j["motor"] = {{"torque", array3(f.motor_torque)}, {"speed", array3(f.motor_speed)}};
  j["internals"] = {{"tau_ref", array3(f.tau_ref)},
                    {"phi_dot_ref", Json::array({f.phi_dot_ref[0], f.phi_dot_ref[1]})}};
  j["margins"] = f.margins ? array3(*f.margins) : Json(nullptr);
  j["command"] = {{"v", f.command.v},
                  {"heading", f.command.heading},
                  {"yaw_rate", f.command.yaw_rate},
                  {"v_shaped", f.v_shaped},
                  {"source", f.source}};
  j["events"] = {{"balance_failure", f.balance_failure}, {"slip", f.slip}};
  j["dropped"] = f.dropped;
  j["lag"] = f.lag;
  return j;
}

}  // namespace ballbot::service

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

#include "ballbot/service/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ballbot/service/protocol.hpp"
#include "ballbot/trajopt.hpp"

namespace ballbot::service {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kTriggerRampRate = 0.1;  // m/s^2
constexpr double kTriggerBrakeDuration = 2.0;
constexpr int kTriggerBrakeKnots = 50;
constexpr double kAtRestSpeed = 0.05;

double wrap_angle(double a) { return std::remainder(a, 2.0 * M_PI); }

double wheel_radius(const sim::PlatformConfig& pc) {
  return pc.mode == sim::PlantMode::kBallbot ? pc.geometry.r_s : pc.wip.r;
}

void fnv(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
}

void fnv(std::uint64_t& h, double v) { fnv(h, &v, sizeof v); }

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::kPaused:
      return "paused";
    case Status::kRunning:
      return "running";
    case Status::kFailed:
      return "failed";
    case Status::kReset:
      return "reset";
  }
  return "unknown";
}

SessionSettings SessionSettings::from_document(const config::Document& doc,
                                               const config::ServiceSettings& svc,
                                               const std::string& platform_name,
                                               std::optional<control::ControllerKind> controller,
                                               std::uint64_t seed) {
  SessionSettings s;
  s.platform = config::platform(doc, platform_name);
  s.controller = controller;
  s.seed = seed;
  s.speed_limit = svc.speed_limit;
  s.slew_rate = svc.slew_rate;
  s.yaw_rate_limit = svc.yaw_rate_limit;
  s.telemetry_hz = svc.telemetry_hz;
  s.push_force_limit = svc.push_force_limit;
  s.tunable = svc.tunable;
  return s;
}

SimSession::SimSession(std::string id, SessionSettings settings)
    : id_(std::move(id)),
      settings_(std::move(settings)),
      sim_(settings_.platform, settings_.controller, settings_.seed) {
  if (!(settings_.speed_limit > 0.0) || !(settings_.slew_rate > 0.0) ||
      !(settings_.yaw_rate_limit >= 0.0)) {
    throw std::invalid_argument("speed limit and slew rate must be positive");
  }
  if (!(settings_.telemetry_hz > 0.0) || settings_.telemetry_hz > 200.0) {
    throw std::invalid_argument("telemetry rate must be in (0, 200] Hz");
  }
  decimation_ = std::max(
      1, static_cast<int>(std::lround(1.0 / (settings_.platform.dt * settings_.telemetry_hz))));
  sim_.reset();
}

CommandAck SimSession::command(const TeleopCommand& c) {
  CommandAck ack;
  ack.applied = c;
  ack.applied.heading = wrap_angle(c.heading);
  const double lim = settings_.speed_limit;
  if (std::abs(c.v) > lim) {
    ack.applied.v = std::clamp(c.v, -lim, lim);
    ack.clamped = true;
    ack.note = "speed clamped to limit";
  }
  const double ylim = settings_.yaw_rate_limit;
  if (std::abs(c.yaw_rate) > ylim) {
    ack.applied.yaw_rate = std::clamp(c.yaw_rate, -ylim, ylim);
    ack.clamped = true;
    ack.note += ack.note.empty() ? "yaw rate clamped to limit" : "; yaw rate clamped to limit";
  }
  target_ = ack.applied;
  cancel_trigger();
  return ack;
}

void SimSession::start() {
  if (status_ == Status::kFailed) {
    throw IllegalTransition("session has failed; reset before starting");
  }
  status_ = Status::kRunning;
}

void SimSession::pause() {
  if (status_ != Status::kRunning) {
    throw IllegalTransition("cannot pause a session that is " + to_string(status_));
  }
  status_ = Status::kPaused;
}

void SimSession::reset() {
  sim_.reset();
  status_ = Status::kReset;
  target_ = {};
  vx_ = vy_ = yaw_c_ = 0.0;
  pos_x_ = pos_y_ = 0.0;
  push_ = {};
  push_ticks_ = 0;
  slip_seen_ = false;
  margins_.reset();
  cancel_trigger();
}

void SimSession::set_param(const std::string& key, double value) {
  const auto& wl = settings_.tunable;
  if (std::find(wl.begin(), wl.end(), key) == wl.end()) {
    throw ParamRejected("parameter '" + key + "' is not tunable");
  }
  if (!std::isfinite(value)) throw ParamRejected("parameter value must be finite");
  const bool ballbot = settings_.platform.mode == sim::PlantMode::kBallbot;

  const auto apply_planar = [&](control::PlanarGains& g) {
    if (key == "lqr.k1") return g.lqr.k1 = value, true;
    if (key == "lqr.k2") return g.lqr.k2 = value, true;
    if (key == "lqr.k3") return g.lqr.k3 = value, true;
    if (key == "pi.k_p") return g.pi.k_p = value, true;
    if (key == "pi.k_i") return g.pi.k_i = value, true;
    if (key == "pd.k_p_outer") return g.pd.k_p_outer = value, true;
    if (key == "pd.k_i_outer") return g.pd.k_i_outer = value, true;
    if (key == "pd.k_p_tilt") return g.pd.k_p_tilt = value, true;
    if (key == "pd.k_d_tilt") return g.pd.k_d_tilt = value, true;
    return false;
  };

  if (!ballbot) {
    if (!apply_planar(sim_.planar_gains())) {
      throw ParamRejected("parameter '" + key + "' has no effect on a planar platform");
    }
    return;
  }
  control::BallbotGains& g = sim_.ballbot_gains();
  if (key == "yaw.k_angle") {
    g.yaw.k_angle = value;
  } else if (key == "yaw.k_rate") {
    g.yaw.k_rate = value;
  } else {
    if (!apply_planar(g.x) || !apply_planar(g.y)) {
      throw ParamRejected("unknown controller parameter '" + key + "'");
    }
    if (key.rfind("pi.", 0) == 0) {
      g.motor_pi = control::motor_pi_from_planar(
          g.x.pi, kinematics::Drivetrain(settings_.platform.geometry),
          settings_.platform.control.motor_torque_limit);
    }
  }
}

void SimSession::push(double fx, double fy, double duration) {
  const double lim = settings_.push_force_limit;
  if (std::hypot(fx, fy) > lim) {
    throw std::out_of_range("push force exceeds the " + std::to_string(lim) + " N limit");
  }
  if (!(duration > 0.0) || duration > 5.0) {
    throw std::out_of_range("push duration must be in (0, 5] s");
  }
  push_ = {fx, fy};
  push_ticks_ = std::max<long>(1, std::lround(duration / dt()));
}

void SimSession::cancel_trigger() {
  source_ = "teleop";
  active_traj_.reset();
  ramp_v_ = 0.0;
}

bool SimSession::trigger(const std::string& name) {
  const bool planar = settings_.platform.mode == sim::PlantMode::kPlanar;
  const double speed = planar ? std::abs(vy_) : std::hypot(vx_, vy_);
  const double heading = planar ? (vy_ >= 0.0 ? 0.0 : M_PI) : std::atan2(vx_, vy_);
  if (name == "brake") {
    if (speed < kAtRestSpeed) return false;
    trajopt::BrakingTask task;
    task.v0 = speed;
    task.t_dur = kTriggerBrakeDuration;
    trajopt::SolveResult sol;
    try {
      sol = trajopt::optimize_braking(settings_.platform.wip, task, kTriggerBrakeKnots);
    } catch (const trajopt::SolveError& e) {
      sol = e.best();
    }
    cancel_trigger();
    active_traj_ = std::make_shared<const trajopt::Trajectory>(std::move(sol.trajectory));
    traj_heading_ = heading;
    traj_start_tick_ = sim_.ticks();
    source_ = "brake";
    target_ = {0.0, heading, 0.0};
    return true;
  }
  if (name == "ramp") {
    if (speed >= settings_.speed_limit - 1e-9) return false;
    cancel_trigger();
    ramp_v_ = speed;
    target_.v = speed;
    target_.yaw_rate = 0.0;
    if (speed >= kAtRestSpeed) target_.heading = heading;
    source_ = "ramp";
    return true;
  }
  throw ProtocolError(codes::kUnknownTrigger,
                      "unknown trigger '" + name + "' (expected brake or ramp)");
}

void SimSession::shape_command() {
  const double dt = settings_.platform.dt;
  if (active_traj_) {
    const double tl = (sim_.ticks() - traj_start_tick_) * dt;
    if (tl >= active_traj_->duration()) {
      cancel_trigger();
      vx_ = vy_ = 0.0;
    } else {
      const double v = wheel_radius(settings_.platform) *
                       active_traj_->state_at(active_traj_->start() + tl).phi_dot;
      vx_ = v * std::sin(traj_heading_);
      vy_ = v * std::cos(traj_heading_);
      return;
    }
  }
  if (source_ == "ramp") {
    ramp_v_ = std::min(settings_.speed_limit, ramp_v_ + kTriggerRampRate * dt);
    target_.v = ramp_v_;
    if (ramp_v_ >= settings_.speed_limit) source_ = "teleop";
  }
  const double tx = target_.v * std::sin(target_.heading);
  const double ty = target_.v * std::cos(target_.heading);
  double dx = tx - vx_;
  double dy = ty - vy_;
  const double n = std::hypot(dx, dy);
  const double step = settings_.slew_rate * dt;
  if (n > step) {
    dx *= step / n;
    dy *= step / n;
  }
  vx_ += dx;
  vy_ += dy;
  yaw_c_ = wrap_angle(yaw_c_ + target_.yaw_rate * dt);
}

control::BallbotCommand SimSession::controller_command() const {
  const sim::PlatformConfig& pc = settings_.platform;
  const double r = wheel_radius(pc);
  control::BallbotCommand cmd;
  if (active_traj_) {
    const double tl = (sim_.ticks() - traj_start_tick_) * pc.dt;
    const dynamics::PlanarState s = active_traj_->state_at(active_traj_->start() + tl);
    const double ch = std::cos(traj_heading_);
    const double sh = std::sin(traj_heading_);
    cmd.y = {s.theta * ch, s.phi_dot * ch, s.theta_dot * ch};
    if (pc.mode == sim::PlantMode::kBallbot) {
      cmd.x = {s.theta * sh, s.phi_dot * sh, s.theta_dot * sh};
      cmd.yaw_c = yaw_c_;
    }
    return cmd;
  }
  cmd.y.phi_dot_c = vy_ / r;
  if (pc.mode == sim::PlantMode::kBallbot) {
    cmd.x.phi_dot_c = vx_ / r;
    cmd.yaw_c = yaw_c_;
    cmd.yaw_rate_c = target_.yaw_rate;
  }
  return cmd;
}

long SimSession::advance(long n, std::vector<TelemetryFrame>* frames) {
  if (status_ != Status::kRunning) return 0;
  const sim::PlatformConfig& pc = settings_.platform;
  const double r = wheel_radius(pc);
  long taken = 0;
  while (taken < n) {
    shape_command();
    const sim::Push p = push_ticks_ > 0 ? push_ : sim::Push{};
    const sim::Snapshot& snap = sim_.tick(controller_command(), p);
    if (push_ticks_ > 0) --push_ticks_;
    ++taken;

    const sim::BallbotState& st = sim_.state();
    if (pc.mode == sim::PlantMode::kBallbot) {
      const double bx = r * st.x.phi_dot;
      const double by = r * st.y.phi_dot;
      const double c = std::cos(st.yaw);
      const double s = std::sin(st.yaw);
      pos_x_ += (c * bx - s * by) * pc.dt;
      pos_y_ += (s * bx + c * by) * pc.dt;
    } else {
      pos_y_ += r * st.y.phi_dot * pc.dt;
    }
    if (snap.contact) margins_ = snap.contact->margin;
    if (snap.slip) slip_seen_ = true;

    if (snap.balance_failure) {
      // One more tick so the reported torques are the zeroed ones.
      sim_.tick(controller_command());
      ++taken;
      status_ = Status::kFailed;
      if (frames) frames->push_back(frame());
      break;
    }
    if (frames && sim_.ticks() % decimation_ == 0) frames->push_back(frame());
  }
  return taken;
}

TelemetryFrame SimSession::frame() const {
  TelemetryFrame f;
  f.seq = seq_++;
  f.tick = sim_.ticks();
  f.t = sim_.time();
  f.status = status_;
  f.planar = settings_.platform.mode == sim::PlantMode::kPlanar;
  const sim::BallbotState& st = sim_.state();
  f.x = {st.x.theta, st.x.phi, st.x.theta_dot, st.x.phi_dot};
  f.y = {st.y.theta, st.y.phi, st.y.theta_dot, st.y.phi_dot};
  f.yaw = st.yaw;
  f.yaw_rate = st.yaw_rate;
  f.pos_x = pos_x_;
  f.pos_y = pos_y_;
  const sim::Snapshot& snap = sim_.last();
  for (int i = 0; i < 3; ++i) {
    f.motor_torque[i] = snap.motor_torque.values[i];
    f.motor_speed[i] = snap.motor_speed.values[i];
  }
  f.tau_ref = {snap.tau_ref_x, snap.tau_ref_y, 0.0};
  f.tau_applied = {snap.planar_torque.tau_x, snap.planar_torque.tau_y, snap.planar_torque.tau_z};
  f.phi_dot_ref = {snap.phi_dot_ref_x, snap.phi_dot_ref_y};
  f.margins = margins_;
  f.command = target_;
  f.v_shaped = std::hypot(vx_, vy_);
  f.source = source_;
  f.balance_failure = sim_.failed();
  f.slip = slip_seen_;
  return f;
}

std::uint64_t SimSession::state_hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  const auto v = sim_.state().vec();
  for (int i = 0; i < v.size(); ++i) fnv(h, v[i]);
  const long t = sim_.ticks();
  fnv(h, &t, sizeof t);
  fnv(h, vx_);
  fnv(h, vy_);
  fnv(h, yaw_c_);
  fnv(h, pos_x_);
  fnv(h, pos_y_);
  return h;
}

Json SimSession::handle(const Json& message) {
  std::optional<std::int64_t> id;
  if (message.is_object() && message.contains("id") && message["id"].is_number_integer()) {
    id = message["id"].get<std::int64_t>();
  }
  try {
    const ClientMessage m = parse_client_message(message);
    id = m.id;
    Json body = Json::object();
    if (m.type == ClientMessage::Type::kCommand) {
      const CommandAck a = command(m.command);
      body["v"] = a.applied.v;
      body["heading"] = a.applied.heading;
      body["yaw_rate"] = a.applied.yaw_rate;
      body["clamped"] = a.clamped;
      if (!a.note.empty()) body["note"] = a.note;
    } else {
      switch (m.action) {
        case ControlAction::kStart:
          start();
          break;
        case ControlAction::kPause:
          pause();
          break;
        case ControlAction::kReset:
          reset();
          break;
        case ControlAction::kSetParam:
          set_param(m.key, m.value);
          body["key"] = m.key;
          body["value"] = m.value;
          break;
        case ControlAction::kPush:
          push(m.fx, m.fy, m.duration);
          break;
        case ControlAction::kTrigger:
          body["name"] = m.key;
          body["noop"] = !trigger(m.key);
          break;
      }
    }
    log_.push_back({sim_.ticks(), message});
    body["status"] = to_string(status_);
    body["tick"] = sim_.ticks();
    return ack_message(m, body);
  } catch (const ProtocolError& e) {
    return error_message(e.code(), e.what(), id);
  } catch (const IllegalTransition& e) {
    return error_message(codes::kIllegalTransition, e.what(), id);
  } catch (const ParamRejected& e) {
    return error_message(codes::kParamRejected, e.what(), id);
  } catch (const std::out_of_range& e) {
    return error_message(codes::kOutOfRange, e.what(), id);
  } catch (const std::exception& e) {
    return error_message(codes::kInternal, e.what(), id);
  }
}

TelemetryQueue::TelemetryQueue(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

void TelemetryQueue::push(TelemetryFrame f) {
  std::lock_guard lock(mu_);
  if (frames_.size() >= capacity_) {
    frames_.pop_front();
    ++pending_drops_;
    ++total_drops_;
  }
  frames_.push_back(std::move(f));
}

std::optional<TelemetryFrame> TelemetryQueue::pop() {
  std::lock_guard lock(mu_);
  if (frames_.empty()) return std::nullopt;
  TelemetryFrame f = std::move(frames_.front());
  frames_.pop_front();
  f.dropped = pending_drops_;
  pending_drops_ = 0;
  return f;
}

std::size_t TelemetryQueue::size() const {
  std::lock_guard lock(mu_);
  return frames_.size();
}

std::uint64_t TelemetryQueue::total_dropped() const {
  std::lock_guard lock(mu_);
  return total_drops_;
}

Pacer::Pacer(double dt, double factor, double max_batch_seconds)
    : dt_(dt),
      factor_(factor),
      max_batch_(std::max(1L, std::lround(max_batch_seconds / dt))),
      start_(Clock::now()) {
  if (!(dt > 0.0) || !(factor > 0.0)) throw std::invalid_argument("pacing needs dt, factor > 0");
}

void Pacer::restart(Clock::time_point now, long tick_offset) {
  start_ = now;
  offset_ = tick_offset;
}

long Pacer::due(Clock::time_point now, long ticks_done) const {
  const double wall = std::chrono::duration<double>(now - start_).count();
  const long target = offset_ + static_cast<long>(std::floor(wall * factor_ / dt_));
  return std::clamp(target - ticks_done, 0L, max_batch_);
}

double Pacer::lag(Clock::time_point now, long ticks_done) const {
  const double wall = std::chrono::duration<double>(now - start_).count();
  return std::max(0.0, wall * factor_ - (ticks_done - offset_) * dt_);
}

std::vector<TelemetryFrame> replay(const std::string& id, const SessionSettings& settings,
                                   const std::vector<LoggedInput>& log, long end_tick) {
  SimSession s(id, settings);
  std::vector<TelemetryFrame> frames;
  for (const LoggedInput& in : log) {
    if (in.tick > s.ticks()) s.advance(in.tick - s.ticks(), &frames);
    s.handle(in.message);
  }
  if (end_tick > s.ticks()) s.advance(end_tick - s.ticks(), &frames);
  return frames;
}

}  // namespace ballbot::service

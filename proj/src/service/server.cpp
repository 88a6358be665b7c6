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

#include "ballbot/service/server.hpp"

#include <chrono>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/signal_set.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>

#include "ballbot/service/protocol.hpp"

namespace ballbot::service {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;
using Json = nlohmann::ordered_json;

namespace {

constexpr auto kIdleWait = std::chrono::milliseconds(2);
constexpr auto kWriterPoll = std::chrono::milliseconds(5);

void log_line(const std::string& msg) { fmt::print(stderr, "[ballbot-service] {}\n", msg); }

}  // namespace

// ---------------------------------------------------------------- Subscriber

void Subscriber::reply(std::string text) {
  std::lock_guard lock(mu_);
  replies_.push_back(std::move(text));
}

std::optional<std::string> Subscriber::next_reply() {
  std::lock_guard lock(mu_);
  if (replies_.empty()) return std::nullopt;
  std::string s = std::move(replies_.front());
  replies_.pop_front();
  return s;
}

// ------------------------------------------------------------- SessionRunner

SessionRunner::SessionRunner(std::string id, SessionSettings settings, double realtime_factor,
                             const std::filesystem::path& telemetry_log)
    : id_(id), session_(std::move(id), std::move(settings)),
      pacer_(session_.dt(), realtime_factor) {
  info_ = Json::object();
  if (!telemetry_log.empty()) {
    telemetry_log_.open(telemetry_log, std::ios::binary);
    if (!telemetry_log_) {
      throw std::runtime_error("cannot write telemetry log '" + telemetry_log.string() + "'");
    }
  }
  thread_ = std::thread([this] { loop(); });
}

SessionRunner::~SessionRunner() {
  stop();
  if (thread_.joinable()) thread_.join();
}

void SessionRunner::post(Json message, std::shared_ptr<Subscriber> from) {
  {
    std::lock_guard lock(mu_);
    inbox_.emplace_back(std::move(message), std::move(from));
  }
  cv_.notify_one();
}

void SessionRunner::subscribe(std::shared_ptr<Subscriber> s) {
  std::lock_guard lock(mu_);
  subscribers_.push_back(std::move(s));
}

void SessionRunner::unsubscribe(const std::shared_ptr<Subscriber>& s) {
  std::lock_guard lock(mu_);
  subscribers_.erase(std::remove(subscribers_.begin(), subscribers_.end(), s),
                     subscribers_.end());
}

void SessionRunner::stop() {
  stopped_ = true;
  cv_.notify_one();
}

Json SessionRunner::info() const {
  std::lock_guard lock(mu_);
  return info_;
}

Json SessionRunner::input_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void SessionRunner::publish(const TelemetryFrame& f) {
  if (telemetry_log_.is_open()) telemetry_log_ << telemetry_message(f, id_).dump() << '\n' << std::flush;
  std::lock_guard lock(mu_);
  for (const auto& s : subscribers_) s->telemetry.push(f);
}

void SessionRunner::loop() {
  const SessionSettings& st = session_.settings();
  const std::string controller =
      st.controller ? std::string(control::to_string(*st.controller)) : std::string("none");
  std::vector<TelemetryFrame> frames;
  while (!stopped_) {
    std::deque<std::pair<Json, std::shared_ptr<Subscriber>>> batch;
    {
      std::unique_lock lock(mu_);
      cv_.wait_for(lock, kIdleWait, [&] { return stopped_ || !inbox_.empty(); });
      batch.swap(inbox_);
    }
    for (auto& [msg, from] : batch) {
      const Status before = session_.status();
      const Json reply = session_.handle(msg);
      const Status after = session_.status();
      if (after == Status::kRunning && before != Status::kRunning) {
        pacer_.restart(Pacer::Clock::now(), session_.ticks());
      }
      if (from) from->reply(reply.dump());
      if (before != after) {
        log_line(fmt::format("session {} {} -> {}", id_, to_string(before), to_string(after)));
        publish(session_.frame());
      }
    }

    const auto now = Pacer::Clock::now();
    if (session_.status() == Status::kRunning) {
      frames.clear();
      const long n = pacer_.due(now, session_.ticks());
      session_.advance(n, &frames);
      const double lag = pacer_.lag(Pacer::Clock::now(), session_.ticks());
      for (TelemetryFrame& f : frames) {
        f.lag = lag;
        publish(f);
      }
      if (session_.status() == Status::kFailed) {
        log_line(fmt::format("session {} balance failure at t={:.3f} s", id_, session_.time()));
      }
    }

    Json info;
    info["id"] = id_;
    info["platform"] = st.platform.name;
    info["controller"] = controller;
    info["seed"] = st.seed;
    info["status"] = to_string(session_.status());
    info["t"] = session_.time();
    info["tick"] = session_.ticks();
    info["telemetry_hz"] = st.telemetry_hz;
    std::lock_guard lock(mu_);
    info_ = std::move(info);
    const auto& log = session_.input_log();
    for (std::size_t i = log_.size(); i < log.size(); ++i) {
      log_.push_back({{"tick", log[i].tick}, {"message", log[i].message}});
    }
  }
}

// -------------------------------------------------------------- networking

struct Server::Impl {
  asio::io_context io{1};
  tcp::acceptor acceptor{io};
};

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, std::shared_ptr<SessionRunner> runner, std::size_t depth)
      : ws_(std::move(socket)),
        timer_(ws_.get_executor()),
        runner_(std::move(runner)),
        sub_(std::make_shared<Subscriber>(depth)) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->runner_->subscribe(self->sub_);
      log_line(fmt::format("client attached to session {}", self->runner_->id()));
      self->do_read();
      self->schedule();
    });
  }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      Json j;
      try {
        j = Json::parse(text);
      } catch (const std::exception& e) {
        self->sub_->reply(
            error_message(codes::kBadMessage, std::string("malformed JSON: ") + e.what()).dump());
        return self->do_read();
      }
      self->runner_->post(std::move(j), self->sub_);
      self->do_read();
    });
  }

  void schedule() {
    if (closed_) return;
    timer_.expires_after(kWriterPoll);
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->flush();
    });
  }

  void flush() {
    if (closed_) return;
    if (runner_->stopped()) {
      closed_ = true;
      ws_.async_close(websocket::close_code::going_away,
                      [self = shared_from_this()](beast::error_code) {});
      runner_->unsubscribe(sub_);
      return;
    }
    std::optional<std::string> next = sub_->next_reply();
    if (!next) {
      if (auto f = sub_->telemetry.pop()) next = telemetry_message(*f, runner_->id()).dump();
    }
    if (!next) return schedule();
    out_ = std::move(*next);
    ws_.text(true);
    ws_.async_write(asio::buffer(out_),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) return self->close();
                      self->flush();
                    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    timer_.cancel();
    runner_->unsubscribe(sub_);
    log_line(fmt::format("client detached from session {}", runner_->id()));
  }

  websocket::stream<beast::tcp_stream> ws_;
  asio::steady_timer timer_;
  beast::flat_buffer buffer_;
  std::shared_ptr<SessionRunner> runner_;
  std::shared_ptr<Subscriber> sub_;
  std::string out_;
  bool closed_ = false;
};

std::vector<std::string> split_path(const std::string& target) {
  std::string path = target.substr(0, target.find('?'));
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    const std::size_t j = path.find('/', i);
    const std::size_t end = j == std::string::npos ? path.size() : j;
    if (end > i) parts.push_back(path.substr(i, end - i));
    i = end + 1;
  }
  return parts;
}

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, Server& server)
      : stream_(std::move(socket)), server_(server) {}

  void run() { do_read(); }

 private:
  void do_read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) return;
                       self->on_request();
                     });
  }

  void on_request() {
    const std::vector<std::string> parts = split_path(std::string(req_.target()));
    if (websocket::is_upgrade(req_)) {
      std::shared_ptr<SessionRunner> runner;
      if (parts.size() == 2 && parts[0] == "session") runner = server_.find(parts[1]);
      if (!runner) return respond(404, error_message("not_found", "no such session"));
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), runner,
                                  static_cast<std::size_t>(server_.settings().queue_depth))
          ->run(std::move(req_));
      return;
    }
    try {
      route(parts);
    } catch (const HttpError& e) {
      respond(e.status(), error_message("http_" + std::to_string(e.status()), e.what()));
    } catch (const std::exception& e) {
      respond(500, error_message(codes::kInternal, e.what()));
    }
  }

  void route(const std::vector<std::string>& parts) {
    const http::verb verb = req_.method();
    if (parts.size() == 1 && parts[0] == "health" && verb == http::verb::get) {
      return respond(200, {{"status", "ok"}, {"proto_version", kProtoVersion}});
    }
    if (parts.empty() || parts[0] != "session") throw HttpError(404, "unknown endpoint");
    if (parts.size() == 1) {
      if (verb == http::verb::get) return respond(200, server_.list_sessions());
      if (verb == http::verb::post) {
        Json body = Json::object();
        if (!req_.body().empty()) {
          try {
            body = Json::parse(req_.body());
          } catch (const std::exception& e) {
            throw HttpError(400, std::string("malformed JSON: ") + e.what());
          }
        }
        return respond(201, server_.create_session(body));
      }
      throw HttpError(405, "method not allowed");
    }
    const auto runner = server_.find(parts[1]);
    if (!runner) throw HttpError(404, "no session '" + parts[1] + "'");
    if (parts.size() == 2) {
      if (verb == http::verb::get) return respond(200, runner->info());
      if (verb == http::verb::delete_) {
        server_.delete_session(parts[1]);
        return respond(200, {{"deleted", parts[1]}});
      }
      throw HttpError(405, "method not allowed");
    }
    if (parts.size() == 3 && parts[2] == "log" && verb == http::verb::get) {
      return respond(200, {{"id", parts[1]}, {"inputs", runner->input_log()}});
    }
    throw HttpError(404, "unknown endpoint");
  }

  void respond(int status, const Json& body) {
    auto res = std::make_shared<http::response<http::string_body>>(
        static_cast<http::status>(status), req_.version());
    res->set(http::field::server, "ballbot-service");
    res->set(http::field::content_type, "application/json");
    res->keep_alive(req_.keep_alive());
    res->body() = body.dump() + "\n";
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (!res->keep_alive()) {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                          return;
                        }
                        self->do_read();
                      });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  Server& server_;
};

void do_accept(tcp::acceptor& acceptor, Server& server) {
  acceptor.async_accept([&acceptor, &server](beast::error_code ec, tcp::socket socket) {
    if (ec == asio::error::operation_aborted) return;
    if (!ec) std::make_shared<HttpSession>(std::move(socket), server)->run();
    do_accept(acceptor, server);
  });
}

}  // namespace

// ------------------------------------------------------------------- Server

Server::Server(config::Document doc, config::ServiceSettings settings)
    : doc_(std::move(doc)), settings_(std::move(settings)), impl_(std::make_unique<Impl>()) {}

Server::~Server() {
  stop();
  std::lock_guard lock(mu_);
  sessions_.clear();
}

unsigned short Server::bind() {
  beast::error_code ec;
  const auto addr = asio::ip::make_address(settings_.host, ec);
  if (ec) throw BindError("invalid bind address '" + settings_.host + "'");
  const tcp::endpoint ep(addr, settings_.port);
  tcp::acceptor& a = impl_->acceptor;
  a.open(ep.protocol(), ec);
  if (!ec) a.set_option(asio::socket_base::reuse_address(true), ec);
  if (!ec) a.bind(ep, ec);
  if (!ec) a.listen(asio::socket_base::max_listen_connections, ec);
  if (ec) {
    throw BindError(fmt::format("cannot bind {}:{}: {}", settings_.host, settings_.port,
                                ec.message()));
  }
  port_ = a.local_endpoint().port();
  log_line(fmt::format("listening on {}:{}", settings_.host, port_));
  return port_;
}

void Server::run(bool handle_signals) {
  if (!impl_->acceptor.is_open()) bind();
  do_accept(impl_->acceptor, *this);
  std::optional<asio::signal_set> signals;
  if (handle_signals) {
    signals.emplace(impl_->io, SIGINT, SIGTERM);
    signals->async_wait([this](beast::error_code ec, int) {
      if (!ec) stop();
    });
  }
  impl_->io.run();
}

void Server::stop() {
  asio::post(impl_->io, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  std::vector<std::shared_ptr<SessionRunner>> runners;
  {
    std::lock_guard lock(mu_);
    for (auto& [_, r] : sessions_) runners.push_back(r);
  }
  for (auto& r : runners) r->stop();
  impl_->io.stop();
}

Json Server::create_session(const Json& request) {
  if (!request.is_object()) throw HttpError(400, "request body must be a JSON object");
  const auto str = [&](const char* key, const std::string& fallback) {
    const auto it = request.find(key);
    if (it == request.end() || it->is_null()) return fallback;
    if (!it->is_string()) throw HttpError(400, std::string("'") + key + "' must be a string");
    return it->get<std::string>();
  };
  const std::string platform = str("platform", settings_.platform);
  const std::string controller = str("controller", settings_.controller);
  std::uint64_t seed = 1;
  if (const auto it = request.find("seed"); it != request.end() && !it->is_null()) {
    if (!it->is_number_unsigned()) throw HttpError(400, "'seed' must be a non-negative integer");
    seed = it->get<std::uint64_t>();
  }
  std::optional<control::ControllerKind> kind;
  if (controller != "none") {
    try {
      kind = control::parse_controller_kind(controller);
    } catch (const std::exception&) {
      throw HttpError(400, "unknown controller '" + controller +
                               "' (available: lqr, pi-pd, lqr-pi, none)");
    }
  }
  SessionSettings ss;
  try {
    ss = SessionSettings::from_document(doc_, settings_, platform, kind, seed);
  } catch (const config::UnknownName& e) {
    throw HttpError(400, e.what());
  }
  std::string id;
  {
    std::lock_guard lock(mu_);
    id = fmt::format("s{}", next_id_++);
  }
  std::filesystem::path log_file;
  if (!log_dir_.empty()) {
    std::filesystem::create_directories(log_dir_);
    log_file = log_dir_ / (id + ".jsonl");
  }
  auto runner = std::make_shared<SessionRunner>(id, std::move(ss), settings_.realtime_factor,
                                                log_file);
  {
    std::lock_guard lock(mu_);
    sessions_[id] = runner;
  }
  log_line(fmt::format("session {} created (platform {}, controller {}, seed {})", id, platform,
                       controller, seed));
  Json info = {{"id", id},
               {"platform", platform},
               {"controller", controller},
               {"seed", seed},
               {"status", "paused"},
               {"socket", "/session/" + id},
               {"proto_version", kProtoVersion}};
  return info;
}

Json Server::list_sessions() const {
  std::vector<std::shared_ptr<SessionRunner>> runners;
  {
    std::lock_guard lock(mu_);
    for (const auto& [_, r] : sessions_) runners.push_back(r);
  }
  Json out = Json::array();
  for (const auto& r : runners) out.push_back(r->info());
  return {{"sessions", out}};
}

bool Server::delete_session(const std::string& id) {
  std::shared_ptr<SessionRunner> r;
  {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    r = it->second;
    sessions_.erase(it);
  }
  r->stop();
  log_line(fmt::format("session {} deleted", id));
  return true;
}

std::shared_ptr<SessionRunner> Server::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  const auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

}  // namespace ballbot::service

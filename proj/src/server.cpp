#include "canteen/server.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <system_error>

#include "httplib.h"

namespace canteen {

using nlohmann::json;

Millis steady_millis() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

json state_to_json(const SessionState& st) {
  json seats = json::array();
  for (const auto& s : st.seats) {
    json v{{"occupied", s.occupied},
           {"bot", s.bot},
           {"connected", s.connected},
           {"bankroll", round_cents(s.bankroll)}};
    v["submitted_decision"] = s.decision.has_value();
    v["submitted_certainty"] = s.certainty.has_value();
    seats.push_back(v);
  }
  return {{"phase", to_string(st.phase)},
          {"round", st.round_index},
          {"deadline", st.deadline},
          {"reason", to_string(st.reason)},
          {"seats", seats}};
}

namespace {

[[noreturn]] void throw_errno(const char* what) {
  throw std::system_error(errno, std::generic_category(), what);
}

bool write_all(int fd, const std::string& bytes) {
  std::size_t off = 0;
  while (off < bytes.size()) {
    const auto n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    off += static_cast<std::size_t>(n);
  }
  return true;
}

// Reads what is available; false on EOF or error.
bool read_some(int fd, FrameDecoder& decoder) {
  char buf[4096];
  const auto n = ::recv(fd, buf, sizeof buf, 0);
  if (n < 0 && errno == EINTR) return true;
  if (n <= 0) return false;
  decoder.feed(std::string_view(buf, static_cast<std::size_t>(n)));
  return true;
}

int open_listener(const std::string& host, int port, int& bound_port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw_errno("socket");
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::invalid_argument("bad listen address " + host);
  }
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(fd, 64) < 0) {
    const int err = errno;
    ::close(fd);
    throw std::system_error(err, std::generic_category(), "bind");
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port = ntohs(addr.sin_port);
  return fd;
}

void reply_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int status_for(const json& reply) {
  if (reply.value("type", "") != "error") return 200;
  const auto code = reply.value("code", "");
  if (code == "unknown_session") return 404;
  if (code == "bad_token") return 403;
  if (code == "wrong_phase" || code == "duplicate_submission" || code == "seat_taken") {
    return 409;
  }
  return 400;
}

}  // namespace

Server::Server(SessionService& service, ServerOptions options, Clock clock)
    : service_(service),
      options_(std::move(options)),
      clock_(std::move(clock)),
      http_(std::make_unique<httplib::Server>()) {}

Server::~Server() { stop(); }

void Server::start() {
  install_routes();
  if (options_.http_port == 0) {
    http_port_ = http_->bind_to_any_port(options_.host);
  } else {
    http_port_ = http_->bind_to_port(options_.host, options_.http_port)
                     ? options_.http_port
                     : -1;
  }
  if (http_port_ < 0) throw std::runtime_error("cannot bind HTTP port");
  listen_fd_ = open_listener(options_.host, options_.stream_port, stream_port_);

  running_ = true;
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  accept_thread_ = std::thread([this] { accept_loop(); });
  tick_thread_ = std::thread([this] {
    while (running_) {
      service_.advance_all(clock_());
      std::this_thread::sleep_for(std::chrono::milliseconds(options_.tick_ms));
    }
  });
  http_->wait_until_ready();
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  http_->stop();
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  for (auto* t : {&http_thread_, &accept_thread_, &tick_thread_}) {
    if (t->joinable()) t->join();
  }
  std::vector<std::thread> conns;
  {
    std::lock_guard lock(conn_mu_);
    conns.swap(connections_);
  }
  for (auto& t : conns) t.join();
}

void Server::accept_loop() {
  while (running_) {
    pollfd p{listen_fd_, POLLIN, 0};
    if (::poll(&p, 1, 50) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    std::lock_guard lock(conn_mu_);
    connections_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void Server::serve_connection(int fd) {
  FrameDecoder decoder;
  std::string session_id;
  std::string token;
  std::size_t sent = 0;
  bool joined = false;
  bool open = true;

  auto send = [&](const json& msg) { open = open && write_all(fd, encode_frame(msg)); };

  while (running_ && open) {
    pollfd p{fd, POLLIN, 0};
    const int ready = ::poll(&p, 1, 50);
    try {
      if (ready > 0) {
        if (!read_some(fd, decoder)) break;
        while (auto msg = decoder.next()) {
          if (!joined) {
            if (!msg->is_object() || msg->value("type", "") != "join") {
              send(error_message(ErrorCode::kInvalidMessage,
                                 "first frame must be a join"));
              continue;
            }
            session_id = msg->value("session", "");
            token = msg->value("token", "");
            const auto reply = service_.handle(session_id, token, *msg, clock_());
            send(reply);
            joined = reply.value("type", "") == "ack" && !token.empty();
            continue;
          }
          const auto reply = service_.handle(session_id, token, *msg, clock_());
          send(reply);
        }
      }
      if (joined) {
        service_.advance_all(clock_());
        for (const auto& m : service_.poll(session_id, token, sent)) {
          send(m);
          ++sent;
        }
      }
    } catch (const ProtocolError& e) {
      // Framing errors leave the stream unsynchronised.
      send(error_message(e.code(), e.what()));
      break;
    }
  }
  if (joined) {
    try {
      service_.disconnect(session_id, token);
    } catch (const ProtocolError&) {
    }
  }
  ::close(fd);
}

void Server::install_routes() {
  http_->Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    auto body = req.body.empty() ? json::object() : json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      reply_json(res, error_message(ErrorCode::kInvalidMessage, "body is not a JSON object"), 400);
      return;
    }
    try {
      reply_json(res, {{"session", service_.create_session(body, clock_())}});
    } catch (const ProtocolError& e) {
      reply_json(res, error_message(e.code(), e.what()), 400);
    }
  });

  http_->Post(R"(/sessions/([^/]+)/messages)",
              [this](const httplib::Request& req, httplib::Response& res) {
                const auto body = json::parse(req.body, nullptr, false);
                if (body.is_discarded() || !body.is_object() || !body.contains("message")) {
                  reply_json(res,
                             error_message(ErrorCode::kInvalidMessage,
                                           "expected {\"token\", \"message\"}"),
                             400);
                  return;
                }
                const auto reply = service_.handle(req.matches[1], body.value("token", ""),
                                                   body["message"], clock_());
                reply_json(res, reply, status_for(reply));
              });

  http_->Get(R"(/sessions/([^/]+)/poll)",
             [this](const httplib::Request& req, httplib::Response& res) {
               try {
                 std::size_t since = 0;
                 if (req.has_param("since")) since = std::stoul(req.get_param_value("since"));
                 service_.advance_all(clock_());
                 const auto msgs =
                     service_.poll(req.matches[1], req.get_param_value("token"), since);
                 reply_json(res, {{"messages", msgs}, {"next", since + msgs.size()}});
               } catch (const ProtocolError& e) {
                 const auto err = error_message(e.code(), e.what());
                 reply_json(res, err, status_for(err));
               } catch (const std::exception& e) {
                 reply_json(res, error_message(ErrorCode::kInvalidMessage, e.what()), 400);
               }
             });

  http_->Get(R"(/sessions/([^/]+)/log)",
             [this](const httplib::Request& req, httplib::Response& res) {
               try {
                 res.set_content(service_.export_log(req.matches[1]), "application/x-ndjson");
               } catch (const ProtocolError& e) {
                 reply_json(res, error_message(e.code(), e.what()), 404);
               }
             });

  http_->Get(R"(/sessions/([^/]+)/state)",
             [this](const httplib::Request& req, httplib::Response& res) {
               try {
                 reply_json(res, state_to_json(service_.state(req.matches[1])));
               } catch (const ProtocolError& e) {
                 reply_json(res, error_message(e.code(), e.what()), 404);
               }
             });
}

StreamClient::StreamClient(const std::string& host, int port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), std::to_string(port).c_str(), &hints, &res) != 0) {
    throw std::runtime_error("cannot resolve " + host);
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  const int rc = fd_ < 0 ? -1 : ::connect(fd_, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc < 0) {
    const int err = errno;
    close();
    throw std::system_error(err, std::generic_category(), "connect");
  }
}

StreamClient::~StreamClient() { close(); }

void StreamClient::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void StreamClient::send(const json& message) { send_raw(encode_frame(message)); }

void StreamClient::send_raw(const std::string& bytes) {
  if (!write_all(fd_, bytes)) throw_errno("send");
}

std::optional<json> StreamClient::receive(std::chrono::milliseconds timeout) {
  const auto until = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto msg = decoder_.next()) return msg;
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        until - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    pollfd p{fd_, POLLIN, 0};
    if (::poll(&p, 1, static_cast<int>(left.count())) <= 0) return std::nullopt;
    if (!read_some(fd_, decoder_)) return std::nullopt;
  }
}

}  // namespace canteen

#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "canteen/session_service.hpp"
#include "canteen/wire.hpp"

namespace httplib {
class Server;
}

namespace canteen {

using Clock = std::function<Millis()>;

// Milliseconds on the monotonic clock.
Millis steady_millis();

struct ServerOptions {
  std::string host = "127.0.0.1";
  int http_port = 8000;    // 0 picks a free port
  int stream_port = 8001;  // 0 picks a free port
  Millis tick_ms = 200;    // how often deadlines are applied
};

// Serves one SessionService over two transports:
//  - a TCP stream of length-delimited JSON frames; the first frame must be
//    {"type":"join","session":...,"seat":...,"token":...}, after which the
//    server pushes every message for that seat as it is produced;
//  - an HTTP request/poll fallback:
//      POST /sessions                    config body -> {"session": id}
//      POST /sessions/{id}/messages      {"token", "message"} -> reply
//      GET  /sessions/{id}/poll?token=&since=  -> {"messages", "next"}
//      GET  /sessions/{id}/log           JSONL export
//      GET  /sessions/{id}/state         phase summary
class Server {
 public:
  Server(SessionService& service, ServerOptions options, Clock clock = steady_millis);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds both listeners and starts the worker threads. Throws on bind failure.
  void start();
  void stop();
  int http_port() const { return http_port_; }
  int stream_port() const { return stream_port_; }

 private:
  void accept_loop();
  void serve_connection(int fd);
  void install_routes();

  SessionService& service_;
  ServerOptions options_;
  Clock clock_;
  std::unique_ptr<httplib::Server> http_;
  int http_port_ = 0;
  int stream_port_ = 0;
  int listen_fd_ = -1;
  std::atomic<bool> running_{false};
  std::thread http_thread_;
  std::thread accept_thread_;
  std::thread tick_thread_;
  std::mutex conn_mu_;
  std::vector<std::thread> connections_;
};

// Blocking client for the stream transport.
class StreamClient {
 public:
  StreamClient(const std::string& host, int port);
  ~StreamClient();
  StreamClient(const StreamClient&) = delete;
  StreamClient& operator=(const StreamClient&) = delete;

  void send(const nlohmann::json& message);
  // Next message, or empty if nothing arrives within the timeout.
  std::optional<nlohmann::json> receive(std::chrono::milliseconds timeout);
  // Sends raw bytes, for exercising the framing.
  void send_raw(const std::string& bytes);
  void close();

 private:
  int fd_ = -1;
  FrameDecoder decoder_;
};

nlohmann::json state_to_json(const SessionState& state);

}  // namespace canteen

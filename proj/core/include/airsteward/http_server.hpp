#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "airsteward/service.hpp"

namespace airsteward::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> ui_dir;  // served at /
};

/// JSON API over a Service. POST /sessions/{id}/plan answers with
/// text/event-stream.
class HttpServer {
 public:
  HttpServer(Service& service, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds and returns the bound port. Throws std::runtime_error on failure.
  int bind();
  /// Serves until stop(). bind() must have succeeded.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// One server-sent event frame: "event: <name>\ndata: <json>\n\n".
std::string sse_frame(std::string_view event, const nlohmann::json& data);

}  // namespace airsteward::service

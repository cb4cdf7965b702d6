#include "airsteward/http_server.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include "airsteward/codec.hpp"
#include "airsteward/json_reader.hpp"

namespace airsteward::service {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(canonical_dump(body), "application/json");
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  return parse_json(req.body);
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const NotFoundError& e) {
      reply(res, 404, {{"error", e.what()}});
    } catch (const DecodeError& e) {
      reply(res, 400, {{"error", e.what()}, {"offset", e.offset()}});
    } catch (const SchemaError& e) {
      reply(res, 400, {{"error", e.what()}, {"field", e.field()}});
    } catch (const std::invalid_argument& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  };
}

}  // namespace

std::string sse_frame(std::string_view event, const json& data) {
  return fmt::format("event: {}\ndata: {}\n\n", event, canonical_dump(data));
}

struct HttpServer::Impl {
  Service& service;
  ServerOptions options;
  httplib::Server server;
  bool bound = false;

  Impl(Service& s, ServerOptions o) : service(s), options(std::move(o)) {}

  void routes() {
    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 201, service.create_session(body_json(req)));
    }));
    server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, {{"sessions", service.session_ids()}});
    }));
    server.Post(R"(/sessions/([^/]+)/utterance)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_json(req);
      ObjectReader r(body, "");
      const std::string text = r.contains("text") ? r.string("text") : std::string();
      r.finish();
      reply(res, 200, service.handle_utterance(req.matches[1], text));
    }));
    server.Post(R"(/sessions/([^/]+)/plan)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      service.state(id);  // 404 before the stream starts
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [this, id](size_t, httplib::DataSink& sink) {
        bool open = true;
        auto emit = [&](std::string_view event, const json& data) {
          if (!open) return;
          const std::string frame = sse_frame(event, data);
          open = sink.write(frame.data(), frame.size());
        };
        try {
          service.request_plan(id, emit);
        } catch (const std::exception& e) {
          emit("error", {{"message", e.what()}, {"offset", nullptr}});
        }
        sink.done();
        return true;
      });
    }));
    server.Get(R"(/sessions/([^/]+)/profile)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.profile(req.matches[1]));
    }));
    server.Get(R"(/sessions/([^/]+)/state)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.state(req.matches[1]));
    }));
    server.Post(R"(/sessions/([^/]+)/advance)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_json(req);
      ObjectReader r(body, "");
      const double minutes = r.contains("minutes") ? r.positive("minutes") : service.config().sim.dt_minutes;
      r.finish();
      reply(res, 200, service.advance(req.matches[1], minutes));
    }));
    server.Post(R"(/sessions/([^/]+)/perturb)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = body_json(req);
      ObjectReader r(body, "");
      const auto& d = r.required("deltas");
      ObjectReader dr(d, "deltas");
      std::map<std::string, double> deltas;
      for (const auto& [k, v] : d.items()) deltas[k] = ObjectReader::as_number(v, dr.field(k));
      r.finish();
      reply(res, 200, service.perturb(req.matches[1], deltas));
    }));
    server.Post("/eval/run", guarded([this](const httplib::Request& req, httplib::Response& res) {
      reply(res, 200, service.run_eval(body_json(req)));
    }));
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, {{"status", "ok"}});
    });
    if (options.ui_dir) {
      if (!server.set_mount_point("/", options.ui_dir->string())) {
        throw std::runtime_error(fmt::format("cannot serve UI from {}", options.ui_dir->string()));
      }
    }
  }
};

HttpServer::HttpServer(Service& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  auto& o = impl_->options;
  int port = o.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(o.host);
    if (port < 0) throw std::runtime_error(fmt::format("cannot bind {}", o.host));
  } else if (!impl_->server.bind_to_port(o.host, port)) {
    throw std::runtime_error(fmt::format("cannot bind {}:{}", o.host, port));
  }
  impl_->bound = true;
  return port;
}

void HttpServer::listen() {
  if (!impl_->bound) throw std::logic_error("bind() first");
  impl_->server.listen_after_bind();
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

}  // namespace airsteward::service

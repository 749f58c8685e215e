// Copyright 2026 The Authors.
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

#include "sparselabel/session_http.hpp"

#include <cmath>
#include <functional>
#include <string>

#include "httplib.h"

namespace sparselabel {
namespace {

constexpr const char* kJsonType = "application/json";

void reply(httplib::Response& res, int status, const io::Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJsonType);
}

using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

// Maps exceptions to JSON error bodies.
Handler guarded(Handler inner) {
  return [inner = std::move(inner)](const httplib::Request& req,
                                    httplib::Response& res) {
    const io::Json detail{{"method", req.method}, {"path", req.path}};
    try {
      inner(req, res);
    } catch (const Error& e) {
      reply(res, http_status(e), error_body(e.code(), e.what(), detail));
    } catch (const nlohmann::json::exception& e) {
      reply(res, 400, error_body("parse_error", e.what(), detail));
    } catch (const std::exception& e) {
      reply(res, 500, error_body("internal_error", e.what(), detail));
    }
  };
}

io::Json body_of(const httplib::Request& req) {
  if (req.body.empty()) throw ParseError("request body is empty");
  return io::parse_json(req.body);
}

}  // namespace

int http_status(const Error& e) {
  const std::string& c = e.code();
  if (c == "validation_error" || c == "parse_error") return 400;
  if (c == "not_found") return 404;
  if (c == "conflict") return 409;
  if (c == "numerical_error" || c == "budget_exceeded") return 422;
  return 500;
}

io::Json error_body(const std::string& code, const std::string& message,
                    const io::Json& detail) {
  return io::Json{{"code", code}, {"message", message}, {"detail", detail}};
}

void register_routes(httplib::Server& server, SessionManager& manager) {
  // Unrouted requests and bare httplib errors get the same JSON error shape.
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    const std::string code = res.status == 404 ? "not_found" : "http_error";
    reply(res, res.status,
          error_body(code, httplib::status_message(res.status),
                     io::Json{{"method", req.method}, {"path", req.path}}));
    return httplib::Server::HandlerResponse::Handled;
  });

  server.Post("/v1/sessions", guarded([&](const httplib::Request& req,
                                          httplib::Response& res) {
    const auto session = manager.create(body_of(req));
    reply(res, 201, io::Json{{"id", session->id()}, {"state", session->state_json()}});
  }));

  server.Get(R"(/v1/sessions/([^/]+))",
             guarded([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, manager.find(req.matches[1])->state_json());
             }));

  server.Get(R"(/v1/sessions/([^/]+)/suggestion)",
             guarded([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200,
                     suggestion_to_json(manager.find(req.matches[1])->next_suggestion()));
             }));

  server.Post(R"(/v1/sessions/([^/]+)/labels)",
              guarded([&](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                manager.find(id);
                const io::Json body = body_of(req);
                if (!body.is_object() || !body.contains("index") ||
                    !body.at("index").is_number_unsigned()) {
                  throw ValidationError("'index' must be a non-negative integer");
                }
                if (!body.contains("value") || !body.at("value").is_number()) {
                  throw ValidationError("'value' must be a finite number");
                }
                const double value = body.at("value").get<double>();
                if (!std::isfinite(value)) {
                  throw ValidationError("'value' must be a finite number");
                }
                reply(res, 200,
                      summary_to_json(manager.submit(
                          id, body.at("index").get<std::size_t>(), value)));
              }));

  server.Delete(R"(/v1/sessions/([^/]+)/labels/last)",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                  reply(res, 200, summary_to_json(manager.undo(req.matches[1])));
                }));

  server.Get(R"(/v1/sessions/([^/]+)/curve)",
             guarded([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, curve_to_json(manager.find(req.matches[1])->curve()));
             }));
}

bool serve(const ServeOptions& options) {
  SessionManager manager(options.journal);
  httplib::Server server;
  register_routes(server, manager);
  if (options.static_dir && !server.set_mount_point("/", options.static_dir->string())) {
    throw ValidationError("static directory '" + options.static_dir->string() +
                          "' does not exist");
  }
  return server.listen(options.host, options.port);
}

}  // namespace sparselabel

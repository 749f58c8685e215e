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

// JSON-over-HTTP binding of SessionManager under /v1.

#ifndef SPARSELABEL_SESSION_HTTP_HPP_
#define SPARSELABEL_SESSION_HTTP_HPP_

#include <filesystem>
#include <optional>
#include <string>

#include "sparselabel/error.hpp"
#include "sparselabel/io.hpp"
#include "sparselabel/session.hpp"

namespace httplib {
class Server;
}

namespace sparselabel {

// HTTP status for a library error: 400 for bad input, 404, 409, 422 for
// numerical failures, 500 otherwise.
int http_status(const Error& e);

// {"code", "message", "detail"}.
io::Json error_body(const std::string& code, const std::string& message,
                    const io::Json& detail = nullptr);

// Installs the /v1/sessions routes. `manager` must outlive the server.
void register_routes(httplib::Server& server, SessionManager& manager);

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::filesystem::path> journal;
  std::optional<std::filesystem::path> static_dir;  // UI bundle, optional
};

// Blocks until the server stops. Returns false if the port could not be
// bound.
bool serve(const ServeOptions& options);

}  // namespace sparselabel

#endif  // SPARSELABEL_SESSION_HTTP_HPP_

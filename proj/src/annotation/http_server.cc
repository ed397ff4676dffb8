// Copyright 2026 The Prefchat Authors.
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

#include "prefchat/annotation/http_server.h"

#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "prefchat/errors.h"

namespace prefchat::annotation {

using nlohmann::json;

namespace {

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, const ApiError& e) {
  SendJson(res, e.http_status(),
           {{"code", e.code_name()}, {"message", e.what()}, {"detail", e.detail()}});
}

// Parses the body as a JSON object carrying only `allowed` keys.
json ParseBody(const httplib::Request& req, const std::vector<std::string>& allowed) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body, nullptr, /*allow_exceptions=*/false);
  if (body.is_discarded() || !body.is_object()) {
    throw ApiError(ApiError::Code::kValidation, "request body must be a JSON object");
  }
  for (const auto& [key, value] : body.items()) {
    bool known = false;
    for (const std::string& a : allowed) known = known || key == a;
    if (!known) {
      throw ApiError(ApiError::Code::kValidation, "unknown field '" + key + "'",
                     {{"field", key}});
    }
  }
  return body;
}

template <typename V>
V Field(const json& body, const char* key) {
  if (!body.contains(key)) {
    throw ApiError(ApiError::Code::kValidation,
                   std::string("missing field '") + key + "'", {{"field", key}});
  }
  try {
    return body.at(key).get<V>();
  } catch (const json::exception&) {
    throw ApiError(ApiError::Code::kValidation,
                   std::string("field '") + key + "' has the wrong type",
                   {{"field", key}});
  }
}

template <typename V>
std::optional<V> OptionalField(const json& body, const char* key) {
  if (!body.contains(key) || body.at(key).is_null()) return std::nullopt;
  return Field<V>(body, key);
}

json RecordView(const DialogueRecord& r) { return RecordToJson(r); }

}  // namespace

struct HttpServer::Impl {
  AnnotationService& service;
  std::string token;
  httplib::Server server;

  template <typename Fn>
  void Guard(httplib::Response& res, Fn fn) {
    try {
      fn();
    } catch (const ApiError& e) {
      SendError(res, e);
    } catch (const ValidationError& e) {
      SendError(res, ApiError(ApiError::Code::kValidation, e.what()));
    } catch (const std::exception& e) {
      spdlog::error("request failed: {}", e.what());
      SendError(res, ApiError(ApiError::Code::kInternal, e.what()));
    }
  }

  void Mutation(const char* pattern, std::vector<std::string> fields,
                std::function<Command(const json&)> make) {
    server.Post(pattern, [this, fields, make](const httplib::Request& req,
                                              httplib::Response& res) {
      Guard(res, [&] {
        const json body = ParseBody(req, fields);
        const Session s = service.Execute(req.matches[1], make(body));
        SendJson(res, 200, SessionToJson(s));
      });
    });
  }

  void Install() {
    server.set_pre_routing_handler(
        [this](const httplib::Request& req, httplib::Response& res) {
          res.set_header("Access-Control-Allow-Origin", "*");
          res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
          res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
          if (req.method == "OPTIONS") {
            res.status = 204;
            return httplib::Server::HandlerResponse::Handled;
          }
          if (!token.empty() && req.path != "/healthz" &&
              req.get_header_value("Authorization") != "Bearer " + token) {
            SendError(res, ApiError(ApiError::Code::kUnauthorized,
                                    "missing or wrong bearer token"));
            return httplib::Server::HandlerResponse::Handled;
          }
          return httplib::Server::HandlerResponse::Unhandled;
        });

    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (res.status == 404 && res.body.empty()) {
        SendError(res, ApiError(ApiError::Code::kNotFound, "no route for " + req.path));
      }
    });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      SendJson(res, 200, {{"status", "ok"}});
    });

    server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      Guard(res, [&] {
        const json body = ParseBody(req, {"mode"});
        const Session s = service.Create(ParseMode(Field<std::string>(body, "mode")));
        SendJson(res, 201, SessionToJson(s));
      });
    });

    server.Get(R"(/sessions/([^/]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 Guard(res, [&] { SendJson(res, 200, SessionToJson(service.Get(req.matches[1]))); });
               });

    Mutation(R"(/sessions/([^/]+)/opening)", {"text", "expected_round"},
             [](const json& b) -> Command {
               return OpeningCommand{Field<std::string>(b, "text"),
                                     OptionalField<int>(b, "expected_round")};
             });
    Mutation(R"(/sessions/([^/]+)/response)",
             {"action", "chosen_index", "text", "expected_round"},
             [](const json& b) -> Command {
               ResponseCommand c;
               c.action = Field<std::string>(b, "action");
               c.chosen_index = OptionalField<size_t>(b, "chosen_index");
               c.text = Field<std::string>(b, "text");
               c.expected_round = OptionalField<int>(b, "expected_round");
               return c;
             });
    Mutation(R"(/sessions/([^/]+)/message)", {"text", "expected_round"},
             [](const json& b) -> Command {
               return MessageCommand{Field<std::string>(b, "text"),
                                     OptionalField<int>(b, "expected_round")};
             });
    Mutation(R"(/sessions/([^/]+)/finish)", {"expected_round"},
             [](const json& b) -> Command {
               return FinishCommand{OptionalField<int>(b, "expected_round")};
             });

    server.Post(R"(/records/([^/]+)/review)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  Guard(res, [&] {
                    const json body = ParseBody(req, {"verdict", "reviewer_id"});
                    ReviewCommand c{Field<std::string>(body, "verdict"),
                                    Field<std::string>(body, "reviewer_id")};
                    const Session s = service.ReviewRecord(req.matches[1], c);
                    SendJson(res, 200, RecordView(ToRecord(s)));
                  });
                });

    server.Get(R"(/records/([^/]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 Guard(res, [&] { SendJson(res, 200, RecordView(service.GetRecord(req.matches[1]))); });
               });

    server.Get("/records", [this](const httplib::Request& req, httplib::Response& res) {
      Guard(res, [&] {
        std::optional<RecordStatus> status;
        if (req.has_param("status")) status = ParseStatus(req.get_param_value("status"));
        json out = json::array();
        for (const auto& r : service.Records(status)) out.push_back(RecordView(r));
        SendJson(res, 200, out);
      });
    });

    server.Get("/export", [this](const httplib::Request& req, httplib::Response& res) {
      Guard(res, [&] {
        if (req.has_param("status") && req.get_param_value("status") != "accepted") {
          throw ApiError(ApiError::Code::kValidation,
                         "export only serves accepted records", {{"field", "status"}});
        }
        ExportFilter f;
        if (req.has_param("split")) f.split = ParseSplit(req.get_param_value("split"));
        if (req.has_param("from")) f.from = req.get_param_value("from");
        if (req.has_param("to")) f.to = req.get_param_value("to");
        std::ostringstream out;
        WriteDataset(out, service.Export(f));
        res.status = 200;
        res.set_content(out.str(), "application/x-ndjson");
      });
    });
  }
};

HttpServer::HttpServer(AnnotationService& service, std::string auth_token)
    : impl_(new Impl{service, std::move(auth_token), {}}) {
  impl_->Install();
}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::Run(const std::string& host, int port) {
  if (!impl_->server.bind_to_port(host, port)) {
    throw Error("cannot bind " + host + ":" + std::to_string(port));
  }
  spdlog::info("listening on {}:{}", host, port);
  impl_->server.listen_after_bind();
}

void HttpServer::Stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace prefchat::annotation

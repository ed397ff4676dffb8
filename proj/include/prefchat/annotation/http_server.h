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

#ifndef PREFCHAT_ANNOTATION_HTTP_SERVER_H_
#define PREFCHAT_ANNOTATION_HTTP_SERVER_H_

#include <memory>
#include <string>
#include <thread>

#include "prefchat/annotation/service.h"

namespace prefchat::annotation {

// JSON-over-HTTP front end of AnnotationService.
//
//   POST /sessions                      {mode}
//   GET  /sessions/{id}
//   POST /sessions/{id}/opening         {text, expected_round?}
//   POST /sessions/{id}/response        {action, chosen_index?, text, expected_round?}
//   POST /sessions/{id}/message         {text, expected_round?}
//   POST /sessions/{id}/finish          {expected_round?}
//   GET  /records?status=...
//   GET  /records/{id}
//   POST /records/{id}/review           {verdict, reviewer_id}
//   GET  /export?status=accepted&split=&from=&to=   (JSON lines)
//   GET  /healthz
//
// Errors come back as {code, message, detail} with a matching HTTP status.
class HttpServer {
 public:
  HttpServer(AnnotationService& service, std::string auth_token = "");
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds (port 0 picks a free port), serves on a background thread and
  // returns the bound port. Throws Error when binding fails.
  int Start(const std::string& host, int port);
  // Binds and serves on the calling thread until Stop().
  void Run(const std::string& host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

}  // namespace prefchat::annotation

#endif  // PREFCHAT_ANNOTATION_HTTP_SERVER_H_

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

#ifndef PREFCHAT_CONFIG_H_
#define PREFCHAT_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>

#include "json.hpp"
#include "prefchat/generation.h"
#include "prefchat/model.h"
#include "prefchat/trainer.h"

namespace prefchat {

struct ServiceConfig {
  std::string bind_address = "127.0.0.1";
  int port = 8080;
  std::string checkpoint;
  // Event logs and the record store live here.
  std::string data_dir = "prefchat-data";
  // When non-empty every request must carry "Authorization: Bearer <token>".
  std::string auth_token;
  int queue_capacity = 64;

  void Validate() const;
};

struct AppConfig {
  ModelConfig model;
  TrainConfig train;
  DecodeConfig decode;
  ServiceConfig service;
};

nlohmann::json AppConfigToJson(const AppConfig& config);
// Keys absent from `j` keep their defaults; unknown keys and wrongly typed
// values throw ValidationError naming the dotted key.
AppConfig AppConfigFromJson(const nlohmann::json& j);

// Applies "dotted.key=value". Values of keys that `schema` types as strings
// are taken verbatim; anything else is read as JSON when it parses and as a
// plain string otherwise.
void ApplyOverride(nlohmann::json& j, std::string_view assignment,
                   const nlohmann::json* schema = nullptr);

using EnvLookup = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> ProcessEnv(const char* name);

// Defaults, then the file, then PREFCHAT_* environment variables for the
// service section, then explicit overrides.
AppConfig LoadAppConfig(const std::optional<std::filesystem::path>& file,
                        std::span<const std::string> overrides,
                        const EnvLookup& env = ProcessEnv);

}  // namespace prefchat

#endif  // PREFCHAT_CONFIG_H_

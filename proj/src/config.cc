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

#include "prefchat/config.h"

#include <cstdlib>
#include <fstream>

#include "prefchat/checkpoint.h"
#include "prefchat/errors.h"

namespace prefchat {

using nlohmann::json;

namespace {

void CheckKeys(const json& given, const json& schema, const std::string& prefix) {
  if (!given.is_object()) {
    throw ValidationError("config: '" + (prefix.empty() ? "<root>" : prefix) +
                          "' must be an object");
  }
  for (const auto& [key, value] : given.items()) {
    const std::string dotted = prefix.empty() ? key : prefix + "." + key;
    if (!schema.contains(key)) {
      throw ValidationError("config: unknown key '" + dotted + "'");
    }
    const json& expected = schema.at(key);
    if (expected.is_object()) {
      CheckKeys(value, expected, dotted);
    } else if (expected.is_number() != value.is_number() ||
               expected.is_boolean() != value.is_boolean() ||
               expected.is_string() != value.is_string()) {
      throw ValidationError("config: key '" + dotted + "' has the wrong type");
    }
  }
}

template <typename V>
void Read(const json& section, const char* key, V& out, const std::string& name) {
  if (!section.contains(key)) return;
  try {
    out = section.at(key).get<V>();
  } catch (const json::exception&) {
    throw ValidationError("config: key '" + name + "." + key +
                          "' has the wrong type");
  }
}

std::string Replace(std::string s, char from, char to) {
  for (char& c : s) {
    if (c == from) c = to;
  }
  return s;
}

}  // namespace

void ServiceConfig::Validate() const {
  if (port < 0 || port > 65535) throw ValidationError("service.port out of range");
  if (queue_capacity < 1) throw ValidationError("service.queue_capacity must be >= 1");
  if (data_dir.empty()) throw ValidationError("service.data_dir is empty");
}

json AppConfigToJson(const AppConfig& c) {
  const TrainConfig& t = c.train;
  return {
      {"model", ModelConfigToJson(c.model)},
      {"train",
       {{"peak_lr", t.peak_lr},
        {"warmup_steps", t.warmup_steps},
        {"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"adam", {{"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"epsilon", t.adam.epsilon}}},
        {"grad_clip_norm", t.grad_clip_norm},
        {"nll_per_token_mean", t.nll_per_token_mean},
        {"seed", t.seed},
        {"checkpoint_dir", t.checkpoint_dir.string()}}},
      {"decode",
       {{"k", c.decode.k},
        {"temperature", c.decode.temperature},
        {"max_new_tokens", c.decode.max_new_tokens},
        {"n_candidates", c.decode.n_candidates},
        {"rng_seed", c.decode.rng_seed}}},
      {"service",
       {{"bind_address", c.service.bind_address},
        {"port", c.service.port},
        {"checkpoint", c.service.checkpoint},
        {"data_dir", c.service.data_dir},
        {"auth_token", c.service.auth_token},
        {"queue_capacity", c.service.queue_capacity}}},
  };
}

AppConfig AppConfigFromJson(const json& j) {
  AppConfig c;
  CheckKeys(j, AppConfigToJson(c), "");
  if (j.contains("model")) c.model = ModelConfigFromJson(j.at("model"));
  if (j.contains("train")) {
    const json& t = j.at("train");
    Read(t, "peak_lr", c.train.peak_lr, "train");
    Read(t, "warmup_steps", c.train.warmup_steps, "train");
    Read(t, "epochs", c.train.epochs, "train");
    Read(t, "batch_size", c.train.batch_size, "train");
    Read(t, "grad_clip_norm", c.train.grad_clip_norm, "train");
    Read(t, "nll_per_token_mean", c.train.nll_per_token_mean, "train");
    Read(t, "seed", c.train.seed, "train");
    std::string dir = c.train.checkpoint_dir.string();
    Read(t, "checkpoint_dir", dir, "train");
    c.train.checkpoint_dir = dir;
    if (t.contains("adam")) {
      const json& a = t.at("adam");
      Read(a, "beta1", c.train.adam.beta1, "train.adam");
      Read(a, "beta2", c.train.adam.beta2, "train.adam");
      Read(a, "epsilon", c.train.adam.epsilon, "train.adam");
    }
  }
  if (j.contains("decode")) {
    const json& d = j.at("decode");
    Read(d, "k", c.decode.k, "decode");
    Read(d, "temperature", c.decode.temperature, "decode");
    Read(d, "max_new_tokens", c.decode.max_new_tokens, "decode");
    Read(d, "n_candidates", c.decode.n_candidates, "decode");
    Read(d, "rng_seed", c.decode.rng_seed, "decode");
  }
  if (j.contains("service")) {
    const json& s = j.at("service");
    Read(s, "bind_address", c.service.bind_address, "service");
    Read(s, "port", c.service.port, "service");
    Read(s, "checkpoint", c.service.checkpoint, "service");
    Read(s, "data_dir", c.service.data_dir, "service");
    Read(s, "auth_token", c.service.auth_token, "service");
    Read(s, "queue_capacity", c.service.queue_capacity, "service");
  }
  c.train.Validate();
  c.service.Validate();
  return c;
}

void ApplyOverride(json& j, std::string_view assignment, const json* schema) {
  const size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ValidationError("override '" + std::string(assignment) +
                          "' is not of the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  const json* leaf = schema;
  if (leaf) {
    try {
      leaf = &schema->at(json::json_pointer("/" + Replace(key, '.', '/')));
    } catch (const json::exception&) {
      leaf = nullptr;
    }
  }
  json value;
  if (leaf && leaf->is_string()) {
    value = raw;
  } else {
    value = json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (value.is_discarded()) value = raw;
  }
  json* node = &j;
  size_t start = 0;
  while (true) {
    const size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ValidationError("override key '" + key + "' is malformed");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    json& child = (*node)[part];
    if (child.is_null()) child = json::object();
    if (!child.is_object()) {
      throw ValidationError("override key '" + key + "' descends into a value");
    }
    node = &child;
    start = dot + 1;
  }
}

std::optional<std::string> ProcessEnv(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

AppConfig LoadAppConfig(const std::optional<std::filesystem::path>& file,
                        std::span<const std::string> overrides,
                        const EnvLookup& env) {
  json j = json::object();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ValidationError("cannot open config file " + file->string());
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError("config file " + file->string() + ": " + e.what());
    }
    if (!j.is_object()) throw ValidationError("config file must hold a JSON object");
  }
  const std::pair<const char*, const char*> kEnv[] = {
      {"PREFCHAT_BIND_ADDRESS", "service.bind_address"},
      {"PREFCHAT_PORT", "service.port"},
      {"PREFCHAT_CHECKPOINT", "service.checkpoint"},
      {"PREFCHAT_DATA_DIR", "service.data_dir"},
      {"PREFCHAT_AUTH_TOKEN", "service.auth_token"},
  };
  const json schema = AppConfigToJson(AppConfig{});
  for (const auto& [var, key] : kEnv) {
    if (auto v = env(var)) ApplyOverride(j, std::string(key) + "=" + *v, &schema);
  }
  for (const auto& o : overrides) ApplyOverride(j, o, &schema);
  return AppConfigFromJson(j);
}

}  // namespace prefchat

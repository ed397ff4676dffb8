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

#include "prefchat/checkpoint.h"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <type_traits>

#include "prefchat/errors.h"

namespace prefchat {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'P', 'R', 'E', 'F', 'C', 'K', 'P', 'T'};

template <typename U>
void WriteLe(std::ostream& out, U value) {
  static_assert(std::is_trivially_copyable_v<U>);
  char bytes[sizeof(U)];
  std::memcpy(bytes, &value, sizeof(U));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(U));
  }
  out.write(bytes, sizeof(U));
}

template <typename U>
U ReadLe(std::istream& in) {
  char bytes[sizeof(U)];
  if (!in.read(bytes, sizeof(U))) throw FormatError("truncated checkpoint");
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(U));
  }
  U value;
  std::memcpy(&value, bytes, sizeof(U));
  return value;
}

template <typename T>
constexpr const char* DtypeName() {
  return std::is_same_v<T, float> ? "float32" : "float64";
}

struct ArrayRef {
  std::string name;
  const void* data;
  size_t count;
  int rows, cols;
};

template <typename Stored, typename T>
std::vector<T> ReadArray(std::istream& in, size_t count) {
  std::vector<T> out(count);
  for (size_t i = 0; i < count; ++i) out[i] = static_cast<T>(ReadLe<Stored>(in));
  return out;
}

}  // namespace

json ModelConfigToJson(const ModelConfig& c) {
  return {{"n_layers", c.n_layers},
          {"n_heads", c.n_heads},
          {"d_model", c.d_model},
          {"max_context_len", c.max_context_len},
          {"max_response_len", c.max_response_len},
          {"vocab_size", c.vocab_size},
          {"seed", c.seed}};
}

ModelConfig ModelConfigFromJson(const json& j) {
  ModelConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "n_layers") c.n_layers = value.get<int>();
      else if (key == "n_heads") c.n_heads = value.get<int>();
      else if (key == "d_model") c.d_model = value.get<int>();
      else if (key == "max_context_len") c.max_context_len = value.get<int>();
      else if (key == "max_response_len") c.max_response_len = value.get<int>();
      else if (key == "vocab_size") c.vocab_size = value.get<int>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else throw ValidationError("unknown model config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("model config: ") + e.what());
  }
  return c;
}

template <typename T>
void WriteCheckpoint(std::ostream& out, const DialogueModel<T>& model,
                     const TrainingState<T>* state) {
  std::vector<ArrayRef> arrays;
  for (const auto& spec : model.layout().tensors()) {
    arrays.push_back({spec.name, model.parameters().data() + spec.offset,
                      spec.size(), spec.rows, spec.cols});
  }
  json header = {
      {"format_version", kCheckpointFormatVersion},
      {"dtype", DtypeName<T>()},
      {"config", ModelConfigToJson(model.config())},
      {"vocabulary", model.vocabulary().RegularTokens()},
  };
  if (state) {
    if (state->adam_m.size() != model.parameter_count() ||
        state->adam_v.size() != model.parameter_count()) {
      throw ValidationError("optimizer state size mismatch");
    }
    header["training"] = {{"step", state->step},
                          {"epochs_completed", state->epochs_completed}};
    const int n = static_cast<int>(model.parameter_count());
    arrays.push_back({"optimizer.adam_m", state->adam_m.data(), state->adam_m.size(), 1, n});
    arrays.push_back({"optimizer.adam_v", state->adam_v.data(), state->adam_v.size(), 1, n});
  }
  json table = json::array();
  size_t offset = 0;
  for (const auto& a : arrays) {
    table.push_back({{"name", a.name},
                     {"shape", {a.rows, a.cols}},
                     {"offset", offset},
                     {"count", a.count}});
    offset += a.count * sizeof(T);
  }
  header["arrays"] = std::move(table);
  const std::string text = header.dump();

  out.write(kMagic, sizeof(kMagic));
  WriteLe<uint32_t>(out, kCheckpointFormatVersion);
  WriteLe<uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : arrays) {
    const T* p = static_cast<const T*>(a.data);
    for (size_t i = 0; i < a.count; ++i) WriteLe<T>(out, p[i]);
  }
  if (!out) throw Error("failed writing checkpoint");
}

namespace {

json ReadHeader(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a checkpoint file (bad magic)");
  }
  const uint32_t version = ReadLe<uint32_t>(in);
  if (version != kCheckpointFormatVersion) {
    throw FormatError("unsupported checkpoint format version " +
                      std::to_string(version));
  }
  const uint64_t size = ReadLe<uint64_t>(in);
  std::string text(size, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(size))) {
    throw FormatError("truncated checkpoint header");
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
}

}  // namespace

template <typename T>
DialogueModel<T> ReadCheckpoint(std::istream& in, TrainingState<T>* state) {
  const json header = ReadHeader(in);
  try {
    const std::string dtype = header.at("dtype").get<std::string>();
    if (dtype != "float32" && dtype != "float64") {
      throw FormatError("unsupported dtype " + dtype);
    }
    const ModelConfig config = ModelConfigFromJson(header.at("config"));
    Vocabulary vocab = Vocabulary::FromTokens(
        header.at("vocabulary").get<std::vector<std::string>>());
    const ParameterLayout layout(config);
    std::vector<T> params(layout.total());
    std::vector<T> adam_m, adam_v;
    const size_t width = dtype == "float32" ? 4 : 8;
    size_t expected_offset = 0;
    size_t tensor = 0;
    for (const auto& a : header.at("arrays")) {
      const std::string name = a.at("name").get<std::string>();
      const size_t count = a.at("count").get<size_t>();
      if (a.at("offset").get<size_t>() != expected_offset) {
        throw FormatError("array " + name + " is not contiguous");
      }
      expected_offset += count * width;
      std::vector<T> values = width == 4 ? ReadArray<float, T>(in, count)
                                         : ReadArray<double, T>(in, count);
      if (name == "optimizer.adam_m") {
        adam_m = std::move(values);
      } else if (name == "optimizer.adam_v") {
        adam_v = std::move(values);
      } else {
        if (tensor >= layout.tensors().size() ||
            layout.tensors()[tensor].name != name ||
            layout.tensors()[tensor].size() != count) {
          throw FormatError("unexpected array " + name);
        }
        std::copy(values.begin(), values.end(),
                  params.begin() + layout.tensors()[tensor].offset);
        ++tensor;
      }
    }
    if (tensor != layout.tensors().size()) {
      throw FormatError("checkpoint is missing parameter arrays");
    }
    if (state) {
      *state = TrainingState<T>{};
      if (header.contains("training")) {
        state->step = header["training"].at("step").get<uint64_t>();
        state->epochs_completed =
            header["training"].at("epochs_completed").get<int>();
        state->adam_m = std::move(adam_m);
        state->adam_v = std::move(adam_v);
      }
    }
    return DialogueModel<T>(config, std::move(vocab), std::move(params));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
}

template <typename T>
void SaveCheckpoint(const std::filesystem::path& path,
                    const DialogueModel<T>& model,
                    const TrainingState<T>* state) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    WriteCheckpoint(out, model, state);
  }
  std::filesystem::rename(tmp, path);
}

template <typename T>
DialogueModel<T> LoadCheckpoint(const std::filesystem::path& path,
                                TrainingState<T>* state) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  return ReadCheckpoint<T>(in, state);
}

json ReadCheckpointHeader(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint " + path.string());
  return ReadHeader(in);
}

#define PREFCHAT_INSTANTIATE_CHECKPOINT(T)                                  \
  template void WriteCheckpoint<T>(std::ostream&, const DialogueModel<T>&,  \
                                   const TrainingState<T>*);                \
  template DialogueModel<T> ReadCheckpoint<T>(std::istream&,                \
                                              TrainingState<T>*);           \
  template void SaveCheckpoint<T>(const std::filesystem::path&,             \
                                  const DialogueModel<T>&,                  \
                                  const TrainingState<T>*);                 \
  template DialogueModel<T> LoadCheckpoint<T>(const std::filesystem::path&, \
                                              TrainingState<T>*);

PREFCHAT_INSTANTIATE_CHECKPOINT(float)
PREFCHAT_INSTANTIATE_CHECKPOINT(double)

}  // namespace prefchat

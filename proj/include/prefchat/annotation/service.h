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

#ifndef PREFCHAT_ANNOTATION_SERVICE_H_
#define PREFCHAT_ANNOTATION_SERVICE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefchat/annotation/inference_queue.h"
#include "prefchat/annotation/session.h"
#include "prefchat/dataset.h"
#include "prefchat/generation.h"
#include "prefchat/model.h"

namespace prefchat::annotation {

// Source of candidate lists and chat replies.
class CandidateBackend {
 public:
  virtual ~CandidateBackend() = default;
  // Exactly kCandidatesPerTurn texts.
  virtual Generated CollectCandidates(const DialogueContext& context,
                                      uint64_t seed) = 0;
  // Candidates, their preference scores and the index of the reply.
  virtual Generated ChatReply(const DialogueContext& context, uint64_t seed) = 0;
};

class ModelBackend : public CandidateBackend {
 public:
  ModelBackend(Model model, DecodeConfig decode);
  Generated CollectCandidates(const DialogueContext& context, uint64_t seed) override;
  Generated ChatReply(const DialogueContext& context, uint64_t seed) override;

 private:
  Model model_;
  DecodeConfig decode_;
};

struct ServiceOptions {
  std::filesystem::path data_dir;
  size_t queue_capacity = 64;
  // Root of the per-turn generation seeds.
  uint64_t seed = 0;
};

struct ExportFilter {
  std::optional<Split> split;
  // Inclusive bounds compared against created_at; ISO-8601 strings order
  // chronologically. Empty means unbounded.
  std::string from;
  std::string to;
};

// Session bookkeeping behind the HTTP API. Each session has an append-only
// event log under data_dir/sessions; finished sessions are materialized as
// records under data_dir/records. Construction replays existing logs.
class AnnotationService {
 public:
  AnnotationService(ServiceOptions options,
                    std::shared_ptr<CandidateBackend> backend);

  Session Create(SessionMode mode);
  Session Get(const std::string& id) const;
  // Applies a session command and persists it. The returned session is the
  // state after the command.
  Session Execute(const std::string& id, const Command& command);
  Session ReviewRecord(const std::string& record_id, const ReviewCommand& review);

  DialogueRecord GetRecord(const std::string& id) const;
  std::vector<DialogueRecord> Records(std::optional<RecordStatus> status) const;
  // Accepted records only.
  std::vector<DialogueRecord> Export(const ExportFilter& filter) const;

  size_t session_count() const;
  const std::filesystem::path& data_dir() const { return options_.data_dir; }

 private:
  struct Entry {
    std::mutex mutation;
    mutable std::mutex snapshot_mu;
    std::shared_ptr<const Session> snapshot;

    std::shared_ptr<const Session> Load() const;
    void Store(Session s);
  };

  std::shared_ptr<Entry> Find(const std::string& id) const;
  Generated Generate(const Session& session, const DialogueContext& context,
                     size_t turn_index);
  void AppendEvent(const std::string& id, const nlohmann::json& event);
  void WriteRecord(const Session& session);
  void Recover();

  ServiceOptions options_;
  std::shared_ptr<CandidateBackend> backend_;
  InferenceQueue queue_;
  mutable std::shared_mutex map_mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

std::string UtcNow();

}  // namespace prefchat::annotation

#endif  // PREFCHAT_ANNOTATION_SERVICE_H_

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

#include "prefchat/annotation/service.h"

#include <chrono>
#include <ctime>
#include <fstream>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "prefchat/errors.h"
#include "prefchat/rng.h"

namespace prefchat::annotation {

namespace fs = std::filesystem;
using nlohmann::json;

std::string UtcNow() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ModelBackend::ModelBackend(Model model, DecodeConfig decode)
    : model_(std::move(model)), decode_(decode) {
  decode_.Validate(model_.config());
}

Generated ModelBackend::CollectCandidates(const DialogueContext& context,
                                          uint64_t seed) {
  DecodeConfig cfg = decode_;
  cfg.n_candidates = static_cast<int>(kCandidatesPerTurn);
  cfg.rng_seed = seed;
  Generated g;
  for (auto& c : GenerateCandidates(model_, context, cfg)) {
    g.candidates.push_back(std::move(c.text));
    g.scores.push_back(c.preference_score);
  }
  return g;
}

Generated ModelBackend::ChatReply(const DialogueContext& context, uint64_t seed) {
  DecodeConfig cfg = decode_;
  cfg.rng_seed = seed;
  Response r = Respond(model_, context, cfg);
  Generated g;
  for (auto& c : r.candidates) {
    g.candidates.push_back(std::move(c.text));
    g.scores.push_back(c.preference_score);
  }
  g.chosen = r.chosen;
  return g;
}

std::shared_ptr<const Session> AnnotationService::Entry::Load() const {
  std::lock_guard lock(snapshot_mu);
  return snapshot;
}

void AnnotationService::Entry::Store(Session s) {
  auto next = std::make_shared<const Session>(std::move(s));
  std::lock_guard lock(snapshot_mu);
  snapshot = std::move(next);
}

AnnotationService::AnnotationService(ServiceOptions options,
                                     std::shared_ptr<CandidateBackend> backend)
    : options_(std::move(options)),
      backend_(std::move(backend)),
      queue_(options_.queue_capacity) {
  if (options_.data_dir.empty()) throw ValidationError("data_dir is required");
  fs::create_directories(options_.data_dir / "sessions");
  fs::create_directories(options_.data_dir / "records");
  Recover();
}

std::shared_ptr<AnnotationService::Entry> AnnotationService::Find(
    const std::string& id) const {
  std::shared_lock lock(map_mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) {
    throw ApiError(ApiError::Code::kNotFound, "no session '" + id + "'");
  }
  return it->second;
}

Session AnnotationService::Create(SessionMode mode) {
  static thread_local Rng rng(std::random_device{}());
  std::string id;
  std::shared_ptr<Entry> entry = std::make_shared<Entry>();
  Session s;
  {
    std::unique_lock lock(map_mu_);
    do {
      id = fmt::format("s-{:016x}", rng());
    } while (sessions_.count(id));
    s = NewSession(id, mode, UtcNow());
    entry->Store(s);
    sessions_.emplace(id, entry);
  }
  std::lock_guard guard(entry->mutation);
  try {
    AppendEvent(id, {{"type", "create"},
                     {"id", id},
                     {"mode", ModeName(mode)},
                     {"created_at", s.created_at}});
  } catch (...) {
    std::unique_lock lock(map_mu_);
    sessions_.erase(id);
    throw;
  }
  return s;
}

Session AnnotationService::Get(const std::string& id) const {
  return *Find(id)->Load();
}

Generated AnnotationService::Generate(const Session& session,
                                      const DialogueContext& context,
                                      size_t turn_index) {
  const uint64_t seed = MixSeed({options_.seed, HashString(session.id),
                                 static_cast<uint64_t>(turn_index)});
  const bool collect = session.mode == SessionMode::kCollect;
  return queue_.Run([&] {
    return collect ? backend_->CollectCandidates(context, seed)
                   : backend_->ChatReply(context, seed);
  });
}

Session AnnotationService::Execute(const std::string& id, const Command& command) {
  std::shared_ptr<Entry> entry = Find(id);
  std::lock_guard guard(entry->mutation);
  const std::shared_ptr<const Session> current = entry->Load();
  Transition t = Apply(*current, command,
                       [&](const DialogueContext& ctx, size_t turn_index) {
                         return Generate(*current, ctx, turn_index);
                       });
  json event = {{"type", "command"},
                {"at", UtcNow()},
                {"command", CommandToJson(command)},
                {"generated", t.generated ? GeneratedToJson(*t.generated) : json(nullptr)}};
  AppendEvent(id, event);
  entry->Store(t.session);
  if (t.session.state != current->state &&
      (t.session.state == SessionState::kFinished ||
       t.session.state == SessionState::kAccepted ||
       t.session.state == SessionState::kRejected)) {
    WriteRecord(t.session);
  }
  return t.session;
}

Session AnnotationService::ReviewRecord(const std::string& record_id,
                                        const ReviewCommand& review) {
  return Execute(record_id, review);
}

DialogueRecord AnnotationService::GetRecord(const std::string& id) const {
  const Session s = Get(id);
  if (s.state != SessionState::kFinished && s.state != SessionState::kAccepted &&
      s.state != SessionState::kRejected) {
    throw ApiError(ApiError::Code::kNotFound, "session '" + id + "' has no record yet");
  }
  return ToRecord(s);
}

std::vector<DialogueRecord> AnnotationService::Records(
    std::optional<RecordStatus> status) const {
  std::vector<std::shared_ptr<Entry>> entries;
  {
    std::shared_lock lock(map_mu_);
    for (const auto& [id, e] : sessions_) entries.push_back(e);
  }
  std::vector<DialogueRecord> out;
  for (const auto& e : entries) {
    const auto s = e->Load();
    if (s->state != SessionState::kFinished && s->state != SessionState::kAccepted &&
        s->state != SessionState::kRejected) {
      continue;
    }
    DialogueRecord r = ToRecord(*s);
    if (!status || r.status == *status) out.push_back(std::move(r));
  }
  return out;
}

std::vector<DialogueRecord> AnnotationService::Export(const ExportFilter& f) const {
  std::vector<DialogueRecord> out;
  for (auto& r : Records(RecordStatus::kAccepted)) {
    if (f.split && r.split != *f.split) continue;
    if (!f.from.empty() && r.created_at < f.from) continue;
    // A bare date as upper bound covers that whole day.
    if (!f.to.empty() && r.created_at.substr(0, f.to.size()) > f.to) continue;
    out.push_back(std::move(r));
  }
  return out;
}

size_t AnnotationService::session_count() const {
  std::shared_lock lock(map_mu_);
  return sessions_.size();
}

void AnnotationService::AppendEvent(const std::string& id, const json& event) {
  const fs::path path = options_.data_dir / "sessions" / (id + ".jsonl");
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << event.dump() << '\n';
  out.flush();
  if (!out) {
    throw ApiError(ApiError::Code::kInternal, "cannot append to event log",
                   {{"path", path.string()}});
  }
}

void AnnotationService::WriteRecord(const Session& session) {
  const fs::path dir = options_.data_dir / "records";
  const fs::path tmp = dir / (session.id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << RecordToJson(ToRecord(session)).dump() << '\n';
    if (!out) {
      throw ApiError(ApiError::Code::kInternal, "cannot write record",
                     {{"path", tmp.string()}});
    }
  }
  fs::rename(tmp, dir / (session.id + ".json"));
}

void AnnotationService::Recover() {
  size_t recovered = 0;
  for (const auto& file : fs::directory_iterator(options_.data_dir / "sessions")) {
    if (file.path().extension() != ".jsonl") continue;
    std::ifstream in(file.path(), std::ios::binary);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) lines.push_back(std::move(line));
    }
    if (lines.empty()) continue;
    Session s;
    bool created = false;
    for (size_t i = 0; i < lines.size(); ++i) {
      json event = json::parse(lines[i], nullptr, /*allow_exceptions=*/false);
      if (event.is_discarded()) {
        if (i + 1 == lines.size()) {
          spdlog::warn("{}: dropping torn final event", file.path().string());
          lines.pop_back();
          std::ofstream out(file.path(), std::ios::binary | std::ios::trunc);
          for (const auto& l : lines) out << l << '\n';
          break;
        }
        throw FormatError(file.path().string() + ": corrupt event on line " +
                          std::to_string(i + 1));
      }
      try {
        if (i == 0) {
          s = NewSession(event.at("id").get<std::string>(),
                         ParseMode(event.at("mode").get<std::string>()),
                         event.at("created_at").get<std::string>());
          created = true;
          continue;
        }
        std::optional<Generated> logged;
        if (!event.at("generated").is_null()) {
          logged = GeneratedFromJson(event.at("generated"));
        }
        Transition t = Apply(s, CommandFromJson(event.at("command")),
                             [&](const DialogueContext&, size_t) {
                               if (!logged) {
                                 throw ApiError(ApiError::Code::kInternal,
                                                "event log lacks generated output");
                               }
                               return *logged;
                             });
        s = std::move(t.session);
      } catch (const std::exception& e) {
        throw FormatError(file.path().string() + ": cannot replay line " +
                          std::to_string(i + 1) + ": " + e.what());
      }
    }
    if (!created) continue;
    auto entry = std::make_shared<Entry>();
    entry->Store(s);
    sessions_.emplace(s.id, entry);
    if (s.state == SessionState::kFinished || s.state == SessionState::kAccepted ||
        s.state == SessionState::kRejected) {
      WriteRecord(s);
    }
    ++recovered;
  }
  if (recovered > 0) spdlog::info("recovered {} sessions", recovered);
}

}  // namespace prefchat::annotation

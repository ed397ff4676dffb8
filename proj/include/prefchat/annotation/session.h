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

#ifndef PREFCHAT_ANNOTATION_SESSION_H_
#define PREFCHAT_ANNOTATION_SESSION_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "prefchat/dataset.h"
#include "prefchat/dialogue.h"

namespace prefchat::annotation {

inline constexpr int kMinRounds = kMinAnnotatedRounds;
inline constexpr int kMaxChatRounds = 14;

// Error surfaced to API clients as {code, message, detail}.
class ApiError : public std::runtime_error {
 public:
  enum class Code {
    kValidation,
    kStateConflict,
    kNotFound,
    kUnauthorized,
    kUnavailable,
    kInternal,
  };

  ApiError(Code code, std::string message, nlohmann::json detail = nullptr)
      : std::runtime_error(std::move(message)),
        code_(code),
        detail_(std::move(detail)) {}

  Code code() const { return code_; }
  const nlohmann::json& detail() const { return detail_; }
  std::string_view code_name() const;
  int http_status() const;

 private:
  Code code_;
  nlohmann::json detail_;
};

enum class SessionMode { kCollect, kChat };
// `finished` sessions hold a record under review; review moves them on to
// accepted or rejected.
enum class SessionState {
  kAwaitingOpening,
  kAwaitingResponse,
  kCandidatesReady,
  kFinished,
  kAccepted,
  kRejected,
};

std::string_view ModeName(SessionMode m);
SessionMode ParseMode(std::string_view s);
std::string_view StateName(SessionState s);
SessionState ParseState(std::string_view s);

struct Review {
  std::string verdict;  // "accept" or "reject"
  std::string reviewer_id;

  bool operator==(const Review&) const = default;
};

struct Session {
  std::string id;
  SessionMode mode = SessionMode::kCollect;
  SessionState state = SessionState::kAwaitingOpening;
  std::vector<AnnotatedTurn> turns;
  // The seven texts on offer for the next collect-mode turn.
  std::vector<std::string> pending_candidates;
  // Annotated turns (collect) or completed user/bot exchanges (chat).
  int round_count = 0;
  std::string created_at;
  std::optional<Review> review;

  bool operator==(const Session&) const = default;
};

Session NewSession(std::string id, SessionMode mode, std::string created_at);

// Requests. expected_round, when given, must equal the current round_count
// or the request fails with a state conflict.
struct OpeningCommand {
  std::string text;
  std::optional<int> expected_round;
};
struct ResponseCommand {
  std::string action;  // select, revise or rewrite
  std::optional<size_t> chosen_index;
  std::string text;
  std::optional<int> expected_round;
};
struct MessageCommand {
  std::string text;
  std::optional<int> expected_round;
};
struct FinishCommand {
  std::optional<int> expected_round;
};
struct ReviewCommand {
  std::string verdict;
  std::string reviewer_id;
};
using Command = std::variant<OpeningCommand, ResponseCommand, MessageCommand,
                             FinishCommand, ReviewCommand>;

// Model output consumed by a transition: the candidate list offered next
// (collect) or the bot reply with its reranked candidates (chat).
struct Generated {
  std::vector<std::string> candidates;
  std::vector<double> scores;
  size_t chosen = 0;

  bool operator==(const Generated&) const = default;
};

// Produces model output for a context. `turn_index` is the index the
// generated turn will occupy.
using GenerateFn =
    std::function<Generated(const DialogueContext& context, size_t turn_index)>;

struct Transition {
  Session session;
  // What the generator returned, for the event log; empty when unused.
  std::optional<Generated> generated;
};

// Pure state machine. Validates `command` against `session`, calls
// `generate` at most once and returns the successor. Throws ApiError and
// leaves nothing modified when the command is not allowed.
Transition Apply(const Session& session, const Command& command,
                 const GenerateFn& generate);

// The record a finished session hands to review (status under_review,
// accepted or rejected following the session).
DialogueRecord ToRecord(const Session& session);

nlohmann::json CommandToJson(const Command& command);
Command CommandFromJson(const nlohmann::json& j);
nlohmann::json GeneratedToJson(const Generated& g);
Generated GeneratedFromJson(const nlohmann::json& j);
nlohmann::json SessionToJson(const Session& session);

}  // namespace prefchat::annotation

#endif  // PREFCHAT_ANNOTATION_SESSION_H_

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

#include "prefchat/annotation/session.h"

#include <algorithm>
#include <array>

#include "prefchat/errors.h"

namespace prefchat::annotation {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<SessionState, std::string_view>, 6> kStates = {{
    {SessionState::kAwaitingOpening, "awaiting_opening"},
    {SessionState::kAwaitingResponse, "awaiting_response"},
    {SessionState::kCandidatesReady, "candidates_ready"},
    {SessionState::kFinished, "finished"},
    {SessionState::kAccepted, "accepted"},
    {SessionState::kRejected, "rejected"},
}};

[[noreturn]] void Conflict(const Session& s, const std::string& what) {
  throw ApiError(ApiError::Code::kStateConflict, what,
                 {{"state", StateName(s.state)}, {"round_count", s.round_count}});
}

[[noreturn]] void Invalid(const std::string& what, json detail = nullptr) {
  throw ApiError(ApiError::Code::kValidation, what, std::move(detail));
}

void RequireState(const Session& s, SessionMode mode,
                  std::initializer_list<SessionState> allowed, const char* op) {
  if (s.mode != mode) {
    Conflict(s, std::string(op) + " is not available in " +
                    std::string(ModeName(s.mode)) + " mode");
  }
  if (std::find(allowed.begin(), allowed.end(), s.state) == allowed.end()) {
    Conflict(s, std::string(op) + " is not allowed in state " +
                    std::string(StateName(s.state)));
  }
}

void CheckRound(const Session& s, const std::optional<int>& expected) {
  if (expected && *expected != s.round_count) {
    Conflict(s, "expected round " + std::to_string(*expected) +
                    " but the session is at round " +
                    std::to_string(s.round_count));
  }
}

void RequireText(const std::string& text) {
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    Invalid("text must not be empty");
  }
}

DialogueContext ContextOf(const Session& s) {
  DialogueContext ctx;
  for (const auto& t : s.turns) ctx.utterances.push_back({t.speaker_role, t.final_text});
  return ctx;
}

Generated Call(const GenerateFn& generate, const Session& s) {
  try {
    return generate(ContextOf(s), s.turns.size());
  } catch (const ApiError&) {
    throw;
  } catch (const ValidationError& e) {
    Invalid(e.what());
  }
}

void RequireCandidates(const Generated& g) {
  if (g.candidates.size() != kCandidatesPerTurn) {
    throw ApiError(ApiError::Code::kInternal,
                   "generator returned " + std::to_string(g.candidates.size()) +
                       " candidates, expected " +
                       std::to_string(kCandidatesPerTurn));
  }
}

Transition OnOpening(const Session& s, const OpeningCommand& c,
                     const GenerateFn& generate) {
  RequireState(s, SessionMode::kCollect, {SessionState::kAwaitingOpening}, "opening");
  CheckRound(s, c.expected_round);
  RequireText(c.text);
  Transition t{s, std::nullopt};
  t.session.turns.push_back({Role::kA, c.text, Action::kOpening, {}, {}, {}});
  Generated g = Call(generate, t.session);
  RequireCandidates(g);
  t.session.pending_candidates = g.candidates;
  t.session.state = SessionState::kCandidatesReady;
  t.generated = std::move(g);
  return t;
}

Transition OnResponse(const Session& s, const ResponseCommand& c,
                      const GenerateFn& generate) {
  RequireState(s, SessionMode::kCollect, {SessionState::kCandidatesReady}, "response");
  CheckRound(s, c.expected_round);
  RequireText(c.text);
  const auto& shown = s.pending_candidates;
  Action action;
  std::optional<size_t> index = c.chosen_index;
  if (c.action == "select" || c.action == "revise") {
    action = c.action == "select" ? Action::kSelect : Action::kRevise;
    if (!index) Invalid(c.action + " requires chosen_index", {{"rule", "chosen_index_required"}});
    if (*index >= shown.size()) {
      Invalid("chosen_index " + std::to_string(*index) + " out of range",
              {{"rule", "chosen_index_range"}, {"candidates", shown.size()}});
    }
    if (action == Action::kSelect && c.text != shown[*index]) {
      Invalid("select text must equal the chosen candidate verbatim",
              {{"rule", "select_verbatim"}, {"chosen_index", *index}});
    }
    if (action == Action::kRevise && c.text == shown[*index]) {
      Invalid("revise text must differ from the chosen candidate",
              {{"rule", "revise_differs"}, {"chosen_index", *index}});
    }
  } else if (c.action == "rewrite") {
    action = Action::kRewrite;
    if (index) Invalid("rewrite must not carry chosen_index", {{"rule", "rewrite_no_index"}});
    // A typed text identical to a candidate is recorded as a selection.
    auto it = std::find(shown.begin(), shown.end(), c.text);
    if (it != shown.end()) {
      action = Action::kSelect;
      index = static_cast<size_t>(it - shown.begin());
    }
  } else {
    Invalid("unknown action '" + c.action + "'", {{"rule", "action"}});
  }
  Transition t{s, std::nullopt};
  AnnotatedTurn turn;
  turn.speaker_role = Other(s.turns.back().speaker_role);
  turn.final_text = c.text;
  turn.action = action;
  turn.shown_candidates = shown;
  turn.chosen_index = index;
  t.session.turns.push_back(std::move(turn));
  t.session.round_count += 1;
  Generated g = Call(generate, t.session);
  RequireCandidates(g);
  t.session.pending_candidates = g.candidates;
  t.generated = std::move(g);
  return t;
}

Transition OnMessage(const Session& s, const MessageCommand& c,
                     const GenerateFn& generate) {
  RequireState(s, SessionMode::kChat, {SessionState::kAwaitingResponse}, "message");
  CheckRound(s, c.expected_round);
  if (s.round_count >= kMaxChatRounds) {
    Conflict(s, "chat sessions end after " + std::to_string(kMaxChatRounds) +
                    " rounds; finish the session");
  }
  RequireText(c.text);
  Transition t{s, std::nullopt};
  t.session.turns.push_back({Role::kA, c.text, Action::kHuman, {}, {}, {}});
  Generated g = Call(generate, t.session);
  if (g.candidates.empty() || g.chosen >= g.candidates.size() ||
      (!g.scores.empty() && g.scores.size() != g.candidates.size())) {
    throw ApiError(ApiError::Code::kInternal, "generator returned a malformed reply");
  }
  AnnotatedTurn bot;
  bot.speaker_role = Role::kB;
  bot.final_text = g.candidates[g.chosen];
  bot.action = Action::kBot;
  bot.shown_candidates = g.candidates;
  bot.chosen_index = g.chosen;
  bot.candidate_scores = g.scores;
  t.session.turns.push_back(std::move(bot));
  t.session.round_count += 1;
  t.generated = std::move(g);
  return t;
}

Transition OnFinish(const Session& s, const FinishCommand& c) {
  const bool collect = s.mode == SessionMode::kCollect;
  RequireState(s, s.mode,
               {collect ? SessionState::kCandidatesReady
                        : SessionState::kAwaitingResponse},
               "finish");
  CheckRound(s, c.expected_round);
  if (s.round_count < kMinRounds) {
    const int remaining = kMinRounds - s.round_count;
    Invalid("at least " + std::to_string(kMinRounds) + " rounds are required; " +
                std::to_string(remaining) + " remaining",
            {{"round_count", s.round_count}, {"rounds_remaining", remaining}});
  }
  Transition t{s, std::nullopt};
  t.session.pending_candidates.clear();
  t.session.state = SessionState::kFinished;
  return t;
}

Transition OnReview(const Session& s, const ReviewCommand& c) {
  if (s.state != SessionState::kFinished) {
    Conflict(s, "only records under review can be reviewed");
  }
  if (c.verdict != "accept" && c.verdict != "reject") {
    Invalid("verdict must be 'accept' or 'reject'", {{"rule", "verdict"}});
  }
  if (c.reviewer_id.empty()) Invalid("reviewer_id is required", {{"rule", "reviewer_id"}});
  Transition t{s, std::nullopt};
  t.session.state =
      c.verdict == "accept" ? SessionState::kAccepted : SessionState::kRejected;
  t.session.review = Review{c.verdict, c.reviewer_id};
  return t;
}

json OptionalInt(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

std::optional<int> ReadOptionalInt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<int>();
}

}  // namespace

std::string_view ApiError::code_name() const {
  switch (code_) {
    case Code::kValidation: return "validation_error";
    case Code::kStateConflict: return "state_conflict";
    case Code::kNotFound: return "not_found";
    case Code::kUnauthorized: return "unauthorized";
    case Code::kUnavailable: return "unavailable";
    case Code::kInternal: return "internal";
  }
  return "internal";
}

int ApiError::http_status() const {
  switch (code_) {
    case Code::kValidation: return 400;
    case Code::kStateConflict: return 409;
    case Code::kNotFound: return 404;
    case Code::kUnauthorized: return 401;
    case Code::kUnavailable: return 503;
    case Code::kInternal: return 500;
  }
  return 500;
}

std::string_view ModeName(SessionMode m) {
  return m == SessionMode::kCollect ? "collect" : "chat";
}

SessionMode ParseMode(std::string_view s) {
  if (s == "collect") return SessionMode::kCollect;
  if (s == "chat") return SessionMode::kChat;
  throw ApiError(ApiError::Code::kValidation,
                 "mode must be 'collect' or 'chat'", {{"rule", "mode"}});
}

std::string_view StateName(SessionState s) {
  for (const auto& [state, name] : kStates) {
    if (state == s) return name;
  }
  return "?";
}

SessionState ParseState(std::string_view s) {
  for (const auto& [state, name] : kStates) {
    if (name == s) return state;
  }
  throw FormatError("unknown session state '" + std::string(s) + "'");
}

Session NewSession(std::string id, SessionMode mode, std::string created_at) {
  Session s;
  s.id = std::move(id);
  s.mode = mode;
  s.state = mode == SessionMode::kCollect ? SessionState::kAwaitingOpening
                                          : SessionState::kAwaitingResponse;
  s.created_at = std::move(created_at);
  return s;
}

Transition Apply(const Session& session, const Command& command,
                 const GenerateFn& generate) {
  return std::visit(
      [&](const auto& c) -> Transition {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, OpeningCommand>) {
          return OnOpening(session, c, generate);
        } else if constexpr (std::is_same_v<C, ResponseCommand>) {
          return OnResponse(session, c, generate);
        } else if constexpr (std::is_same_v<C, MessageCommand>) {
          return OnMessage(session, c, generate);
        } else if constexpr (std::is_same_v<C, FinishCommand>) {
          return OnFinish(session, c);
        } else {
          return OnReview(session, c);
        }
      },
      command);
}

DialogueRecord ToRecord(const Session& s) {
  DialogueRecord r;
  r.id = s.id;
  r.turns = s.turns;
  r.created_at = s.created_at;
  switch (s.state) {
    case SessionState::kFinished: r.status = RecordStatus::kUnderReview; break;
    case SessionState::kAccepted: r.status = RecordStatus::kAccepted; break;
    case SessionState::kRejected: r.status = RecordStatus::kRejected; break;
    default: r.status = RecordStatus::kInProgress; break;
  }
  return r;
}

json CommandToJson(const Command& command) {
  return std::visit(
      [](const auto& c) -> json {
        using C = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<C, OpeningCommand>) {
          return {{"type", "opening"}, {"text", c.text},
                  {"expected_round", OptionalInt(c.expected_round)}};
        } else if constexpr (std::is_same_v<C, ResponseCommand>) {
          return {{"type", "response"},
                  {"action", c.action},
                  {"chosen_index", c.chosen_index ? json(*c.chosen_index) : json(nullptr)},
                  {"text", c.text},
                  {"expected_round", OptionalInt(c.expected_round)}};
        } else if constexpr (std::is_same_v<C, MessageCommand>) {
          return {{"type", "message"}, {"text", c.text},
                  {"expected_round", OptionalInt(c.expected_round)}};
        } else if constexpr (std::is_same_v<C, FinishCommand>) {
          return {{"type", "finish"}, {"expected_round", OptionalInt(c.expected_round)}};
        } else {
          return {{"type", "review"}, {"verdict", c.verdict},
                  {"reviewer_id", c.reviewer_id}};
        }
      },
      command);
}

Command CommandFromJson(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "opening") {
    return OpeningCommand{j.at("text").get<std::string>(),
                          ReadOptionalInt(j, "expected_round")};
  }
  if (type == "response") {
    ResponseCommand c;
    c.action = j.at("action").get<std::string>();
    if (j.contains("chosen_index") && !j.at("chosen_index").is_null()) {
      c.chosen_index = j.at("chosen_index").get<size_t>();
    }
    c.text = j.at("text").get<std::string>();
    c.expected_round = ReadOptionalInt(j, "expected_round");
    return c;
  }
  if (type == "message") {
    return MessageCommand{j.at("text").get<std::string>(),
                          ReadOptionalInt(j, "expected_round")};
  }
  if (type == "finish") return FinishCommand{ReadOptionalInt(j, "expected_round")};
  if (type == "review") {
    return ReviewCommand{j.at("verdict").get<std::string>(),
                         j.at("reviewer_id").get<std::string>()};
  }
  throw FormatError("unknown command type '" + type + "'");
}

json GeneratedToJson(const Generated& g) {
  return {{"candidates", g.candidates}, {"scores", g.scores}, {"chosen", g.chosen}};
}

Generated GeneratedFromJson(const json& j) {
  Generated g;
  g.candidates = j.at("candidates").get<std::vector<std::string>>();
  g.scores = j.at("scores").get<std::vector<double>>();
  g.chosen = j.at("chosen").get<size_t>();
  return g;
}

json SessionToJson(const Session& s) {
  json turns = json::array();
  for (const auto& t : s.turns) {
    json jt = {{"speaker_role", RoleName(t.speaker_role)},
               {"final_text", t.final_text},
               {"action", ActionName(t.action)},
               {"shown_candidates", t.shown_candidates},
               {"chosen_index", t.chosen_index ? json(*t.chosen_index) : json(nullptr)}};
    if (!t.candidate_scores.empty()) jt["candidate_scores"] = t.candidate_scores;
    turns.push_back(std::move(jt));
  }
  const bool collect = s.mode == SessionMode::kCollect;
  const bool open = s.state == SessionState::kCandidatesReady ||
                    s.state == SessionState::kAwaitingResponse;
  json j = {{"id", s.id},
            {"mode", ModeName(s.mode)},
            {"state", StateName(s.state)},
            {"round_count", s.round_count},
            {"min_rounds", kMinRounds},
            {"can_finish", open && s.round_count >= kMinRounds},
            {"turns", std::move(turns)},
            {"pending_candidates", s.pending_candidates},
            {"created_at", s.created_at},
            {"record_status", StatusName(ToRecord(s).status)}};
  if (!collect) j["max_rounds"] = kMaxChatRounds;
  if (s.review) {
    j["review"] = {{"verdict", s.review->verdict}, {"reviewer_id", s.review->reviewer_id}};
  }
  return j;
}

}  // namespace prefchat::annotation

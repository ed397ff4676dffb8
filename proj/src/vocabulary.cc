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

#include "prefchat/vocabulary.h"

#include <algorithm>
#include <set>

#include "prefchat/errors.h"

namespace prefchat {
namespace {

constexpr const char* kSpecialNames[Vocabulary::kNumSpecial] = {
    "<pad>", "<bos>", "<eos>", "<sep>", "<score>"};

size_t CodePointLength(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 0;
}

}  // namespace

std::vector<std::string_view> SplitCodePoints(std::string_view text) {
  std::vector<std::string_view> out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    const size_t len = CodePointLength(static_cast<unsigned char>(text[i]));
    if (len == 0 || i + len > text.size()) {
      throw FormatError("malformed UTF-8 at byte " + std::to_string(i));
    }
    for (size_t j = 1; j < len; ++j) {
      if ((static_cast<unsigned char>(text[i + j]) & 0xC0) != 0x80) {
        throw FormatError("malformed UTF-8 at byte " + std::to_string(i + j));
      }
    }
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Vocabulary Vocabulary::Ascii() {
  std::vector<std::string> tokens;
  for (char c = 0x20; c < 0x7F; ++c) tokens.emplace_back(1, c);
  return FromTokens(std::move(tokens));
}

Vocabulary Vocabulary::FromTexts(std::span<const std::string> texts) {
  std::set<std::string> seen;
  for (const auto& t : texts) {
    for (auto cp : SplitCodePoints(t)) seen.emplace(cp);
  }
  return FromTokens({seen.begin(), seen.end()});
}

Vocabulary Vocabulary::FromTokens(std::vector<std::string> tokens) {
  Vocabulary v;
  v.tokens_.reserve(tokens.size() + kNumSpecial);
  for (const char* name : kSpecialNames) v.tokens_.emplace_back(name);
  for (auto& t : tokens) {
    if (SplitCodePoints(t).size() != 1) {
      throw ValidationError("vocabulary token '" + t +
                            "' is not a single code point");
    }
    v.tokens_.push_back(std::move(t));
  }
  v.Index();
  return v;
}

void Vocabulary::Index() {
  token_to_id_.clear();
  for (int i = kNumSpecial; i < size(); ++i) {
    if (!token_to_id_.emplace(tokens_[i], i).second) {
      throw ValidationError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

bool Vocabulary::Contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) > 0;
}

int Vocabulary::Id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) throw OutOfVocabularyError(std::string(token));
  return it->second;
}

const std::string& Vocabulary::Token(int id) const {
  if (id < 0 || id >= size()) {
    throw ValidationError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

std::vector<std::string> Vocabulary::RegularTokens() const {
  return {tokens_.begin() + kNumSpecial, tokens_.end()};
}

std::vector<int> Vocabulary::Encode(std::string_view text) const {
  std::vector<int> ids;
  for (auto cp : SplitCodePoints(text)) ids.push_back(Id(cp));
  return ids;
}

std::string Vocabulary::Decode(std::span<const int> ids) const {
  std::string out;
  for (int id : ids) out += Token(id);
  return out;
}

}  // namespace prefchat

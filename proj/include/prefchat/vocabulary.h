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

#ifndef PREFCHAT_VOCABULARY_H_
#define PREFCHAT_VOCABULARY_H_

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace prefchat {

// Splits UTF-8 text into code points. Throws FormatError on malformed input.
std::vector<std::string_view> SplitCodePoints(std::string_view text);

// Character-level vocabulary. Ids 0..4 are the special tokens; regular tokens
// are single UTF-8 code points and follow contiguously.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBos = 1;
  static constexpr int kEos = 2;
  static constexpr int kSep = 3;
  static constexpr int kScore = 4;
  static constexpr int kNumSpecial = 5;

  // Printable ASCII (0x20..0x7E).
  static Vocabulary Ascii();
  // Every code point appearing in `texts`, sorted bytewise.
  static Vocabulary FromTexts(std::span<const std::string> texts);
  // `tokens` lists the regular tokens in id order (without specials).
  static Vocabulary FromTokens(std::vector<std::string> tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  bool IsSpecial(int id) const { return id >= 0 && id < kNumSpecial; }
  bool Contains(std::string_view token) const;
  int Id(std::string_view token) const;
  const std::string& Token(int id) const;

  // Regular tokens only, in id order.
  std::vector<std::string> RegularTokens() const;

  std::vector<int> Encode(std::string_view text) const;
  // Specials render as their bracketed names, e.g. "<sep>".
  std::string Decode(std::span<const int> ids) const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  Vocabulary() = default;
  void Index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> token_to_id_;
};

}  // namespace prefchat

#endif  // PREFCHAT_VOCABULARY_H_

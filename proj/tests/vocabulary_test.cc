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

#include <gtest/gtest.h>

#include "prefchat/errors.h"

namespace prefchat {
namespace {

TEST(VocabularyTest, AsciiHasSpecialsFollowedByPrintables) {
  const Vocabulary v = Vocabulary::Ascii();
  EXPECT_EQ(v.size(), Vocabulary::kNumSpecial + 95);
  EXPECT_EQ(v.Id(" "), Vocabulary::kNumSpecial);
  EXPECT_EQ(v.Id("~"), v.size() - 1);
  EXPECT_TRUE(v.IsSpecial(Vocabulary::kScore));
  EXPECT_FALSE(v.IsSpecial(Vocabulary::kNumSpecial));
}

TEST(VocabularyTest, EncodeDecodeRoundTrip) {
  const Vocabulary v = Vocabulary::Ascii();
  const std::string text = "Hello, world! 42 ~{}";
  EXPECT_EQ(v.Decode(v.Encode(text)), text);
}

TEST(VocabularyTest, SpecialsDecodeToBracketedNames) {
  const Vocabulary v = Vocabulary::Ascii();
  const std::vector<int> ids{Vocabulary::kBos, v.Id("a"), Vocabulary::kSep};
  EXPECT_EQ(v.Decode(ids), "<bos>a<sep>");
}

TEST(VocabularyTest, OutOfVocabularyNamesTheToken) {
  const Vocabulary v = Vocabulary::Ascii();
  try {
    v.Encode("caf\xC3\xA9");
    FAIL() << "expected OutOfVocabularyError";
  } catch (const OutOfVocabularyError& e) {
    EXPECT_EQ(e.token(), "\xC3\xA9");
    EXPECT_NE(std::string(e.what()).find("\xC3\xA9"), std::string::npos);
  }
}

TEST(VocabularyTest, FromTextsCollectsSortedCodePoints) {
  const std::vector<std::string> texts{"bca", "\xC3\xA9" "a"};
  const Vocabulary v = Vocabulary::FromTexts(texts);
  const std::vector<std::string> expected{"a", "b", "c", "\xC3\xA9"};
  EXPECT_EQ(v.RegularTokens(), expected);
  EXPECT_EQ(v.Encode("\xC3\xA9"), std::vector<int>{Vocabulary::kNumSpecial + 3});
}

TEST(VocabularyTest, FromTokensRejectsDuplicates) {
  EXPECT_THROW(Vocabulary::FromTokens({"a", "b", "a"}), ValidationError);
}

TEST(VocabularyTest, MalformedUtf8IsAFormatError) {
  EXPECT_THROW(SplitCodePoints("ab\xC3"), FormatError);
  EXPECT_THROW(SplitCodePoints("\xFF"), FormatError);
  EXPECT_EQ(SplitCodePoints("a\xE2\x82\xAC" "b").size(), 3u);
}

TEST(VocabularyTest, TokenLookupOutOfRangeThrows) {
  const Vocabulary v = Vocabulary::Ascii();
  EXPECT_THROW(v.Token(v.size()), ValidationError);
  EXPECT_THROW(v.Token(-1), ValidationError);
}

}  // namespace
}  // namespace prefchat

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

#ifndef PREFCHAT_ERRORS_H_
#define PREFCHAT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace prefchat {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller-supplied input violates a documented precondition or invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class OutOfVocabularyError : public ValidationError {
 public:
  explicit OutOfVocabularyError(std::string token)
      : ValidationError("out-of-vocabulary token '" + token + "'"),
        token_(std::move(token)) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

// A file or wire payload could not be parsed.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Loss or gradient became non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace prefchat

#endif  // PREFCHAT_ERRORS_H_

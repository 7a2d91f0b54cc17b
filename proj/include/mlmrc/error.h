// Copyright 2026 The mlmrc Authors.
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

#ifndef MLMRC_ERROR_H_
#define MLMRC_ERROR_H_

#include <stdexcept>
#include <string>

namespace mlmrc {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed file content (bad JSON line, bad vocab file, ...).
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mlmrc

#endif  // MLMRC_ERROR_H_

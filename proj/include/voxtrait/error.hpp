// Copyright 2026 The voxtrait Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace voxtrait {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file (WAV, CSV, JSON). The message names the offending
/// chunk, line or field.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed file in an encoding we do not read.
class UnsupportedFormatError : public Error {
 public:
  using Error::Error;
};

/// Precondition violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Rank-deficient design or correlation matrix.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

}  // namespace voxtrait

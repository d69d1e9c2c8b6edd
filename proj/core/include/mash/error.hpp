// Copyright 2026 The MASH Denoise Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace mash {

// Base of every exception thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument, configuration, or precondition.
class UsageError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public UsageError {
 public:
  using UsageError::UsageError;
};

// File system failures and malformed files.
class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public IoError {
 public:
  using IoError::IoError;
};

// Non-finite loss or gradients, failed factorizations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace mash

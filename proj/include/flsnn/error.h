// Copyright 2026 The flsnn Authors. All Rights Reserved.
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
// =============================================================================

#ifndef FLSNN_ERROR_H_
#define FLSNN_ERROR_H_

#include <stdexcept>
#include <string>

namespace flsnn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid hyperparameters, dimensions or option values.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller-supplied data violates an operation's precondition.
class InputError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

// Mismatched or corrupt objects exchanged between clients and server.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Malformed masked-update wire bytes.
class CodecError : public Error {
 public:
  using Error::Error;
};

// Malformed raster or model file.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace flsnn

#endif  // FLSNN_ERROR_H_

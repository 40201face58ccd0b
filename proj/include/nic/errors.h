// Copyright 2026 The NIC Authors. All Rights Reserved.
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

#ifndef NIC_ERRORS_H_
#define NIC_ERRORS_H_

#include <stdexcept>
#include <string>

namespace nic {

// Root of every exception thrown by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor extents that do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Caller passed a value outside the documented domain.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// NaN/Inf in a loss, or an optimisation that cannot continue.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Filesystem or codec I/O failure (PNG, checkpoints, manifests).
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed byte streams. `code` distinguishes the failure so tests and
// callers can tell a truncated container from a bad magic.
enum class ParseErrorCode {
  kTruncated,
  kBadMagic,
  kBadVersion,
  kFlagMismatch,
  kBadField,
  kTrailingBytes,
};

class ParseError : public Error {
 public:
  ParseError(ParseErrorCode code, const std::string& what)
      : Error(what), code_(code) {}
  ParseErrorCode code() const { return code_; }

 private:
  ParseErrorCode code_;
};

}  // namespace nic

#endif  // NIC_ERRORS_H_

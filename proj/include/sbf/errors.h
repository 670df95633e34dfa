// Copyright 2026 The sbfstore Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SBF_ERRORS_H_
#define SBF_ERRORS_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sbf {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller-supplied value violates an operation's precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Bytes on disk or on the wire do not parse.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Authenticated decryption or key agreement failed.
class CryptoError : public Error {
 public:
  using Error::Error;
};

// A lookup by key, zone or handle found nothing.
class NotFound : public Error {
 public:
  using Error::Error;
};

// A counting filter decrement would go below zero.
class UnderflowError : public Error {
 public:
  UnderflowError(std::string what, std::uint64_t position)
      : Error(std::move(what)), position_(position) {}
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t position_;
};

// An ingest would push a storage buffer past its capacity.
class CapacityError : public Error {
 public:
  CapacityError(std::string what, std::uint64_t buffer_index)
      : Error(std::move(what)), buffer_index_(buffer_index) {}
  std::uint64_t buffer_index() const { return buffer_index_; }

 private:
  std::uint64_t buffer_index_;
};

}  // namespace sbf

#endif  // SBF_ERRORS_H_

// Copyright 2026 The rewafl-sim Authors
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

namespace rewafl {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// device model
class InvalidLinkError : public Error {
 public:
  using Error::Error;
};

class ReserveViolationError : public Error {
 public:
  using Error::Error;
};

// learning core
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class AggregationError : public Error {
 public:
  using Error::Error;
};

class InfeasiblePartitionError : public Error {
 public:
  using Error::Error;
};

/// Base for IDX parsing failures; the subclasses tell callers which check failed.
class IdxParseError : public Error {
 public:
  using Error::Error;
};

class IdxBadMagicError : public IdxParseError {
 public:
  using IdxParseError::IdxParseError;
};

class IdxTruncatedError : public IdxParseError {
 public:
  using IdxParseError::IdxParseError;
};

class IdxCountMismatchError : public IdxParseError {
 public:
  using IdxParseError::IdxParseError;
};

// selection and local policy
class NoDataError : public Error {
 public:
  using Error::Error;
};

class InvalidEstimateError : public Error {
 public:
  using Error::Error;
};

class InvalidRateError : public Error {
 public:
  using Error::Error;
};

class InvalidHistoryError : public Error {
 public:
  using Error::Error;
};

/// Configuration problem; `path()` is a JSON-pointer-like location such as
/// `/policy/k`.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class UnknownPresetError : public Error {
 public:
  using Error::Error;
};

class OutputError : public Error {
 public:
  using Error::Error;
};

}  // namespace rewafl

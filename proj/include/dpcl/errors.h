// Copyright 2026 The DPCL Authors
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

#ifndef DPCL_ERRORS_H_
#define DPCL_ERRORS_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dpcl {

// Base class for every error raised by the library. Callers that do not care
// about the category can catch this alone.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or parameter violation on a public entry point.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed EMB1 payload. Carries the byte offset where parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

// Well-formed payload whose contents violate a cross-field invariant.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MappingError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Parallel composition requested over releases that touch the same units.
class ScopeViolation : public Error {
 public:
  using Error::Error;
};

// Requested guarantee cannot be provided by any mechanism in the library.
class Unsupported : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::uint64_t step)
      : Error(what + " at step " + std::to_string(step)), step_(step) {}
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

// Prediction requested from a model without any output class.
class NoClasses : public Error {
 public:
  using Error::Error;
};

}  // namespace dpcl

#endif  // DPCL_ERRORS_H_

// Copyright 2026 The Authors.
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

#ifndef SPARSELABEL_ERROR_HPP_
#define SPARSELABEL_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sparselabel {

// Base of every exception the library throws. code() is a stable
// machine-readable identifier used in CLI and HTTP error bodies.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Bad arguments: wrong shapes, out-of-range indices, non-positive rates.
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error("validation_error", message) {}
};

// Factorization failures, ill-conditioned solves, inconsistent updates.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message)
      : Error("numerical_error", message) {}
};

// Malformed input files. line() is 1-based; 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line = 0)
      : Error("parse_error",
              line == 0 ? message
                        : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A requested enumeration exceeds its configured budget.
class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(const std::string& message)
      : Error("budget_exceeded", message) {}
};

// The request is well formed but clashes with the current state, such as a
// duplicate label or an undo with nothing to undo.
class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& message)
      : Error("conflict", message) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& message)
      : Error("not_found", message) {}
};

}  // namespace sparselabel

#endif  // SPARSELABEL_ERROR_HPP_

// Copyright 2026 The DFL Authors.
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

#ifndef DFL_ERRORS_HPP_
#define DFL_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dfl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Empty feasible region.
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// Dependent equality rows with inconsistent right-hand sides.
class InfeasibleRows : public Infeasible {
 public:
  using Infeasible::Infeasible;
};

/// Iteration cap reached; carries the residual at the last iterate.
class NoConvergence : public Error {
 public:
  NoConvergence(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class UnsupportedStructure : public Error {
 public:
  using Error::Error;
};

class NotStationary : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

class InfeasibleDecision : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. line() is 1-based; 0 when the position is unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace dfl

#endif  // DFL_ERRORS_HPP_

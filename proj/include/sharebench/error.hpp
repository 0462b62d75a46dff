// Copyright 2026 The ShareBench Authors
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

#ifndef SHAREBENCH_ERROR_HPP_
#define SHAREBENCH_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sharebench {

// Root of every exception thrown by the library. Callers that only care
// about "something in sharebench failed" catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid parameters: out-of-range fractions, k >= n, K = 0, etc.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Invalid generator specification (non-PD covariance, bad weights).
class SpecError : public Error {
 public:
  using Error::Error;
};

// Malformed CSV input. `row()` is 1-based over data rows (header excluded);
// 0 means the header.
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// A category name outside the schema's domain.
class DomainError : public Error {
 public:
  DomainError(std::size_t row, const std::string& what)
      : Error("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Requested table or buffer would exceed a materialization guard.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class BalanceError : public Error {
 public:
  using Error::Error;
};

class UndefinedProportionError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace sharebench

#endif  // SHAREBENCH_ERROR_HPP_

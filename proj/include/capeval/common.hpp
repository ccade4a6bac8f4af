// Copyright 2026 The capeval Authors.
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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace capeval {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file; the message carries "path:line: reason".
class ParseError : public Error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& reason)
      : Error(path + ":" + std::to_string(line) + ": " + reason), path_(path), line_(line) {}

  const std::string& path() const { return path_; }
  std::size_t line() const { return line_; }

 private:
  std::string path_;
  std::size_t line_;
};

/// Violated precondition or data invariant (dangling ids, duplicates, ranges).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Some expected (video, [ref,] system) cells have no value.
class CoverageError : public Error {
 public:
  CoverageError(const std::string& what, std::vector<std::string> missing);
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

/// Numerically undefined result: constant vectors, singular systems.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Non-fatal diagnostics collected by an operation.
using Warnings = std::vector<std::string>;

/// SplitMix64 generator. Used instead of std distributions so that every
/// seeded stream is bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Uniform integer in [0, bound), bound > 0. Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound);
  /// Uniform double in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller.
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream seed from a run seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Worker count: CAPEVAL_THREADS when set and positive, otherwise the
/// hardware concurrency (at least 1).
unsigned worker_count();

/// Runs body(i) for i in [0, n) over worker_count() threads. Each index is
/// visited exactly once; callers write results into pre-sized slots so the
/// merge order never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace capeval

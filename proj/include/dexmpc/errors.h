// Copyright 2026 The dexmpc Authors
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

#ifndef DEXMPC_ERRORS_H_
#define DEXMPC_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dexmpc {

// base class for every error raised by the library
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// caller broke a documented precondition (dimension mismatch, zero axis, ...)
class ContractViolation : public Error {
 public:
  using Error::Error;
};

// non-finite state or control reached the dynamics
class NumericalDomainError : public Error {
 public:
  using Error::Error;
};

// invalid task file, cost spec, grid spec or session file
class ConfigError : public Error {
 public:
  using Error::Error;
};

// malformed critic response or weight block
class ParseError : public Error {
 public:
  using Error::Error;
};

// critic endpoint unreachable, timed out or returned an HTTP error
class TransportError : public Error {
 public:
  using Error::Error;
};

// metric cannot be computed from the given log (e.g. too few ticks)
class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

// every rollout of an episode degenerated
class DegenerateEpisode : public Error {
 public:
  using Error::Error;
};

}  // namespace dexmpc

#endif  // DEXMPC_ERRORS_H_

// Copyright 2026 The DPFL Simulator Authors
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

#ifndef DPFL_ERRORS_H_
#define DPFL_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dpfl {

// Argument outside the mathematical domain of an operation (sigma <= 0,
// delta outside (0, 1), rho <= 1, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// No RDP budget left to spend.
class BudgetExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A saving rate exceeds the spending rate (q_n > q).
class InvalidSavingRateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A DP budget too small to be represented at the chosen RDP order.
class BudgetTooSmallError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed configuration, input file or mismatched dimensions.
class InvalidInputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace dpfl

#endif  // DPFL_ERRORS_H_

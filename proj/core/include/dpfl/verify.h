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

// Self-checks behind `dpfl_sim verify`. Each suite compares the library
// against a brute-force or Monte Carlo reference and reports the measured
// deviation next to its tolerance.

#ifndef DPFL_VERIFY_H_
#define DPFL_VERIFY_H_

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace dpfl {

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = false;
  double delta = 0.0;      // worst measured deviation
  double tolerance = 0.0;
  size_t cases = 0;
  std::string detail;
};

// accounting, scheduler, permutation, noise, lattice, gradients, bias.
const std::vector<std::string>& VerifySuiteNames();

// Runs one suite, or every suite for "all". Throws InvalidInputError on an
// unknown name.
std::vector<CheckResult> RunVerifySuite(const std::string& suite,
                                        uint64_t seed = 0);

// One JSON object per line.
void WriteCheckJsonLines(std::ostream& out,
                         const std::vector<CheckResult>& checks);

bool AllPassed(const std::vector<CheckResult>& checks);

}  // namespace dpfl

#endif  // DPFL_VERIFY_H_

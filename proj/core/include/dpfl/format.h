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

#ifndef DPFL_FORMAT_H_
#define DPFL_FORMAT_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace dpfl {

// Shortest text that round-trips the double exactly.
std::string FormatDouble(double value);

// 64-bit FNV-1a.
uint64_t Fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ULL);

std::string HexDigest(uint64_t value);

}  // namespace dpfl

#endif  // DPFL_FORMAT_H_

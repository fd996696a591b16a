// Copyright 2026 The hgdagger Authors
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

#ifndef HGDAGGER__TEXT_HPP_
#define HGDAGGER__TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace hgdagger
{

/// Shortest decimal text that round-trips to the same double.
std::string format_real(double value);

/// Strict parse of a whole token; throws std::invalid_argument.
double parse_real(std::string_view token);
long long parse_integer(std::string_view token);

std::vector<std::string_view> split_whitespace(std::string_view line);

}  // namespace hgdagger

#endif  // HGDAGGER__TEXT_HPP_

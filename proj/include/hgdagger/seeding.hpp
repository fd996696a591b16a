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
#ifndef HGDAGGER__SEEDING_HPP_
#define HGDAGGER__SEEDING_HPP_

#include <cstdint>
#include <initializer_list>

namespace hgdagger
{

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent child seed for a named stream, e.g. derive_seed(run, {epoch, rollout}).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path)
{
  std::uint64_t seed = splitmix64(base);
  for (std::uint64_t part : path) {
    seed = splitmix64(seed ^ splitmix64(part + 0x632be59bd9b4e019ULL));
  }
  return seed;
}

}  // namespace hgdagger

#endif  // HGDAGGER__SEEDING_HPP_

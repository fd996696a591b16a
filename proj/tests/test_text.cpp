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
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "hgdagger/text.hpp"

namespace hgdagger
{
namespace
{

TEST(Text, FormatRealRoundTripsRandomDoubles)
{
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  std::uniform_int_distribution<int> exponent(-300, 300);
  for (int i = 0; i < 2000; ++i) {
    const double value = std::ldexp(mantissa(rng), exponent(rng));
    EXPECT_EQ(parse_real(format_real(value)), value);
  }
}

TEST(Text, FormatRealShortestForms)
{
  EXPECT_EQ(format_real(0.0), "0");
  EXPECT_EQ(format_real(0.5), "0.5");
  EXPECT_EQ(format_real(-3.0), "-3");
  EXPECT_EQ(format_real(0.1), "0.1");
}

TEST(Text, ParseRejectsJunk)
{
  EXPECT_THROW(parse_real("1.5x"), std::invalid_argument);
  EXPECT_THROW(parse_real(""), std::invalid_argument);
  EXPECT_THROW(parse_integer("12.5"), std::invalid_argument);
  EXPECT_EQ(parse_real("+2.5"), 2.5);
  EXPECT_EQ(parse_integer("-42"), -42);
}

TEST(Text, SplitWhitespace)
{
  const auto parts = split_whitespace("  a \t bb  c ");
  ASSERT_EQ(parts.size(), 3u);
  EXPECT_EQ(parts[0], "a");
  EXPECT_EQ(parts[1], "bb");
  EXPECT_EQ(parts[2], "c");
  EXPECT_TRUE(split_whitespace("   ").empty());
}

}  // namespace
}  // namespace hgdagger

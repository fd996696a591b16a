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

#ifndef HGDAGGER__ERRORS_HPP_
#define HGDAGGER__ERRORS_HPP_

#include <stdexcept>
#include <string>

// Argument errors use std::invalid_argument; the types below name the
// domain-specific failure modes callers are expected to branch on.
namespace hgdagger
{

class TrainingAborted : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class UndefinedThreshold : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class DegenerateRegion : public std::runtime_error
{
public:
  DegenerateRegion(std::string group, const std::string & what)
  : std::runtime_error(what), group_(std::move(group))
  {
  }

  const std::string & group() const noexcept { return group_; }

private:
  std::string group_;
};

class SessionRejected : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class NotFound : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace hgdagger

#endif  // HGDAGGER__ERRORS_HPP_

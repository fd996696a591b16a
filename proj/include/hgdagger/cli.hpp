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

#ifndef HGDAGGER__CLI_HPP_
#define HGDAGGER__CLI_HPP_

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

// Command surface shared by the hgdagger executable, tests and the Python
// module.
namespace hgdagger::cli
{

/// Environment variable naming the artifact root directory.
inline constexpr const char * kArtifactRootVariable = "HGDAGGER_ARTIFACTS";

/// Runs one subcommand. args excludes the program name. Returns the process
/// exit status.
int run_command(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

/// Value of HGDAGGER_ARTIFACTS, or ./artifacts when unset.
std::filesystem::path artifact_root();

/// Hash git assigns to a blob with this content.
std::string git_blob_sha1(std::string_view content);

/// Flat "key = value" lines; blank lines and lines starting with '#' are
/// skipped. Throws FormatError on malformed lines or repeated keys.
std::map<std::string, std::string> read_config(std::istream & in);

/// Every configuration key with its default value.
const std::map<std::string, std::string> & default_settings();

}  // namespace hgdagger::cli

#endif  // HGDAGGER__CLI_HPP_

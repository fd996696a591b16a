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
#include "hgdagger/dataset.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "hgdagger/errors.hpp"
#include "hgdagger/text.hpp"

namespace hgdagger
{

void Dataset::append(const Dataset & other)
{
  samples.insert(samples.end(), other.samples.begin(), other.samples.end());
}

void write_dataset(std::ostream & out, const Dataset & dataset)
{
  out << kDatasetHeader << '\n';
  for (const auto & sample : dataset.samples) {
    out << sample.epoch_tag;
    for (double value : sample.observation.to_array()) {
      out << ' ' << format_real(value);
    }
    out << ' ' << format_real(sample.label.steer) << ' ' << format_real(sample.label.speed_cmd)
        << '\n';
  }
}

Dataset read_dataset(std::istream & in)
{
  std::string line;
  if (!std::getline(in, line) || line != kDatasetHeader) {
    throw FormatError("missing dataset header '" + std::string(kDatasetHeader) + "'");
  }
  Dataset dataset;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    auto fields = split_whitespace(line);
    if (fields.empty()) {
      continue;
    }
    if (fields.size() != 1 + sim::kObservationSize + sim::kActionSize) {
      throw FormatError("dataset line " + std::to_string(line_number) + ": expected 10 fields");
    }
    Sample sample;
    sample.epoch_tag = static_cast<int>(parse_integer(fields[0]));
    std::array<double, sim::kObservationSize> obs{};
    for (int i = 0; i < sim::kObservationSize; ++i) {
      obs[i] = parse_real(fields[1 + i]);
    }
    sample.observation = sim::Observation::from_array(obs);
    sample.label.steer = parse_real(fields[8]);
    sample.label.speed_cmd = parse_real(fields[9]);
    for (double v : obs) {
      if (!std::isfinite(v)) {
        throw FormatError("dataset line " + std::to_string(line_number) + ": non-finite value");
      }
    }
    dataset.append(sample);
  }
  return dataset;
}

void save_dataset(const std::filesystem::path & path, const Dataset & dataset)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  write_dataset(out, dataset);
}

Dataset load_dataset(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot read " + path.string());
  }
  return read_dataset(in);
}

void write_intervention_log(std::ostream & out, const InterventionLog & log)
{
  out << kInterventionHeader << '\n';
  for (const auto & entry : log.entries) {
    out << format_real(entry.doubt) << ' ' << entry.epoch << ' ' << entry.rollout << ' '
        << format_real(entry.time) << '\n';
  }
}

InterventionLog read_intervention_log(std::istream & in)
{
  std::string line;
  if (!std::getline(in, line) || line != kInterventionHeader) {
    throw FormatError("missing intervention log header");
  }
  InterventionLog log;
  while (std::getline(in, line)) {
    auto fields = split_whitespace(line);
    if (fields.empty()) {
      continue;
    }
    if (fields.size() != 4) {
      throw FormatError("intervention log: expected 4 fields, got '" + line + "'");
    }
    log.entries.push_back(
      {parse_real(fields[0]), static_cast<int>(parse_integer(fields[1])),
       static_cast<int>(parse_integer(fields[2])), parse_real(fields[3])});
  }
  return log;
}

}  // namespace hgdagger

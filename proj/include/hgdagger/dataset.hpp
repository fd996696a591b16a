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
#ifndef HGDAGGER__DATASET_HPP_
#define HGDAGGER__DATASET_HPP_

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "hgdagger/sim.hpp"

namespace hgdagger
{

struct Sample
{
  sim::Observation observation;
  sim::Action label;
  int epoch_tag{0};
};

/// Aggregated labeled data. Append-only over a training run.
struct Dataset
{
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  void append(const Sample & sample) { samples.push_back(sample); }
  void append(const Dataset & other);
};

struct InterventionEntry
{
  double doubt{0.0};
  int epoch{0};
  int rollout{0};
  double time{0.0};
};

/// Novice doubt at each expert takeover, in collection order.
struct InterventionLog
{
  std::vector<InterventionEntry> entries;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

// Dataset files: a schema header line, then one sample per line:
//   epoch_tag y theta s l_left l_right d_left d_right steer speed_cmd
inline constexpr const char * kDatasetHeader = "# hgdagger-dataset v1";
inline constexpr const char * kInterventionHeader = "# hgdagger-interventions v1";

void write_dataset(std::ostream & out, const Dataset & dataset);
Dataset read_dataset(std::istream & in);
void save_dataset(const std::filesystem::path & path, const Dataset & dataset);
Dataset load_dataset(const std::filesystem::path & path);

// Intervention log files: header, then "doubt epoch rollout time" per line.
void write_intervention_log(std::ostream & out, const InterventionLog & log);
InterventionLog read_intervention_log(std::istream & in);

}  // namespace hgdagger

#endif  // HGDAGGER__DATASET_HPP_

# Copyright 2026 The hgdagger Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""HG-DAgger lab: simulator, ensemble policies and the training CLI."""

from ._hgdagger import (
    EgoState,
    Ensemble,
    Lane,
    ObstacleCar,
    Scenario,
    UndefinedThreshold,
    bhattacharyya,
    compute_tau,
    generate_scenario,
    git_blob_sha1,
    initial_state,
    load_checkpoint,
    observe,
    run_command,
    step_dynamics,
)

__all__ = [
    "EgoState",
    "Ensemble",
    "Lane",
    "ObstacleCar",
    "Scenario",
    "UndefinedThreshold",
    "bhattacharyya",
    "compute_tau",
    "generate_scenario",
    "git_blob_sha1",
    "initial_state",
    "load_checkpoint",
    "observe",
    "run_command",
    "step_dynamics",
]

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
import math

import pytest

import hgdagger


def test_zero_jitter_scenario():
    s = hgdagger.generate_scenario(1, 300.0, jitter=False)
    assert [o.center_x for o in s.obstacles] == [30.0 * (i + 1) for i in range(9)]


def test_straight_step_and_observation():
    st = hgdagger.step_dynamics(hgdagger.EgoState(0.0, -1.5, 0.0, 5.0), 0.0, 5.0)
    assert st.x == pytest.approx(0.5, abs=1e-12)
    obs = hgdagger.observe(st, hgdagger.generate_scenario(1, 300.0))
    assert len(obs) == 7
    assert obs[3] + obs[4] == pytest.approx(3.0)


def test_tau_and_distance():
    assert hgdagger.compute_tau([10, 10, 10, 1, 2, 3, 4, 5]) == 4.5
    with pytest.raises(hgdagger.UndefinedThreshold):
        hgdagger.compute_tau([])
    assert hgdagger.bhattacharyya([1, 0], [0.5, 0.5]) == pytest.approx(-math.log(math.sqrt(0.5)))


def test_blob_sha1():
    assert hgdagger.git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391"


def test_train_and_load(tmp_path, monkeypatch):
    monkeypatch.setenv("HGDAGGER_ARTIFACTS", str(tmp_path))
    code, out, err = hgdagger.run_command(
        ["train-bc", "--bc_labels", "100", "--epochs_per_fit", "3", "--members", "2",
         "--hidden", "8", "--road_length", "100", "--out", "bc"]
    )
    assert code == 0, err
    policy = hgdagger.load_checkpoint(str(tmp_path / "bc" / "policy.ckpt"))
    assert policy.size == 2
    (steer, speed), variance, doubt = policy.predict([-1.5, 0.0, 5.0, 1.5, 1.5, 30.0, 60.0])
    assert abs(steer) <= 0.6 and 0.0 <= speed <= 8.0
    assert doubt == pytest.approx(math.hypot(*variance))


def test_unknown_flag_is_rejected(tmp_path, monkeypatch):
    monkeypatch.setenv("HGDAGGER_ARTIFACTS", str(tmp_path / "none"))
    code, _, err = hgdagger.run_command(["eval", "--bogus"])
    assert code != 0 and err
    assert not (tmp_path / "none").exists()

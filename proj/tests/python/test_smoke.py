# Copyright 2026 The DPCL Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import math

import numpy as np
import pytest

import dpcl


def test_emb1_roundtrip(tmp_path):
    values, labels, names = dpcl.synth_mixture(4, 5, 8, 2.0, seed=3)
    assert values.shape == (20, 8)
    assert values.dtype == np.float32
    assert list(labels[:5]) == [0] * 5
    path = tmp_path / "toy.emb1"
    dpcl.save_embeddings(path, values, labels, names)
    assert dpcl.inspect_embeddings(path) == {"dim": 8, "count": 20}
    v2, l2, n2 = dpcl.load_embeddings(path)
    assert np.array_equal(v2, values)
    assert np.array_equal(l2, labels)
    assert n2 == names
    assert path.stat().st_size == 16 + 20 * (4 + 4 * 8)


def test_emb1_errors(tmp_path):
    path = tmp_path / "bad.emb1"
    path.write_bytes(b"EMB2" + bytes(12))
    with pytest.raises(dpcl.FormatError):
        dpcl.inspect_embeddings(path)
    with pytest.raises(dpcl.IoError):
        dpcl.load_embeddings(tmp_path / "missing.emb1")
    with pytest.raises(dpcl.ShapeError):
        dpcl.save_embeddings(path, np.zeros((3, 2)), np.zeros(2, dtype=np.uint32), ["a"])
    assert issubclass(dpcl.FormatError, dpcl.Error)


def test_gaussian_calibration():
    sigma = dpcl.calibrate_gaussian(1.0, 1e-5)
    assert abs(dpcl.gaussian_delta(1.0, sigma) - 1e-5) <= 1e-9
    assert sigma <= dpcl.classical_gaussian_sigma(1.0, 1e-5)
    assert dpcl.calibrate_gaussian(math.inf, 1e-5) == 0.0
    assert dpcl.laplace_tail(0.0, 1.0) == 0.5


def test_ledger():
    seq = dpcl.PrivacyLedger("sequential")
    par = dpcl.PrivacyLedger("parallel")
    for t in range(1, 11):
        seq = seq.record_release(t, 1.0, 1e-5, f"task-{t}")
        par = par.record_release(t, 1.0, 1e-5, f"task-{t}")
    assert seq.total() == (10.0, 1e-4)
    assert par.total() == (1.0, 1e-5)
    assert len(seq) == 10
    assert seq.to_json()["mode"] == seq.mode
    clash = par.record_release(11, 1.0, 1e-5, "task-1")
    with pytest.raises(dpcl.ScopeViolation):
        clash.total()
    assert len(par) == 10


def test_class_loss_curve():
    rows = dpcl.class_loss_curve([1.0], 1e-7, 13)
    assert rows[11][1] == 12 and rows[11][2] >= 0.99
    assert rows[12][2] < 0.99
    assert dpcl.group_dp_delta(1.0, 1e-7, 1) == 1e-7
    bound = dpcl.learned_release_delta(1.0, 2.0)
    assert bound["group_drop_probability"] is None
    assert bound["delta"] == pytest.approx(0.5 * math.exp(-1.0), abs=1e-12)


def test_attack_game():
    assert dpcl.run_attack("s_data", trials=200)["advantage"] == 1.0
    assert dpcl.run_attack("s_prior", trials=200)["advantage"] == 0.0
    learned = dpcl.run_attack("s_learned", trials=2000, tau=2.0, epsilon=1.0)
    assert 0.0 < learned["advantage"] < 0.4
    with pytest.raises(dpcl.InvalidArgument):
        dpcl.run_attack("public")


def test_dpsgd_accounting():
    eps = dpcl.dp_sgd_epsilon(1.0, 0.01, 1000, 1e-5)
    nm = dpcl.calibrate_noise_multiplier(eps, 0.01, 1000, 1e-5)
    assert nm == pytest.approx(1.0, rel=1e-3)


def test_run_experiment(tmp_path):
    cfg = "\n".join([
        "synth.classes = 6",
        "synth.per_class = 10",
        "synth.dim = 8",
        "synth.separation = 8",
        "stream.tasks = 3",
        "budget.epsilon = inf",
    ])
    summary = dpcl.run_experiment(cfg, [f"output = {tmp_path}"], write=True)
    assert summary["config"]["budget.epsilon"] == "inf"
    assert summary["final_average_accuracy"]["median"] >= 0.9
    assert (tmp_path / "results.csv").read_text().count("\n") == 4
    json.loads((tmp_path / "summary.json").read_text())
    with pytest.raises(dpcl.ConfigError):
        dpcl.run_experiment("colour = blue")

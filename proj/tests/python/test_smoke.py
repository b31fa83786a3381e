# SPDX-License-Identifier: Apache-2.0
#
# ddchan - joint element/group sparse estimation of delay-Doppler channels
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
# http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
# ------------------------------------------------------------------------
"""Smoke tests for the Python bindings."""

import numpy as np
import pytest

import ddchan


def test_soft_threshold():
    assert ddchan.prox_soft(2.0, 1.0) == pytest.approx(1.0)
    assert ddchan.prox_soft(0.5, 1.0) == 0.0
    f = ddchan.Regularizer.parse("scad:3.7")
    assert f.name == "scad:3.7"
    assert f.prox(10.0, 1.0) == pytest.approx(10.0)


def test_nested_prox_keeps_phase():
    b = np.array([3 + 4j, 0.1j, -2.0])
    a = ddchan.prox_nested(b, 1.0, 0.1)
    nz = np.abs(a) > 0
    assert np.allclose(np.angle(a[nz]), np.angle(b[nz]))
    assert np.linalg.norm(a) < np.linalg.norm(b)


def test_admm_identity_collapse():
    rng = np.random.default_rng(0)
    y = rng.normal(size=5) + 1j * rng.normal(size=5)
    x, _ = ddchan.admm_solve(y, np.eye(5, dtype=complex), groups=[list(range(5))],
                             lambda_group=1.0, lambda_elem=0.1, tol_rel=1e-10, max_iter=200)
    assert np.allclose(x, ddchan.prox_nested(y, 1.0, 0.1), atol=1e-6)


def test_degenerate_leakage_is_identity():
    g = ddchan.DelayDopplerGrid(1e-4, 17, 8, 4)
    G = ddchan.build_leakage_matrix(g, ddchan.PulseShape(0.25, 4e-4, 1e-4))
    assert np.abs(G - np.eye(g.size)).max() < 1e-10


def test_trial_and_estimate():
    cfg = ddchan.ExperimentConfig.preset("tiny")
    t = ddchan.prepare_trial(cfg, 1)
    assert t["A"].shape == (64, 520)
    assert np.allclose(t["A"] @ t["truth"], t["clean"])
    out = ddchan.estimate(cfg, 1, "ls", 30.0)
    assert 0.0 <= out["nmse"] < 1.0
    assert ddchan.nmse(t["truth"], t["truth"]) == 0.0


def test_csv_round_trip():
    g = ddchan.DelayDopplerGrid(1e-4, 9, 4, 3)
    x = np.zeros(g.size, dtype=complex)
    x[g.index(-2, 1)] = 0.5 - 1j
    grid, back = ddchan.spreading_from_csv(ddchan.spreading_to_csv(g, x))
    assert grid.delay_taps == 3
    assert np.array_equal(back, x)
    r = ddchan.Regions(0, 2, 2, 3, 1, 4)
    assert ddchan.regions_from_csv(ddchan.regions_to_csv(r)) == r


def test_config_errors_surface_as_exceptions():
    with pytest.raises(ValueError):
        ddchan.ExperimentConfig.from_json('{"estimators": ["nope"]}')
    assert "nested-scad" in ddchan.known_estimators()


def test_benchmark_single_row():
    cfg = ddchan.ExperimentConfig.preset("tiny")
    cfg.seeds = [1]
    cfg.snr_db = [20.0]
    cfg.estimators = ["ls"]
    csv = ddchan.run_benchmark(cfg).strip().splitlines()
    assert csv[0].startswith("estimator,snr_db,seed,nmse")
    assert len(csv) == 2

"""Smoke test for the lin3lp Python extension.

Build and install first:

    pip install --no-build-isolation ./crates/python
    python python/smoke_test.py
"""
import json
import math

import numpy as np

import lin3lp_py as m


def test_gait():
    g = json.loads(m.solve_gait(0.1))
    assert g["step_time"] == json.loads(m.default_params())["T"]
    # Standing still keeps the pelvis over the feet in the sagittal plane.
    still = json.loads(m.solve_gait(0.0))
    assert all(x == 0.0 for x in still["qbar"][0::2])


def test_projection():
    c = m.Controller(0.1)
    assert 0.0 < c.spectral_radius < 1.0
    k = np.array(c.gain)
    e = np.linspace(-0.02, 0.02, 8)
    # At phase start the projection reduces to the DLQR feedback.
    np.testing.assert_allclose(c.time_project(list(e), 0.0), -k @ e, atol=1e-10)
    assert c.time_project([0.0] * 8, 0.2) == [0.0] * 4
    raw, dp, attack, trunc = c.footstep_adjustment(list(e * 100), 0.1)
    assert any(trunc)
    assert max(abs(v) for v in dp) <= 0.15 + 1e-15


def test_dead_zone():
    assert m.dead_zone(0.0, 1.0) == 0.0
    assert m.dead_zone(-2.0, 1.0) == -m.dead_zone(2.0, 1.0)
    for x in (0.3, 1.0, 7.0):
        expected = x - 2.0 / math.pi * math.atan(math.pi * x / 2.0)
        assert abs(m.dead_zone(x, 1.0) - expected) < 1e-12
    # Large inputs pass through shifted by the threshold.
    assert abs(m.dead_zone(1e6, 1.0) - (1e6 - 1.0)) < 1e-5


def test_scenario():
    s = json.loads(m.default_scenario())
    s["duration"] = 5.0
    s["pushes"] = [{"t_start": 0.9, "t_end": 1.0, "force": [3.0, 0.0], "kind": "impulse"}]
    text = json.dumps(s)
    csv1, metrics = m.run_scenario(text)
    csv2, _ = m.run_scenario(text)
    assert csv1 == csv2
    metrics = json.loads(metrics)
    assert metrics["recovered"] and not metrics["fell"]


if __name__ == "__main__":
    for name, f in list(globals().items()):
        if name.startswith("test_"):
            f()
            print(f"ok {name}")

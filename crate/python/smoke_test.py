"""Smoke test of the stirap_py extension module.

Run with `python python/smoke_test.py` or `pytest python/smoke_test.py`
after `pip install --no-build-isolation -e crates/stirap-py`.
"""

import math
import pathlib

import pytest

import stirap_py

REFERENCE = pathlib.Path(__file__).resolve().parent.parent / "scenarios" / "reference.toml"


def small_scenario():
    text = REFERENCE.read_text()
    text = text.replace("points = 401", "points = 21").replace("slices = 41", "slices = 9")
    return stirap_py.Scenario.from_toml(text)


def test_reference_loads_and_validates():
    s = stirap_py.Scenario.load(str(REFERENCE))
    assert s.steps == 2
    assert len(s.momenta) == 401
    assert s.validate() == []


def test_closed_form_trajectory_columns():
    rows = small_scenario().closed_form()
    assert len(rows) == 4
    t, z, p, eps, phase, state = rows[-1]
    assert state == "g0"
    assert p < 200.0
    assert eps > math.sqrt(2.0)


def test_run_transfers_the_packet():
    s = small_scenario()
    ensemble, effs, fitted = s.run()
    assert len(effs) == 21
    assert 0.999 < ensemble <= 1.0
    closed = s.closed_form()[-1]
    assert abs(fitted[1] - closed[2]) < 1e-6
    ensemble_b, _, _ = s.run(frame="adiabatic")
    assert abs(ensemble - ensemble_b) < 1e-8


def test_bounds_and_verify():
    s = small_scenario()
    b = s.bounds(0)
    assert b["eqtrans_total"]["value"] < b["dyson"]["value"]
    assert b["first_order"]["value"] <= b["dyson"]["value"]
    passed, checks = s.verify(["spectrum", "transfer", "momentum_ledger"])
    assert passed, checks
    assert [c[0] for c in checks] == ["spectrum", "transfer", "momentum_ledger"]


def test_errors_map_to_python_exceptions():
    with pytest.raises(ValueError):
        stirap_py.Scenario.from_toml("version = 99")
    with pytest.raises(ValueError):
        small_scenario().run(frame="sideways")
    with pytest.raises(ValueError):
        small_scenario().with_tol(1e-3)


def test_momentum_amplitude_is_normalized():
    packet = (0.0, 200.0, 1.0, 3.0, 0.0)
    h = 0.01
    total = sum(
        (lambda a: a[0] ** 2 + a[1] ** 2)(stirap_py.momentum_amplitude(packet, 100.0, 200.0 + h * i)) * h
        for i in range(-800, 801)
    )
    assert abs(total - 1.0) < 1e-9


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))

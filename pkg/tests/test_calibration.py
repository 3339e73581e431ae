import numpy as np
import pytest

from paramchar.calibration import (
    CalibrationResult,
    cached_calibration,
    calibration_cache_key,
    calibration_hyperparameter_sweep,
    calibration_sweep_plan,
    fit_calibration,
    parameter_table,
    run_calibration,
)
from paramchar.errors import IncompleteCalibrationError
from paramchar.simulator import NoiseProfile, local_transition, readout_matrix


def paper_like(n, theta0=0.05):
    return NoiseProfile.uniform(n, local_transition([readout_matrix(0.9, 0.8)] * n), theta0)


@pytest.mark.parametrize("n", [1, 2])
def test_exact_recovery(n):
    noise = paper_like(n)
    cal, records = run_calibration(n, 21, noise, exact=True)
    np.testing.assert_allclose(cal.transition, noise.transition, atol=1e-10)
    for axis in ("Y", "X"):
        assert cal.prep_phase[(0, axis)] == pytest.approx(0.05, abs=1e-9)
    assert len(records) == 2 * 2 ** (n - 1)


def test_correlated_transition_recovered():
    rng = np.random.default_rng(4)
    T = rng.dirichlet(np.ones(4), size=4).T * 0.3 + 0.7 * np.eye(4)
    noise = NoiseProfile.uniform(2, T, -0.1)
    cal, _ = run_calibration(2, 15, noise, exact=True, axes=("Y",))
    np.testing.assert_allclose(cal.transition, T, atol=1e-10)


def test_sampled_recovery_and_stderr():
    noise = paper_like(1)
    cal, _ = run_calibration(1, 51, noise, 5000, seed=2)
    assert np.max(np.abs(cal.transition - noise.transition)) < 0.01
    assert abs(cal.offset(0, "Y") - 0.05) < 0.02
    assert np.all(cal.transition_stderr > 0)
    assert np.allclose(cal.transition.sum(axis=0), 1) and np.all(cal.transition >= 0)


def test_offset_fallbacks():
    cal = CalibrationResult(2, np.eye(4), np.zeros((4, 4)), {(0, "Y"): 0.1, (1, "Y"): 0.3, (0, "X"): -0.2})
    assert cal.offset(0, "Y") == 0.1
    assert cal.offset(1, "X") == pytest.approx(-0.2)
    assert CalibrationResult(1, np.eye(2), np.zeros((2, 2)), {(0, "Y"): 0.4}).offset(0, "X") == 0.4
    assert CalibrationResult.ideal(1).offset(0, "Y") == 0.0


def test_incomplete_calibration():
    noise = paper_like(2)
    _, records = run_calibration(2, 10, noise, exact=True, axes=("Y",))
    with pytest.raises(IncompleteCalibrationError) as err:
        fit_calibration(records[:1], 2)
    assert err.value.missing_columns


def test_serialization_roundtrip():
    cal, _ = run_calibration(2, 11, paper_like(2), 500, seed=1)
    back = CalibrationResult.from_dict(cal.to_dict())
    np.testing.assert_array_equal(back.transition, cal.transition)
    assert back.prep_phase == cal.prep_phase and back.shots == cal.shots
    assert all(isinstance(v, float) for v in cal.prep_phase.values())


def test_plan_size():
    plan = calibration_sweep_plan(3, 10)
    assert len(plan) == 2 * 4 and all(len(p.circuits) == 11 for p in plan)


def test_hyperparameter_sweep_rows():
    grid = list(range(11, 72, 10))
    rows = calibration_hyperparameter_sweep(1, grid, [1000, 5000], paper_like(1), seed=3)
    names = {r["parameter"] for r in rows}
    assert names == {"t_00", "t_01", "t_10", "t_11", "theta0_q0_Y"}
    for name in names:
        assert sum(r["parameter"] == name for r in rows) == 14
    # std error shrinks with shots at fixed grid
    for nt in grid:
        se = {r["shots"]: r["std_error"] for r in rows if r["n_theta"] == nt and r["parameter"] == "theta0_q0_Y"}
        assert se[5000] < se[1000]
    exact = calibration_hyperparameter_sweep(1, [11], [100], paper_like(1), exact=True)
    assert all(r["std_error"] == 0.0 for r in exact)


def test_parameter_table_names():
    names = [r[0] for r in parameter_table(CalibrationResult.ideal(1))]
    assert names == ["t_00", "t_01", "t_10", "t_11"]


def test_cache_hit_and_key(tmp_path):
    noise = paper_like(1)
    a, recs, hit = cached_calibration(tmp_path, 1, 11, noise, 500, seed=4)
    assert not hit and recs
    b, recs, hit = cached_calibration(tmp_path, 1, 11, noise, 500, seed=4)
    assert hit and not recs
    np.testing.assert_array_equal(a.transition, b.transition)
    k1 = calibration_cache_key(1, 11, ("Y", "X"), (0,), 4, 500, noise)
    assert k1 != calibration_cache_key(1, 11, ("Y", "X"), (0,), 5, 500, noise)
    assert k1 != calibration_cache_key(1, 11, ("Y", "X"), (0,), 4, 500, paper_like(1, 0.0))

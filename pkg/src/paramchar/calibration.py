"""
Angle-sweep calibration of the readout transition matrix and the rotation offset.

Rotating qubit ``s`` of ``|k, 0_s>`` gives an ideal distribution supported on
the two basis states ``|k, 0_s>`` and ``|k, 1_s>`` with weights
``cos^2((theta + theta0)/2)`` and ``sin^2((theta + theta0)/2)``. Through the
readout channel this becomes ``T[:, c0] cos^2 + T[:, c1] sin^2``, so each
sweep pins down two columns of ``T`` and all sweeps of one axis share a
single offset ``theta0``.

By default only qubit 0 is rotated and both axes are swept, which spends
``2 * 2**(n-1) * (n_theta + 1)`` circuits.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import IncompleteCalibrationError, InvalidArgumentError
from .estimation import fit_phase_and_linear, project_simplex
from .simulator import AXES, STREAM_CALIBRATION
from .sweeps import build_sweep_plan, execute_plan

# Grid sizes that gave stable hardware calibrations, per rotation axis.
DEFAULT_N_THETA = {"Y": 51, "X": 41}


@dataclass
class CalibrationResult:
    n: int
    transition: np.ndarray
    transition_stderr: np.ndarray
    prep_phase: dict
    prep_phase_stderr: dict = field(default_factory=dict)
    angles: np.ndarray | None = None
    shots: int | None = None
    residuals: dict = field(default_factory=dict)

    @classmethod
    def ideal(cls, n):
        d = 2**n
        return cls(n, np.eye(d), np.zeros((d, d)), {})

    def offset(self, qubit, axis):
        """theta0 for ``(qubit, axis)``.

        Qubits that were not swept inherit the mean offset of the same axis,
        then the mean over all calibrated offsets, then 0.
        """
        if (qubit, axis) in self.prep_phase:
            return self.prep_phase[(qubit, axis)]
        same_axis = [v for (q, a), v in self.prep_phase.items() if a == axis]
        if same_axis:
            return float(np.mean(same_axis))
        if self.prep_phase:
            return float(np.mean(list(self.prep_phase.values())))
        return 0.0

    def to_dict(self):
        return {
            "n": self.n,
            "transition": self.transition.tolist(),
            "transition_stderr": self.transition_stderr.tolist(),
            "prep_phase": [[q, a, v] for (q, a), v in sorted(self.prep_phase.items())],
            "prep_phase_stderr": [[q, a, v] for (q, a), v in sorted(self.prep_phase_stderr.items())],
            "angles": None if self.angles is None else self.angles.tolist(),
            "shots": self.shots,
            "residuals": [[q, a, v] for (q, a), v in sorted(self.residuals.items())],
        }

    @classmethod
    def from_dict(cls, data):
        def keyed(rows):
            return {(int(q), a): float(v) for q, a, v in rows}

        return cls(
            n=int(data["n"]),
            transition=np.array(data["transition"], dtype=float),
            transition_stderr=np.array(data["transition_stderr"], dtype=float),
            prep_phase=keyed(data["prep_phase"]),
            prep_phase_stderr=keyed(data.get("prep_phase_stderr", [])),
            angles=None if data.get("angles") is None else np.array(data["angles"], dtype=float),
            shots=data.get("shots"),
            residuals=keyed(data.get("residuals", [])),
        )


def calibration_sweep_plan(n, n_theta, axes=("Y", "X"), qubits=(0,)):
    """Calibration sweeps: for each axis, rotated qubit and ``k``, prepare
    ``|k, 0_s>`` with X gates and apply the swept rotation."""
    if n_theta < 3:
        raise InvalidArgumentError("calibration needs n_theta >= 3")
    return build_sweep_plan(n, n_theta, axes, qubits)


def fit_calibration(records, n=None):
    """Estimate ``T`` and the per-(qubit, axis) offsets from calibration sweeps.

    Column estimates obtained from several sweeps (other axis or other rotated
    qubit) are averaged, then every column is projected onto the simplex.
    """
    records = list(records)
    if not records:
        raise IncompleteCalibrationError("no calibration data", range(2 ** (n or 1)))
    n = records[0].n if n is None else n
    d = 2**n
    groups = defaultdict(list)
    for rec in records:
        if rec.n != n:
            raise InvalidArgumentError("calibration records mix qubit counts")
        groups[(rec.s, rec.axis)].append(rec)

    column_estimates = defaultdict(list)
    column_se = defaultdict(list)
    prep_phase, prep_se, residuals = {}, {}, {}
    angles = shots = None
    for (s, axis), recs in sorted(groups.items()):
        recs = sorted(recs, key=lambda r: r.k)
        angles = recs[0].angles
        shots = recs[0].shots
        for r in recs[1:]:
            if not np.allclose(r.angles, angles):
                raise InvalidArgumentError("sweeps of one axis must share the angle grid")
        fit = fit_phase_and_linear(angles, [r.distributions for r in recs], "calibration")
        prep_phase[(s, axis)] = float(fit.theta0)
        prep_se[(s, axis)] = float(fit.theta0_stderr)
        residuals[(s, axis)] = float(fit.residual)
        for r, coef, se in zip(recs, fit.coefs, fit.coef_stderr):
            c0, c1 = r.columns
            column_estimates[c0].append(coef[0])
            column_estimates[c1].append(coef[1])
            column_se[c0].append(se[0])
            column_se[c1].append(se[1])

    missing = [c for c in range(d) if c not in column_estimates]
    if missing:
        raise IncompleteCalibrationError(f"no sweep determines columns {missing}", missing)

    T = np.empty((d, d))
    T_se = np.empty((d, d))
    for c in range(d):
        T[:, c] = project_simplex(np.mean(column_estimates[c], axis=0))
        se = np.array(column_se[c])
        T_se[:, c] = np.sqrt(np.sum(se**2, axis=0)) / len(se)
    return CalibrationResult(n, T, T_se, prep_phase, prep_se, angles, shots, residuals)


def run_calibration(n, n_theta, noise, shots=None, *, exact=False, seed=0, axes=("Y", "X"), qubits=(0,),
                    max_workers=None):
    """Plan, simulate and fit a calibration. Returns ``(result, records)``."""
    plan = calibration_sweep_plan(n, n_theta, axes, qubits)
    records = execute_plan(plan, n, noise, shots, exact=exact, seed=seed, stream=STREAM_CALIBRATION,
                           kind="calibration", max_workers=max_workers)
    return fit_calibration(records, n), records


def calibration_cache_key(n, n_theta, axes, qubits, seed, shots, noise):
    """Content hash identifying a calibration run; includes the noise so a
    cache never serves a result simulated under a different device."""
    payload = {
        "n": int(n),
        "n_theta": int(n_theta),
        "axes": list(axes),
        "qubits": [int(q) for q in qubits],
        "seed": int(seed),
        "shots": None if shots is None else int(shots),
        "transition": np.asarray(noise.transition).tolist(),
        "prep_phase": sorted([q, a, v] for (q, a), v in noise.prep_phase.items()),
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def cached_calibration(cache_dir, n, n_theta, noise, shots=None, *, exact=False, seed=0, axes=("Y", "X"),
                       qubits=(0,), max_workers=None):
    """:func:`run_calibration` backed by ``cache_dir/<key>.json``.

    Returns ``(result, records, hit)``; records are empty on a cache hit.
    """
    key = calibration_cache_key(n, n_theta, axes, qubits, seed, None if exact else shots, noise)
    path = os.path.join(cache_dir, f"calibration-{key}.json")
    if os.path.exists(path):
        with open(path) as fh:
            return CalibrationResult.from_dict(json.load(fh)), [], True
    result, records = run_calibration(n, n_theta, noise, shots, exact=exact, seed=seed, axes=axes, qubits=qubits,
                                      max_workers=max_workers)
    os.makedirs(cache_dir, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(result.to_dict(), fh, indent=2, sort_keys=True)
    return result, records, False


def parameter_table(result):
    """Flatten a calibration into ``(name, estimate, stderr)`` triples."""
    rows = []
    d = 2**result.n
    for j in range(d):
        for c in range(d):
            rows.append((f"t_{j}{c}", float(result.transition[j, c]), float(result.transition_stderr[j, c])))
    for (q, axis), value in sorted(result.prep_phase.items()):
        rows.append((f"theta0_q{q}_{axis}", value, result.prep_phase_stderr.get((q, axis), math.nan)))
    return rows


def calibration_hyperparameter_sweep(n, n_theta_grid, shots_grid, noise, *, seed=0, axes=("Y",), qubits=(0,),
                                     repeats=1, exact=False):
    """Repeat the calibration over a grid of (n_theta, shots).

    Returns long-format rows ``{n_theta, shots, parameter, estimate, std_error}``
    where ``estimate`` is the mean over ``repeats`` and ``std_error`` the mean
    of the fit-reported standard errors (0 in exact mode).
    """
    if not n_theta_grid or not shots_grid:
        raise InvalidArgumentError("hyperparameter grids must be nonempty")
    for axis in axes:
        if axis not in AXES:
            raise InvalidArgumentError(f"unknown axis {axis!r}")
    rows = []
    for n_theta in n_theta_grid:
        for shots in shots_grid:
            acc = defaultdict(lambda: [[], []])
            for rep in range(repeats):
                ss = np.random.SeedSequence(int(seed), spawn_key=(int(n_theta), int(shots), rep))
                sub_seed = int(ss.generate_state(1, dtype=np.uint64)[0])
                result, _ = run_calibration(n, n_theta, noise, shots, exact=exact, seed=sub_seed, axes=axes,
                                            qubits=qubits)
                for name, est, se in parameter_table(result):
                    acc[name][0].append(est)
                    acc[name][1].append(se)
            for name, (ests, ses) in acc.items():
                rows.append({
                    "n_theta": int(n_theta),
                    "shots": int(shots),
                    "parameter": name,
                    "estimate": float(np.mean(ests)),
                    "std_error": 0.0 if exact else float(np.mean(ses)),
                })
    return rows

"""
Angle grids, sweep records, and their CSV persistence.

A sweep rotates qubit ``s`` about ``axis`` starting from the basis state whose
other qubits carry the label ``k`` (an ``n-1`` bit integer over the remaining
qubits, most significant first) and whose qubit ``s`` is 0.

CSV layout, one row per (angle, outcome)::

    k,s,axis,theta,outcome,count,shots

Angles are written with 12 significant digits. Rows with ``shots == 0`` hold
exact probabilities in the ``count`` column.
"""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .simulator import AXES, CircuitSpec, Gate, execute_batch

CSV_HEADER = ("k", "s", "axis", "theta", "outcome", "count", "shots")


def angle_grid(n_theta):
    """``n_theta + 1`` equally spaced angles from -pi to pi inclusive."""
    if int(n_theta) != n_theta or n_theta < 2:
        raise InvalidArgumentError(f"n_theta must be an integer >= 2, got {n_theta!r}")
    j = np.arange(int(n_theta) + 1)
    return (2.0 * j / n_theta - 1.0) * math.pi


def insert_bit(k, s, n, bit):
    """Basis index with qubit ``s`` set to ``bit`` and the other qubits set by ``k``."""
    low_width = n - 1 - s
    high = k >> low_width
    low = k & ((1 << low_width) - 1)
    return (high << (n - s)) | (bit << low_width) | low


def sweep_columns(k, s, n):
    """The two input columns ``(|k, 0_s>, |k, 1_s>)`` touched by sweep (k, s)."""
    return insert_bit(k, s, n, 0), insert_bit(k, s, n, 1)


def preparation_gates(basis_index, n):
    """X gates preparing ``basis_index`` from ``|0...0>``."""
    return tuple(Gate("X", (q,)) for q in range(n) if (basis_index >> (n - 1 - q)) & 1)


@dataclass
class PlannedSweep:
    k: int
    s: int
    axis: str
    angles: np.ndarray
    circuits: list


@dataclass
class SweepRecord:
    """Measured outcomes of one sweep.

    ``counts`` is ``(len(angles), 2**n)``; integer counts when ``shots`` is
    set, exact probabilities when ``shots`` is ``None``.
    """

    k: int
    s: int
    axis: str
    angles: np.ndarray
    counts: np.ndarray
    shots: int | None
    n: int
    kind: str = "characterization"
    mitigated: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise InvalidArgumentError(f"unknown axis {self.axis!r}")
        self.angles = np.asarray(self.angles, dtype=float)
        self.counts = np.asarray(self.counts)
        if self.counts.shape != (len(self.angles), 2**self.n):
            raise InvalidArgumentError(
                f"counts shape {self.counts.shape} does not match {len(self.angles)} angles and n={self.n}"
            )

    @property
    def exact(self):
        return self.shots is None

    @property
    def distributions(self):
        if self.exact:
            return np.asarray(self.counts, dtype=float)
        return self.counts / float(self.shots)

    @property
    def columns(self):
        return sweep_columns(self.k, self.s, self.n)

    @property
    def input_state(self):
        return insert_bit(self.k, self.s, self.n, 0)


def write_sweeps_csv(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for rec in records:
            shots = 0 if rec.exact else int(rec.shots)
            for theta, row in zip(rec.angles, rec.counts):
                for outcome, c in enumerate(row):
                    count = repr(float(c)) if rec.exact else int(c)
                    w.writerow((rec.k, rec.s, rec.axis, f"{theta:.12g}", outcome, count, shots))


def read_sweeps_csv(path, n=None, kind="characterization"):
    """Read every sweep stored in ``path``; ``n`` is inferred from the outcomes if omitted."""
    groups = defaultdict(lambda: defaultdict(dict))
    shots_of = {}
    max_outcome = 0
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise InvalidArgumentError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            key = (int(row["k"]), int(row["s"]), row["axis"])
            theta = float(row["theta"])
            outcome = int(row["outcome"])
            shots = int(row["shots"])
            groups[key][theta][outcome] = float(row["count"]) if shots == 0 else int(row["count"])
            shots_of[key] = shots
            max_outcome = max(max_outcome, outcome)
    if n is None:
        n = int(round(math.log2(max_outcome + 1)))
    d = 2**n
    records = []
    for key, by_theta in groups.items():
        angles = list(by_theta)
        counts = np.zeros((len(angles), d), dtype=float if shots_of[key] == 0 else np.int64)
        for i, theta in enumerate(angles):
            for outcome, c in by_theta[theta].items():
                counts[i, outcome] = c
        k, s, axis = key
        shots = shots_of[key] or None
        records.append(SweepRecord(k, s, axis, np.array(angles), counts, shots, n, kind))
    return records


def build_sweep_plan(n, n_theta, axes, rotated_qubits, suffix=()):
    """Sweeps over every ``k`` for each axis and rotated qubit.

    Each circuit prepares ``|k, 0_s>``, applies the swept rotation on ``s``
    and then the gates in ``suffix``.
    """
    angles = angle_grid(n_theta)
    plan = []
    for axis in axes:
        if axis not in AXES:
            raise InvalidArgumentError(f"unknown axis {axis!r}")
        for s in rotated_qubits:
            if not 0 <= s < n:
                raise InvalidArgumentError(f"rotated qubit {s} out of range for n={n}")
            for k in range(2 ** (n - 1)):
                prep = preparation_gates(insert_bit(k, s, n, 0), n)
                circuits = [
                    CircuitSpec(n, prep + (Gate("R" + axis, (s,), float(t), swept=True),) + tuple(suffix))
                    for t in angles
                ]
                plan.append(PlannedSweep(k, s, axis, angles, circuits))
    return plan


def execute_plan(plan, n, noise, shots=None, *, exact=False, seed=0, stream=0, kind="characterization",
                 max_workers=None):
    """Run every circuit of ``plan`` as one seeded batch and wrap the results."""
    circuits = [c for sweep in plan for c in sweep.circuits]
    rows = execute_batch(circuits, noise, shots, exact=exact, seed=seed, stream=stream, max_workers=max_workers)
    records = []
    i = 0
    for sweep in plan:
        m = len(sweep.circuits)
        records.append(
            SweepRecord(sweep.k, sweep.s, sweep.axis, sweep.angles, rows[i:i + m], None if exact else int(shots), n, kind)
        )
        i += m
    return records

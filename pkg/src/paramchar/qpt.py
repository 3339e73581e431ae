"""
Standard process tomography baseline.

Preparations are ``{|0>, |1>, |+>, |i>}`` per qubit and measurement settings
apply ``{I, Y(-pi/2), X(-pi/2)}`` per qubit before a Z-basis readout, giving
``4**n`` preparations, ``3**n`` settings (``6**n`` effects) and ``12**n``
circuits.

The linear model is ``lambda_ij = tr(E_j E(rho_i)) = sum_kl chi_kl tr(E_j P_k rho_i P_l)``
with ``chi`` in the ``trace_one`` convention, so the design matrix row for
(preparation i, effect j) and column ``k * 4**n + l`` is
``tr(E_j P_k rho_i P_l)``. Everything factorizes over qubits, so the design
matrix is assembled from the single-qubit tensor.
"""
from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import metrics
from .errors import InvalidArgumentError, RankDeficiencyError
from .estimation import mitigate_distribution, project_simplex
from .qcore import PAULI_LABELS, ProcessMatrix, chi_from_unitary, pauli_basis
from .simulator import STREAM_QPT, CircuitSpec, Gate, circuit_unitary, execute_batch, rotation_matrix, target_circuit

PREPARATIONS = ("0", "1", "+", "i")
SETTINGS = ("Z", "X", "Y")

_PREP_GATES = {
    "0": (),
    "1": (("X", None),),
    "+": (("RY", math.pi / 2),),
    "i": (("RX", -math.pi / 2),),
}
_MEAS_GATES = {"Z": (), "X": (("RY", -math.pi / 2),), "Y": (("RX", -math.pi / 2),)}

LAMBDA_CSV_HEADER = ("prep_index", "meas_setting", "outcome", "count", "shots")


def _gates(spec, qubit):
    return tuple(Gate(name, (qubit,), angle) for name, angle in spec)


def _one_qubit_matrix(spec):
    M = np.eye(2, dtype=complex)
    for name, angle in spec:
        G = np.array([[0, 1], [1, 0]], dtype=complex) if name == "X" else rotation_matrix(name[1], angle)
        M = G @ M
    return M


@dataclass(frozen=True)
class QptPlan:
    n: int
    preparations: tuple
    settings: tuple

    @property
    def n_circuits(self):
        return len(self.preparations) * len(self.settings)

    @property
    def n_effects(self):
        return len(self.settings) * 2**self.n

    def row_index(self, prep, setting, outcome):
        return (prep * len(self.settings) + setting) * 2**self.n + outcome

    def circuits(self, target=()):
        """One circuit per (preparation, setting), preparation-major."""
        target = tuple(target.gates if isinstance(target, CircuitSpec) else target)
        out = []
        for prep in self.preparations:
            pre = sum((_gates(_PREP_GATES[p], q) for q, p in enumerate(prep)), ())
            for setting in self.settings:
                post = sum((_gates(_MEAS_GATES[m], q) for q, m in enumerate(setting)), ())
                out.append(CircuitSpec(self.n, pre + target + post))
        return out


def qpt_plan(n):
    if n < 1:
        raise InvalidArgumentError("QPT needs n >= 1")
    return QptPlan(
        n,
        tuple(itertools.product(PREPARATIONS, repeat=n)),
        tuple(itertools.product(SETTINGS, repeat=n)),
    )


@lru_cache(maxsize=1)
def _single_qubit_tensor():
    """``b[i, m, b, k, l] = tr(E_{m,b} P_k rho_i P_l)`` for one qubit."""
    paulis = pauli_basis(1)
    zero = np.array([1, 0], dtype=complex)
    rhos = []
    for p in PREPARATIONS:
        v = _one_qubit_matrix(_PREP_GATES[p]) @ zero
        rhos.append(np.outer(v, v.conj()))
    effects = []
    for m in SETTINGS:
        M = _one_qubit_matrix(_MEAS_GATES[m])
        effects.append([M.conj().T @ np.diag([1.0 - b, float(b)]) @ M for b in (0, 1)])
    t = np.empty((4, 3, 2, 4, 4), dtype=complex)
    for i, rho in enumerate(rhos):
        for k, Pk in enumerate(paulis):
            for l, Pl in enumerate(paulis):
                X = Pk @ rho @ Pl
                for m in range(3):
                    for b in range(2):
                        t[i, m, b, k, l] = np.trace(effects[m][b] @ X)
    return t


def qpt_build_system(plan):
    """Design matrix ``B`` with rows ordered as :meth:`QptPlan.row_index` and
    columns ``k * 4**n + l``."""
    n = plan.n
    t = _single_qubit_tensor()
    B = t
    for _ in range(n - 1):
        B = np.multiply.outer(B, t)
    # Axes are now (i, m, b, k, l) repeated per qubit; regroup by kind.
    order = [q * 5 + a for a in range(5) for q in range(n)]
    B = B.transpose(order)
    return B.reshape(4**n * 3**n * 2**n, 16**n)


@lru_cache(maxsize=4)
def _system(n):
    B = qpt_build_system(qpt_plan(n))
    rank = np.linalg.matrix_rank(B)
    return B, rank


def psd_project(chi):
    """Nearest (Frobenius) positive semidefinite matrix with the same trace.

    The eigenvalues are projected onto the simplex scaled by the trace, which
    clips the negative ones and lowers the rest by a common shift.
    """
    w, v = np.linalg.eigh(chi)
    trace = float(np.sum(w))
    if trace <= 0:
        raise RankDeficiencyError("process matrix has nonpositive trace")
    w = project_simplex(w, trace)
    return (v * w) @ v.conj().T


def qpt_estimate_chi(plan, frequencies, psd_projection=True, normalization="trace_one"):
    """Least-squares process matrix from measured effect frequencies.

    ``frequencies`` is ``(4**n, 6**n)`` or ``(4**n, 3**n, 2**n)``. The linear
    solution is Hermitized and, if requested, projected onto the positive
    semidefinite cone with its trace preserved.
    """
    n = plan.n
    lam = np.asarray(frequencies, dtype=float).reshape(-1)
    B, rank = _system(n)
    if lam.shape[0] != B.shape[0] or not np.all(np.isfinite(lam)):
        raise InvalidArgumentError(f"need {B.shape[0]} finite frequencies, got {lam.shape[0]}")
    if rank < B.shape[1]:
        raise RankDeficiencyError(f"design matrix has rank {rank} < {B.shape[1]}")
    x, *_ = np.linalg.lstsq(B, lam.astype(complex), rcond=None)
    chi = x.reshape(4**n, 4**n)
    chi = (chi + chi.conj().T) / 2
    if psd_projection:
        chi = psd_project(chi)
    pm = ProcessMatrix(n, chi, "trace_one")
    return pm.renormalized(normalization)


@dataclass
class QptResult:
    plan: QptPlan
    data: np.ndarray
    shots: int | None
    chi: ProcessMatrix
    target_unitary: np.ndarray | None = None
    metrics: dict = field(default_factory=dict)

    @property
    def frequencies(self):
        return self.data if self.shots is None else self.data / self.shots


def run_qpt(target, noise, n, shots=5000, *, seed=0, exact=False, psd_projection=True, mitigate_readout=None,
            normalization="trace_one", max_workers=None):
    """Simulate and estimate QPT.

    ``mitigate_readout`` (a transition matrix) undoes readout errors before
    the fit; leave it ``None`` for standard, unmitigated tomography.
    """
    circuit = target_circuit(target, n)
    plan = qpt_plan(n)
    data = execute_batch(plan.circuits(circuit), noise, shots, exact=exact, seed=seed, stream=STREAM_QPT,
                         max_workers=max_workers)
    freqs = data if exact else data / shots
    if mitigate_readout is not None:
        freqs = np.array([mitigate_distribution(q, mitigate_readout) for q in freqs])
    freqs = freqs.reshape(len(plan.preparations), len(plan.settings), 2**n)
    chi = qpt_estimate_chi(plan, freqs, psd_projection, normalization)
    U0 = circuit_unitary(circuit)
    chi0 = chi_from_unitary(U0, normalization)
    result = QptResult(plan, data.reshape(freqs.shape), None if exact else int(shots), chi, U0)
    result.metrics = {
        "process_fidelity": metrics.process_fidelity(chi, chi0),
        "raw_process_fidelity": metrics.raw_process_fidelity(chi.chi, chi0.chi),
        "d_inf_entrywise": metrics.d_inf(chi, chi0, "entrywise"),
        "d_inf_operator": metrics.d_inf(chi, chi0, "operator"),
        "max_abs_imag_chi": float(np.max(np.abs(chi.chi.imag))),
    }
    return result


def setting_label(setting):
    return "".join(setting)


def write_lambda_csv(path, result):
    shots = 0 if result.shots is None else result.shots
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LAMBDA_CSV_HEADER)
        for i in range(result.data.shape[0]):
            for m in range(result.data.shape[1]):
                for b in range(result.data.shape[2]):
                    c = result.data[i, m, b]
                    w.writerow((i, m, b, repr(float(c)) if shots == 0 else int(c), shots))


def read_lambda_csv(path, n):
    """Return ``(frequencies, shots)``; ``shots`` is ``None`` for exact tables."""
    plan = qpt_plan(n)
    data = np.full((len(plan.preparations), len(plan.settings), 2**n), np.nan)
    shots = None
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != LAMBDA_CSV_HEADER:
            raise InvalidArgumentError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            shots = int(row["shots"]) or None
            data[int(row["prep_index"]), int(row["meas_setting"]), int(row["outcome"])] = float(row["count"])
    return (data if shots is None else data / shots), shots


def pauli_pair_labels(n):
    labels = ["".join(p) for p in itertools.product(PAULI_LABELS, repeat=n)]
    return [(a, b) for a in labels for b in labels]

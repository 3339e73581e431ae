"""
Characterization of a unitary from rotation sweeps.

For the input ``|k, 0_s>`` rotated by ``theta`` on qubit ``s`` and then sent
through ``U``, outcome ``j`` has probability ``(A_j + B_j cos + C_j sin) / 2``
with, writing ``a = U[j, c0]`` and ``b = U[j, c1]``::

    A_j = |a|^2 + |b|^2,   B_j = |a|^2 - |b|^2,
    C_j = 2 Re(a b*)        (Y rotation)
    C_j = -2 Im(a b*)       (X rotation)

Moduli follow from ``(A +- B) / 2``; the cross products fix relative phases
within each row. Row phases themselves are invisible to computational-basis
measurement (``U`` and ``D U`` give identical data for diagonal ``D``), so
every row is anchored at phase 0 on its largest entry and comparisons against
a known target go through :func:`paramchar.metrics.gauge_align`.
"""
from __future__ import annotations

import heapq
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .calibration import CalibrationResult, run_calibration
from .errors import DegenerateRowError, InvalidArgumentError, NoisyDataWarning
from .estimation import binomial_weights, fit_sinusoid, mitigate_distribution, nearest_unitary
from .qcore import ProcessMatrix, chi_from_unitary
from .simulator import STREAM_CHARACTERIZATION, circuit_unitary, target_circuit
from .sweeps import build_sweep_plan, execute_plan, sweep_columns

CYCLE_WARN_RAD = 0.5


def sweep_model(U, k, s, axis, n):
    """Exact ``(A, B, C)`` of sweep ``(k, s, axis)`` for a known unitary."""
    U = np.asarray(U, dtype=complex)
    c0, c1 = sweep_columns(k, s, n)
    a, b = U[:, c0], U[:, c1]
    A = np.abs(a) ** 2 + np.abs(b) ** 2
    B = np.abs(a) ** 2 - np.abs(b) ** 2
    cross = a * b.conj()
    C = 2 * cross.real if axis == "Y" else -2 * cross.imag
    return A, B, C


def model_distribution(U, k, s, axis, n, theta):
    A, B, C = sweep_model(U, k, s, axis, n)
    return 0.5 * (A + B * math.cos(theta) + C * math.sin(theta))


def characterization_sweep_plan(n, n_theta, axes=("Y",), target=()):
    """Sweeps over every ``(k, s)`` and axis, each followed by the target gates."""
    if n_theta < 3:
        raise InvalidArgumentError("characterization needs n_theta >= 3")
    return build_sweep_plan(n, n_theta, axes, range(n), target_circuit(target, n).gates)


def fit_sweep(record, cal=None, *, mitigate=True, weighted=False):
    """Mitigate readout errors, undo the rotation offset and fit the sinusoid."""
    cal = cal or CalibrationResult.ideal(record.n)
    if cal.n != record.n:
        raise InvalidArgumentError(f"calibration is for n={cal.n}, sweep for n={record.n}")
    data = record.distributions
    if mitigate and not np.allclose(cal.transition, np.eye(2**record.n)):
        data = np.array([mitigate_distribution(q, cal.transition) for q in data])
        record.mitigated = True
    angles = record.angles + cal.offset(record.s, record.axis)
    weights = None
    if weighted and not record.exact:
        weights = binomial_weights(data, record.shots)
    return fit_sinusoid(angles, data, weights)


@dataclass
class ReconstructionResult:
    U_hat: np.ndarray
    raw_matrix: np.ndarray
    unitarity_residual: float
    anchors: list
    cycle_inconsistency: float
    chi: ProcessMatrix
    warnings: list = field(default_factory=list)
    gauge_representative: bool = True


def _column_moduli(fits, n):
    d = 2**n
    num = np.zeros((d, d))
    den = np.zeros((d, d))
    for (k, s, axis), fit in fits.items():
        c0, c1 = sweep_columns(k, s, n)
        cov = fit.cov
        var_sum = (cov[:, 0, 0] + cov[:, 1, 1] + 2 * cov[:, 0, 1]) / 4
        var_diff = (cov[:, 0, 0] + cov[:, 1, 1] - 2 * cov[:, 0, 1]) / 4
        for c, est, var in ((c0, (fit.A + fit.B) / 2, var_sum), (c1, (fit.A - fit.B) / 2, var_diff)):
            w = 1.0 / (np.nan_to_num(var, nan=0.0) + 1e-15)
            num[:, c] += w * est
            den[:, c] += w
    missing = np.nonzero(den[0] == 0)[0]
    if missing.size:
        raise InvalidArgumentError(f"no sweep covers columns {missing.tolist()}")
    return np.sqrt(np.clip(num / den, 0.0, None))


def _cross_products(fits, n):
    """Edge cross products ``U[j, c0] conj(U[j, c1])`` per hypercube edge."""
    edges = {}
    for (k, s, axis), fit in fits.items():
        if axis != "Y":
            continue
        key = sweep_columns(k, s, n)
        imag = fits.get((k, s, "X"))
        g = fit.C / 2 + (0j if imag is None else -0.5j * imag.C)
        edges[key] = g
    return edges


def _assemble_row(moduli, edges, j, tau_rel=1e-3, cycle_rel=0.1):
    d = moduli.shape[0]
    top = moduli.max()
    if top <= 1e-12:
        raise DegenerateRowError(f"row {j} has no measurable entries")
    tau = tau_rel * top
    adj = {c: [] for c in range(d)}
    for (c0, c1), g in edges.items():
        if moduli[c0] > tau and moduli[c1] > tau:
            gj = g[j]
            adj[c0].append((c1, -np.angle(gj), moduli[c0] * moduli[c1]))
            adj[c1].append((c0, np.angle(gj), moduli[c0] * moduli[c1]))

    phase = np.zeros(d)
    seen = np.zeros(d, dtype=bool)
    anchors = []
    tree = set()
    for start in np.argsort(-moduli, kind="stable"):
        if seen[start]:
            continue
        anchors.append(int(start))
        seen[start] = True
        # Grow along the strongest available edge first.
        heap = [(-w, int(start), int(c), delta) for c, delta, w in adj[start]]
        heapq.heapify(heap)
        while heap:
            _, src, dst, delta = heapq.heappop(heap)
            if seen[dst]:
                continue
            seen[dst] = True
            phase[dst] = phase[src] + delta
            tree.add(frozenset((src, dst)))
            for c, dl, w in adj[dst]:
                if not seen[c]:
                    heapq.heappush(heap, (-w, dst, int(c), dl))

    worst = 0.0
    floor = cycle_rel * top
    for (c0, c1), g in edges.items():
        if frozenset((c0, c1)) in tree or moduli[c0] <= floor or moduli[c1] <= floor:
            continue
        mismatch = phase[c1] - phase[c0] + np.angle(g[j])
        worst = max(worst, abs(math.remainder(mismatch, 2 * math.pi)))
    return moduli * np.exp(1j * phase), anchors, worst


def reconstruct_unitary(fits, n, axes=None, normalization="trace_one"):
    """Assemble ``U`` from fitted sweep coefficients.

    ``fits`` maps ``(k, s, axis)`` to a :class:`SinusoidFit`; Y sweeps must
    cover every ``(k, s)``. X sweeps, when present, supply the imaginary parts
    of the cross products.
    """
    axes = tuple(axes or sorted({key[2] for key in fits}, reverse=True))
    required = {(k, s, "Y") for k in range(2 ** (n - 1)) for s in range(n)}
    if not required <= set(fits):
        raise InvalidArgumentError("Y sweeps must cover every (k, s) pair")
    notes = []
    if "X" not in axes:
        notes.append("Y-only sweeps: imaginary parts of cross terms assumed zero")

    moduli = _column_moduli(fits, n)
    edges = _cross_products(fits, n)
    d = 2**n
    raw = np.zeros((d, d), dtype=complex)
    anchors = []
    worst = 0.0
    for j in range(d):
        raw[j], row_anchors, inconsistency = _assemble_row(moduli[j], edges, j)
        anchors.append(row_anchors)
        worst = max(worst, inconsistency)
    if worst > CYCLE_WARN_RAD:
        msg = f"phase cycles disagree by up to {worst:.3f} rad"
        notes.append(msg)
        warnings.warn(msg, NoisyDataWarning, stacklevel=2)
    U_hat, residual = nearest_unitary(raw)
    return ReconstructionResult(U_hat, raw, residual, anchors, worst, chi_from_unitary(U_hat, normalization), notes)


@dataclass
class Characterization:
    reconstruction: ReconstructionResult
    calibration: CalibrationResult
    records: list
    calibration_records: list
    fits: dict
    target_unitary: np.ndarray | None = None
    metrics: dict = field(default_factory=dict)

    @property
    def aligned_unitary(self):
        """Reconstruction rephased row-wise towards the target (if known)."""
        if self.target_unitary is None:
            return self.reconstruction.U_hat
        return metrics.gauge_align(self.reconstruction.U_hat, self.target_unitary)

    def chi(self, normalization="trace_one"):
        return chi_from_unitary(self.aligned_unitary, normalization)


def characterize(target, noise, n, n_theta=51, shots=5000, *, axes=("Y",), seed=0, exact=False,
                 calibration=None, calibrate=True, calibration_axes=("Y", "X"), calibration_qubits=(0,),
                 mitigate=True, weighted=False, normalization="trace_one", max_workers=None):
    """Full pipeline: calibrate, sweep, fit, reconstruct, compare to target.

    ``target`` is a :class:`CircuitSpec`, a tuple of gates or a unitary
    matrix. A precomputed ``calibration`` skips the calibration sweeps;
    ``calibrate=False`` assumes an ideal device.
    """
    circuit = target_circuit(target, n)
    cal_records = []
    if calibration is None:
        if calibrate:
            calibration, cal_records = run_calibration(
                n, n_theta, noise, shots, exact=exact, seed=seed, axes=calibration_axes,
                qubits=calibration_qubits, max_workers=max_workers,
            )
        else:
            calibration = CalibrationResult.ideal(n)

    plan = characterization_sweep_plan(n, n_theta, axes, circuit.gates)
    records = execute_plan(plan, n, noise, shots, exact=exact, seed=seed, stream=STREAM_CHARACTERIZATION,
                           max_workers=max_workers)
    fits = {(r.k, r.s, r.axis): fit_sweep(r, calibration, mitigate=mitigate, weighted=weighted) for r in records}
    recon = reconstruct_unitary(fits, n, axes, normalization)

    U0 = circuit_unitary(circuit)
    result = Characterization(recon, calibration, records, cal_records, fits, U0)
    chi0 = chi_from_unitary(U0, normalization)
    chi_hat = result.chi(normalization)
    result.metrics = {
        "process_fidelity": metrics.process_fidelity(chi_hat, chi0),
        "raw_process_fidelity": metrics.raw_process_fidelity(chi_hat.chi, chi0.chi),
        "gauge_aligned_fidelity": metrics.gauge_aligned_fidelity(recon.U_hat, U0),
        "d_inf_entrywise": metrics.d_inf(chi_hat, chi0, "entrywise"),
        "d_inf_operator": metrics.d_inf(chi_hat, chi0, "operator"),
        "max_abs_imag_chi": float(np.max(np.abs(chi_hat.chi.imag))),
        "unitarity_residual": recon.unitarity_residual,
        "cycle_inconsistency": recon.cycle_inconsistency,
    }
    return result

"""
Deterministic state-vector execution of characterization circuits.

Readout noise is applied to the outcome distribution (``q = T p``) rather than
as per-shot bit flips; the two agree in law. The preparation offset theta0 is
added to the angle of every *swept* rotation gate on its qubit and axis; fixed
gates (including fixed-angle basis changes) are executed ideally.

Per-circuit random streams come from ``numpy.random.SeedSequence(master_seed,
spawn_key=(stream, index))`` so a batch gives the same counts regardless of the
order or thread in which its circuits run.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import qcore
from .errors import InvalidArgumentError

AXES = ("Y", "X")

# Random stream ids, kept apart so calibration, characterization and QPT
# batches sharing a master seed draw independent shots.
STREAM_CALIBRATION = 0
STREAM_CHARACTERIZATION = 1
STREAM_QPT = 2

_FIXED_1Q = {"I": qcore.I2, "X": qcore.X, "Y": qcore.Y, "Z": qcore.Z, "H": qcore.H, "S": qcore.S}


def rotation_matrix(axis, theta):
    """``exp(-i theta sigma/2)`` for sigma in {X, Y}."""
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    raise InvalidArgumentError(f"rotation axis must be 'X' or 'Y', got {axis!r}")


@dataclass(frozen=True)
class Gate:
    """One operation of a circuit.

    ``name`` is a fixed gate (I, X, Y, Z, H, S, CX), a rotation ``RY``/``RX``
    with ``angle``, or ``U`` carrying an explicit ``matrix`` on ``qubits``.
    """

    name: str
    qubits: tuple
    angle: float | None = None
    swept: bool = False
    matrix: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def axis(self):
        return {"RY": "Y", "RX": "X"}.get(self.name)

    def unitary(self, offset=0.0):
        if self.name in _FIXED_1Q:
            return _FIXED_1Q[self.name]
        if self.name == "CX":
            return qcore.CX
        if self.axis is not None:
            return rotation_matrix(self.axis, self.angle + offset)
        if self.name == "U":
            return np.asarray(self.matrix, dtype=complex)
        raise InvalidArgumentError(f"unknown gate {self.name!r}")


def rotation(axis, theta, qubit, swept=True):
    return Gate("R" + axis, (qubit,), float(theta), swept=swept)


def unitary_gate(matrix, qubits):
    return Gate("U", tuple(qubits), matrix=np.asarray(matrix, dtype=complex))


@dataclass(frozen=True)
class CircuitSpec:
    n: int
    gates: tuple = ()
    initial: int = 0

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n < 1:
            raise InvalidArgumentError("circuit needs at least one qubit")
        if not 0 <= self.initial < 2**self.n:
            raise InvalidArgumentError(f"initial basis label {self.initial} out of range")
        for g in self.gates:
            if any(not 0 <= q < self.n for q in g.qubits) or len(set(g.qubits)) != len(g.qubits):
                raise InvalidArgumentError(f"gate {g.name} has invalid qubits {g.qubits} for n={self.n}")
            if g.angle is not None and not math.isfinite(g.angle):
                raise InvalidArgumentError(f"gate {g.name} has non-finite angle")
            if g.name == "U":
                expected = 2 ** len(g.qubits)
                if g.matrix is None or np.shape(g.matrix) != (expected, expected):
                    raise InvalidArgumentError("U gate matrix does not match its qubits")

    def then(self, *gates):
        return CircuitSpec(self.n, self.gates + tuple(gates), self.initial)


@dataclass(frozen=True)
class NoiseProfile:
    """SPAM noise: readout transition matrix plus per-(qubit, axis) rotation offset."""

    transition: np.ndarray
    prep_phase: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        T = validate_transition(self.transition)
        object.__setattr__(self, "transition", T)
        phases = {}
        for key, value in dict(self.prep_phase).items():
            q, axis = key
            if axis not in AXES:
                raise InvalidArgumentError(f"unknown axis {axis!r} in prep_phase")
            if not abs(value) <= math.pi:
                raise InvalidArgumentError(f"|theta0| must be <= pi, got {value}")
            phases[(int(q), axis)] = float(value)
        object.__setattr__(self, "prep_phase", phases)

    @property
    def n(self):
        return qcore.num_qubits(self.transition.shape[0])

    def offset(self, qubit, axis):
        return self.prep_phase.get((qubit, axis), 0.0)

    @classmethod
    def ideal(cls, n, seed=0):
        return cls(np.eye(2**n), {}, seed)

    @classmethod
    def uniform(cls, n, transition=None, prep_phase=0.0, seed=0):
        """Same theta0 on every qubit and axis; ``transition`` defaults to identity."""
        T = np.eye(2**n) if transition is None else transition
        phases = {(q, a): prep_phase for q in range(n) for a in AXES}
        return cls(T, phases, seed)


def local_transition(per_qubit):
    """Tensor product of single-qubit 2x2 transition matrices (qubit 0 first)."""
    T = np.array([[1.0]])
    for t in per_qubit:
        T = np.kron(T, np.asarray(t, dtype=float))
    return T


def readout_matrix(t00, t11):
    """Single-qubit transition matrix from the two correct-assignment probabilities."""
    return np.array([[t00, 1 - t11], [1 - t00, t11]], dtype=float)


def validate_transition(T, atol=1e-9):
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise InvalidArgumentError(f"transition matrix must be square, got {T.shape}")
    qcore.num_qubits(T.shape[0])
    if np.any(T < -atol) or np.any(T > 1 + atol):
        raise InvalidArgumentError("transition matrix entries must lie in [0, 1]")
    if not np.allclose(T.sum(axis=0), 1.0, atol=atol, rtol=0):
        raise InvalidArgumentError("transition matrix columns must sum to 1")
    return T


def validate_distribution(p, atol=1e-9):
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise InvalidArgumentError("distribution must be a vector")
    qcore.num_qubits(p.shape[0])
    if np.any(p < -atol) or abs(p.sum() - 1.0) > atol:
        raise InvalidArgumentError("not a probability distribution")
    return p


def rotation_gate(axis, theta, qubit, n):
    """Single-qubit rotation embedded in the n-qubit space."""
    if not 0 <= qubit < n:
        raise InvalidArgumentError(f"qubit {qubit} out of range for n={n}")
    if not math.isfinite(theta):
        raise InvalidArgumentError("rotation angle must be finite")
    ops = [qcore.I2] * n
    ops[qubit] = rotation_matrix(axis, theta)
    return qcore.kron(*ops)


def apply_gate(state, matrix, qubits, n):
    """Apply a k-qubit matrix to ``qubits`` of an n-qubit state vector."""
    k = len(qubits)
    psi = state.reshape((2,) * n)
    m = np.asarray(matrix).reshape((2,) * (2 * k))
    psi = np.tensordot(m, psi, axes=(list(range(k, 2 * k)), list(qubits)))
    psi = np.moveaxis(psi, list(range(k)), list(qubits))
    return psi.reshape(-1)


def final_state(circuit, noise=None):
    psi = np.zeros(2**circuit.n, dtype=complex)
    psi[circuit.initial] = 1.0
    for g in circuit.gates:
        offset = 0.0
        if noise is not None and g.swept and g.axis is not None:
            offset = noise.offset(g.qubits[0], g.axis)
        psi = apply_gate(psi, g.unitary(offset), g.qubits, circuit.n)
    return psi


def target_circuit(target, n):
    """Normalize a target (circuit, gate sequence or unitary matrix) into a :class:`CircuitSpec`."""
    if isinstance(target, CircuitSpec):
        return target
    if isinstance(target, np.ndarray):
        return CircuitSpec(n, (unitary_gate(target, range(n)),))
    return CircuitSpec(n, tuple(target))


def circuit_unitary(circuit):
    """Full unitary of the gate list (the initial label is ignored)."""
    d = 2**circuit.n
    cols = []
    for c in range(d):
        cols.append(final_state(CircuitSpec(circuit.n, circuit.gates, c)))
    return np.stack(cols, axis=1)


def _normalize(p):
    p = np.clip(np.real(p), 0.0, None)
    return p / p.sum()


def ideal_distribution(circuit):
    """Exact Z-basis outcome probabilities ``|<j|U_circuit|initial>|^2``."""
    return _normalize(np.abs(final_state(circuit)) ** 2)


def apply_readout_noise(p, T):
    p = np.asarray(p, dtype=float)
    T = np.asarray(T, dtype=float)
    if T.shape != (p.shape[0], p.shape[0]):
        raise InvalidArgumentError(f"transition {T.shape} does not match distribution of length {p.shape[0]}")
    return _normalize(T @ p)


def sample_counts(p, shots, seed):
    """Seeded multinomial draw of ``shots`` outcomes from ``p``."""
    if int(shots) != shots or shots < 1:
        raise InvalidArgumentError(f"shots must be a positive integer, got {shots!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.multinomial(int(shots), _normalize(p))


def noisy_distribution(circuit, noise):
    """Exact distribution seen through the noise profile (no sampling)."""
    p = np.abs(final_state(circuit, noise)) ** 2
    return apply_readout_noise(_normalize(p), noise.transition)


def run_noisy(circuit, noise, shots=None, *, exact=False, seed=None):
    """Execute ``circuit`` under ``noise`` and return the empirical distribution.

    With ``exact=True`` the noisy ideal distribution is returned without
    sampling. Otherwise ``shots`` outcomes are drawn with ``seed`` (falling
    back to ``noise.seed``).
    """
    q = noisy_distribution(circuit, noise)
    if exact:
        return q
    counts = sample_counts(q, shots, noise.seed if seed is None else seed)
    return counts / counts.sum()


def circuit_seed(master_seed, stream, index):
    return np.random.SeedSequence(int(master_seed), spawn_key=(int(stream), int(index)))


def execute_batch(circuits, noise, shots=None, *, exact=False, seed=0, stream=0, max_workers=None):
    """Run many circuits; returns an ``(m, 2**n)`` array.

    Rows are integer counts when sampling and exact probabilities when
    ``exact``. Each circuit draws from its own derived seed, so the result is
    independent of ``max_workers``.
    """
    circuits = list(circuits)

    def one(i):
        q = noisy_distribution(circuits[i], noise)
        if exact:
            return q
        return sample_counts(q, shots, np.random.default_rng(circuit_seed(seed, stream, i)))

    if not exact and (shots is None or int(shots) != shots or shots < 1):
        raise InvalidArgumentError("sampling mode needs a positive integer shot count")
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rows = list(pool.map(one, range(len(circuits))))
    else:
        rows = [one(i) for i in range(len(circuits))]
    if not rows:
        return np.zeros((0, 0))
    return np.array(rows, dtype=float if exact else np.int64)

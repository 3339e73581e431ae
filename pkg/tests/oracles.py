"""Independent reference implementations used only by the tests.

Everything here is written from dense matrices and definitions, without
reusing the package's tensor contractions.
"""
import itertools
import math

import numpy as np

I2 = np.eye(2)
P0 = np.diag([1.0, 0.0])
P1 = np.diag([0.0, 1.0])
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0]).astype(complex)
HAD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
FIXED = {"I": I2, "X": SX, "Y": SY, "Z": SZ, "H": HAD, "S": np.diag([1, 1j])}


def embed(op, qubit, n):
    mats = [I2] * n
    mats[qubit] = op
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def cnot(control, target, n):
    return embed(P0, control, n) + embed(P1, control, n) @ embed(SX, target, n)


def rot(axis, theta):
    sigma = SY if axis == "Y" else SX
    return math.cos(theta / 2) * I2 - 1j * math.sin(theta / 2) * sigma


def dense_unitary(gates, n, offsets=None):
    """Dense product of a gate list; ``offsets[(q, axis)]`` shifts swept rotations."""
    offsets = offsets or {}
    U = np.eye(2**n, dtype=complex)
    for g in gates:
        if g.name == "CX":
            G = cnot(g.qubits[0], g.qubits[1], n)
        elif g.name in ("RY", "RX"):
            ax = g.name[1]
            extra = offsets.get((g.qubits[0], ax), 0.0) if g.swept else 0.0
            G = embed(rot(ax, g.angle + extra), g.qubits[0], n)
        elif g.name == "U":
            assert len(g.qubits) == n and list(g.qubits) == list(range(n))
            G = np.asarray(g.matrix)
        else:
            G = embed(FIXED[g.name], g.qubits[0], n)
        U = G @ U
    return U


def paulis(n):
    return [_kron_all([{"I": I2, "X": SX, "Y": SY, "Z": SZ}[c] for c in lab])
            for lab in itertools.product("IXYZ", repeat=n)]


def _kron_all(ms):
    out = np.array([[1.0 + 0j]])
    for m in ms:
        out = np.kron(out, m)
    return out


def chi_of_unitary(U):
    """trace_one chi by solving U rho U^dag = sum chi_kl P_k rho P_l through
    the Choi matrix: chi_kl = <<P_k| Choi |P_l>> / d^2."""
    d = U.shape[0]
    vecU = U.reshape(-1, order="F")
    choi = np.outer(vecU, vecU.conj())
    P = paulis(int(round(math.log2(d))))
    V = np.array([p.reshape(-1, order="F") for p in P]).T
    return V.conj().T @ choi @ V / d**2


def sweep_oracle(U, k, s, axis, theta, n):
    """Outcome probabilities for the sweep input |k with 0 at s> rotated by theta, then U."""
    others = [q for q in range(n) if q != s]
    bits = [0] * n
    for pos, q in enumerate(others):
        bits[q] = (k >> (len(others) - 1 - pos)) & 1
    idx = int("".join(map(str, bits)), 2)
    psi = np.zeros(2**n, dtype=complex)
    psi[idx] = 1.0
    psi = U @ embed(rot(axis, theta), s, n) @ psi
    return np.abs(psi) ** 2

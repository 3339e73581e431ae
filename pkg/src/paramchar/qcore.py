"""
Linear algebra over the n-qubit Hilbert space.

Conventions used throughout the package:

* Qubit 0 is the most significant bit of a basis label, so ``|q0 q1 ... q_{n-1}>``
  has index ``q0 * 2**(n-1) + ... + q_{n-1}``.
* Operators are dense ``(2**n, 2**n)`` complex arrays with row = output basis
  state and column = input basis state.
* The Pauli basis is ordered lexicographically over (I, X, Y, Z) per qubit,
  qubit 0 first. For n=2 element 5 is ``X (x) X``.

Two normalizations of the process matrix are supported:

``trace_one``
    ``u_k = tr(U P_k) / 2**n`` so that ``tr(chi) = 1`` and
    ``U rho U^dag = sum_kl chi_kl P_k rho P_l``.
``trace_d``
    ``u_k = tr(U P_k) / sqrt(2**n)`` so that ``tr(chi) = 2**n`` and
    ``U rho U^dag = 2**-n sum_kl chi_kl P_k rho P_l``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .errors import InvalidArgumentError

Normalization = Literal["trace_one", "trace_d"]
NORMALIZATIONS = ("trace_one", "trace_d")

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
CX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

PAULI_LABELS = ("I", "X", "Y", "Z")
_PAULIS_1Q = (I2, X, Y, Z)


def _check_n(n):
    if int(n) != n or n < 1:
        raise InvalidArgumentError(f"qubit count must be an integer >= 1, got {n!r}")
    return int(n)


def num_qubits(dim):
    """Return n for a dimension 2**n, raising for anything else."""
    n = int(round(np.log2(dim))) if dim > 0 else -1
    if n < 1 or 2**n != dim:
        raise InvalidArgumentError(f"dimension {dim} is not a power of two >= 2")
    return n


def kron(*ops):
    out = np.array([[1.0 + 0j]])
    for op in ops:
        out = np.kron(out, op)
    return out


@lru_cache(maxsize=8)
def _pauli_basis_cached(n):
    mats = []
    for combo in itertools.product(_PAULIS_1Q, repeat=n):
        m = kron(*combo)
        m.setflags(write=False)
        mats.append(m)
    return tuple(mats)


def pauli_basis(n):
    """Ordered list of the 4**n Pauli operators on n qubits (identity first)."""
    return list(_pauli_basis_cached(_check_n(n)))


def pauli_labels(n):
    return ["".join(p) for p in itertools.product(PAULI_LABELS, repeat=_check_n(n))]


def is_unitary(U, atol=1e-12):
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        return False
    return np.allclose(U.conj().T @ U, np.eye(U.shape[0]), atol=atol, rtol=0)


def as_unitary(U, atol=1e-10):
    """Validate and return ``U`` as a complex array."""
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got shape {U.shape}")
    num_qubits(U.shape[0])
    if not is_unitary(U, atol=atol):
        raise InvalidArgumentError("matrix is not unitary")
    return U


def random_unitary(dim, rng):
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density_matrix(dim, rng):
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _scale(n, normalization):
    if normalization == "trace_one":
        return 2.0**n
    if normalization == "trace_d":
        return np.sqrt(2.0**n)
    raise InvalidArgumentError(
        f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}"
    )


@dataclass(frozen=True)
class PauliCoefficients:
    n: int
    u: np.ndarray
    normalization: str = "trace_one"

    def to_unitary(self):
        """Invert the expansion: ``U = scale * sum_k u_k P_k / 2**n``."""
        d = 2**self.n
        scale = _scale(self.n, self.normalization)
        basis = _pauli_basis_cached(self.n)
        return scale / d * sum(uk * P for uk, P in zip(self.u, basis))


@dataclass(frozen=True)
class ProcessMatrix:
    """Process matrix in the Pauli basis together with its normalization label."""

    n: int
    chi: np.ndarray
    normalization: str = "trace_one"

    def __post_init__(self):
        _scale(self.n, self.normalization)
        chi = np.asarray(self.chi, dtype=complex)
        if chi.shape != (4**self.n, 4**self.n):
            raise InvalidArgumentError(
                f"chi for n={self.n} must be {4**self.n}x{4**self.n}, got {chi.shape}"
            )
        object.__setattr__(self, "chi", chi)

    @property
    def trace(self):
        return complex(np.trace(self.chi))

    def renormalized(self, normalization):
        """Same process under another normalization label."""
        if normalization == self.normalization:
            return self
        factor = 2**self.n if normalization == "trace_d" else 2.0**-self.n
        _scale(self.n, normalization)
        return ProcessMatrix(self.n, self.chi * factor, normalization)

    def apply(self, rho):
        """Evaluate ``sum_kl chi_kl P_k rho P_l`` with the normalization factor."""
        basis = _pauli_basis_cached(self.n)
        out = np.zeros_like(np.asarray(rho, dtype=complex))
        for k, Pk in enumerate(basis):
            left = Pk @ rho
            for l, Pl in enumerate(basis):
                c = self.chi[k, l]
                if c != 0:
                    out += c * left @ Pl
        if self.normalization == "trace_d":
            out /= 2**self.n
        return out


def pauli_coefficients(U, normalization="trace_one"):
    """Expansion coefficients of ``U`` in the Pauli basis."""
    U = np.asarray(U, dtype=complex)
    n = num_qubits(U.shape[0])
    scale = _scale(n, normalization)
    # tr(U P_k) = sum_ij U_ij (P_k)_ji
    u = np.array([np.sum(U * P.T) for P in _pauli_basis_cached(n)]) / scale
    return PauliCoefficients(n, u, normalization)


def chi_from_unitary(U, normalization="trace_one"):
    """Rank-one process matrix ``chi_kl = u_k conj(u_l)`` of the map rho -> U rho U^dag."""
    coeffs = pauli_coefficients(U, normalization)
    return ProcessMatrix(coeffs.n, np.outer(coeffs.u, coeffs.u.conj()), normalization)

"""Fidelities, distances and circuit-budget arithmetic."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidArgumentError
from .qcore import ProcessMatrix


def _chi_array(chi):
    return chi.chi if isinstance(chi, ProcessMatrix) else np.asarray(chi, dtype=complex)


def process_fidelity(chi, chi0):
    """Normalized overlap ``tr(chi chi0) / (tr chi * tr chi0)``, clipped to [0, 1].

    Independent of either argument's normalization; equals 1 for identical
    unitary processes.
    """
    a, b = _chi_array(chi), _chi_array(chi0)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"process matrices differ in shape: {a.shape} vs {b.shape}")
    ta, tb = np.trace(a).real, np.trace(b).real
    if abs(ta) < 1e-15 or abs(tb) < 1e-15:
        raise InvalidArgumentError("process matrix has zero trace")
    f = np.real(np.trace(a @ b)) / (ta * tb)
    return float(min(max(f, 0.0), 1.0))


def raw_process_fidelity(chi, chi0):
    """``tr(chi chi0) / 4**n`` on the matrices exactly as given (no renormalization)."""
    a, b = _chi_array(chi), _chi_array(chi0)
    return float(np.real(np.trace(a @ b)) / a.shape[0])


def gauge_phases(U_hat, U0):
    """Diagonal phases ``D`` maximizing ``|tr(D U_hat U0^dag)|``."""
    diag = np.diag(np.asarray(U_hat) @ np.asarray(U0).conj().T)
    phases = np.ones_like(diag)
    nz = np.abs(diag) > 0
    phases[nz] = np.conj(diag[nz]) / np.abs(diag[nz])
    return phases


def gauge_align(U_hat, U0):
    """Row-rephased copy ``D U_hat`` closest to ``U0``."""
    return gauge_phases(U_hat, U0)[:, None] * np.asarray(U_hat)


def gauge_aligned_fidelity(U_hat, U0):
    """``max_D |tr(D U_hat U0^dag)|^2 / 4**n = (sum_j |(U_hat U0^dag)_jj|)^2 / 4**n``."""
    U_hat, U0 = np.asarray(U_hat), np.asarray(U0)
    if U_hat.shape != U0.shape:
        raise InvalidArgumentError(f"dimension mismatch: {U_hat.shape} vs {U0.shape}")
    d = U0.shape[0]
    return float(np.sum(np.abs(np.diag(U_hat @ U0.conj().T))) ** 2 / d**2)


def d_inf(chi1, chi2, mode="entrywise"):
    """Largest entry modulus (``entrywise``) or spectral norm (``operator``) of the difference."""
    if isinstance(chi1, ProcessMatrix) and isinstance(chi2, ProcessMatrix):
        if chi1.normalization != chi2.normalization:
            raise InvalidArgumentError(
                f"normalization mismatch: {chi1.normalization} vs {chi2.normalization}"
            )
    a, b = _chi_array(chi1), _chi_array(chi2)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"process matrices differ in shape: {a.shape} vs {b.shape}")
    diff = a - b
    if mode == "entrywise":
        return float(np.max(np.abs(diff)))
    if mode == "operator":
        return float(np.linalg.norm(diff, 2))
    raise InvalidArgumentError(f"unknown d_inf mode {mode!r}")


@dataclass(frozen=True)
class ResourceCounts:
    n: int
    n_theta: int
    n_ppc_total: int
    n_ppc_calibration: int
    n_ppc_characterization: int
    n_qpt: int

    def as_dict(self):
        return asdict(self)


def resource_counts(n, n_theta):
    """Circuit budgets: ``2**(n-1) (n+2) n_theta`` for PPC against ``12**n`` for QPT.

    These are the closed-form counts; the planners execute ``n_theta + 1``
    angles per sweep.
    """
    if n < 1 or n_theta < 1:
        raise InvalidArgumentError("n and n_theta must be >= 1")
    cal = 2**n * n_theta
    char = 2 ** (n - 1) * n * n_theta
    return ResourceCounts(n, n_theta, cal + char, cal, char, 12**n)


def bootstrap_std(values, resamples=10_000, seed=0, statistic=np.mean):
    """Nonparametric bootstrap standard deviation of ``statistic`` (default: the mean)."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise InvalidArgumentError("bootstrap needs at least two samples")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(int(resamples), values.size))
    stats = statistic(values[idx], axis=1)
    return float(np.std(stats))

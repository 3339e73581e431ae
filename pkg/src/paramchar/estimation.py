"""
Fitting and projection primitives.

* ``fit_sinusoid``: per-outcome linear least squares of ``P(theta) = (A + B cos + C sin)/2``.
* ``fit_phase_and_linear``: separable least squares for a scalar angle offset
  with an inner linear problem (grid scan + golden section on the profiled RSS).
* ``mitigate_distribution``: readout-error inversion constrained to the simplex.
* ``nearest_unitary``: polar projection.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    FitFailureError,
    IllConditionedError,
    IllConditionedWarning,
    InvalidArgumentError,
)

_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass
class SinusoidFit:
    """Coefficients of ``P_j(theta) = (A_j + B_j cos theta + C_j sin theta) / 2``.

    ``stderr`` has shape ``(3, d)`` (rows A, B, C); ``cov`` has shape
    ``(d, 3, 3)`` and is the per-outcome covariance of ``(A, B, C)``.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    residual: float
    stderr: np.ndarray
    cov: np.ndarray

    def predict(self, angles):
        angles = np.asarray(angles, dtype=float)[:, None]
        return 0.5 * (self.A + self.B * np.cos(angles) + self.C * np.sin(angles))


def sinusoid_design(angles):
    angles = np.asarray(angles, dtype=float)
    return np.column_stack([np.ones_like(angles), np.cos(angles), np.sin(angles)])


def binomial_weights(p, shots):
    """Inverse-variance weights ``N / max(p (1 - p), 1/(4N))``."""
    p = np.asarray(p, dtype=float)
    var = np.maximum(p * (1 - p), 1.0 / (4 * shots)) / shots
    return 1.0 / var


def _weighted_lstsq(X, y, w):
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    return coef


def fit_sinusoid(angles, data, weights=None, cond_limit=1e10):
    """Fit the three-term sinusoid to every outcome column of ``data``.

    ``data`` is ``(m, d)``: one distribution per angle. ``weights`` may be
    ``None``, per-angle ``(m,)`` or per-point ``(m, d)``. Standard errors use
    the residual variance of each outcome (reduced chi-square scaling).
    """
    X = sinusoid_design(angles)
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    m, d = data.shape
    if X.shape[0] != m:
        raise InvalidArgumentError(f"{X.shape[0]} angles but {m} data rows")
    if m < 3:
        raise IllConditionedError("need at least three angles to fit a sinusoid")
    sv = np.linalg.svd(X, compute_uv=False)
    if sv[-1] <= sv[0] / cond_limit:
        raise IllConditionedError(f"angle set is degenerate (condition number {sv[0] / max(sv[-1], 1e-300):.3g})")

    if weights is None:
        W = np.ones((m, d))
    else:
        W = np.asarray(weights, dtype=float)
        W = np.broadcast_to(W[:, None] if W.ndim == 1 else W, (m, d))

    coefs = np.empty((3, d))
    cov = np.empty((d, 3, 3))
    dof = m - 3
    sq = 0.0
    for j in range(d):
        w = W[:, j]
        coefs[:, j] = _weighted_lstsq(X, data[:, j], w)
        r = data[:, j] - X @ coefs[:, j]
        sq += float(r @ r)
        xtwx_inv = np.linalg.inv(X.T @ (X * w[:, None]))
        sigma2 = float((w * r * r).sum()) / dof if dof > 0 else np.nan
        # Coefficients of (A, B, C) are twice the regression coefficients.
        cov[j] = 4.0 * sigma2 * xtwx_inv
    A, B, C = 2.0 * coefs
    stderr = np.sqrt(np.clip(np.diagonal(cov, axis1=1, axis2=2).T, 0, None))
    return SinusoidFit(A, B, C, math.sqrt(sq / (m * d)), stderr, cov)


# Separable fit -------------------------------------------------------------

def calibration_family(phi):
    """Design ``[cos^2(phi/2), sin^2(phi/2)]`` for a rotated ground state."""
    phi = np.asarray(phi, dtype=float)
    return np.column_stack([np.cos(phi / 2) ** 2, np.sin(phi / 2) ** 2])


MODEL_FAMILIES = {"calibration": calibration_family, "sinusoid": sinusoid_design}


@dataclass
class PhaseFit:
    """Result of a separable (offset, linear coefficients) fit.

    ``coefs`` holds one ``(p, d)`` array per data block; ``coef_stderr``
    matches it. ``theta0_stderr`` is zero for noise-free data.
    """

    theta0: float
    coefs: list
    rss: float
    residual: float
    theta0_stderr: float
    coef_stderr: list
    n_solves: int


def _profile(design, blocks, theta0, angles):
    X = design(angles + theta0)
    rss = 0.0
    coefs = []
    for Y in blocks:
        c, *_ = np.linalg.lstsq(X, Y, rcond=None)
        r = Y - X @ c
        rss += float(np.sum(r * r))
        coefs.append(c)
    return rss, coefs


def fit_phase_and_linear(angles, data, family="calibration", bounds=(-math.pi / 4, math.pi / 4),
                         grid_points=101, max_solves=200, xtol=1e-12):
    """Fit ``data ~ family(angles + theta0) @ coefs`` with a shared scalar ``theta0``.

    ``data`` is one ``(m, d)`` array or a list of them (blocks with their own
    coefficients but a common offset). The offset is found by scanning
    ``grid_points`` values in ``bounds`` and refining the best bracket by
    golden-section search; each profile evaluation is one inner solve.
    """
    design = MODEL_FAMILIES[family] if isinstance(family, str) else family
    angles = np.asarray(angles, dtype=float)
    blocks = [np.asarray(data, dtype=float)] if np.ndim(data) == 2 else [np.asarray(b, dtype=float) for b in data]
    blocks = [b[:, None] if b.ndim == 1 else b for b in blocks]
    if len(angles) < 3:
        raise IllConditionedError("need at least three angles")
    lo, hi = bounds
    grid = np.linspace(lo, hi, grid_points)
    solves = 0
    values = []
    for t in grid:
        values.append(_profile(design, blocks, t, angles)[0])
        solves += 1
    i = int(np.argmin(values))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]

    c = b - _GOLDEN * (b - a)
    e = a + _GOLDEN * (b - a)
    fc = _profile(design, blocks, c, angles)[0]
    fe = _profile(design, blocks, e, angles)[0]
    solves += 2
    while b - a > xtol:
        if solves >= max_solves:
            if b - a > 1e-6:
                raise FitFailureError(
                    "offset search did not converge",
                    {"bracket": (a, b), "solves": solves},
                )
            break
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - _GOLDEN * (b - a)
            fc = _profile(design, blocks, c, angles)[0]
        else:
            a, c, fc = c, e, fe
            e = a + _GOLDEN * (b - a)
            fe = _profile(design, blocks, e, angles)[0]
        solves += 1
    theta0 = 0.5 * (a + b)
    rss, coefs = _profile(design, blocks, theta0, angles)
    solves += 1

    theta_se, coef_se = _separable_stderr(design, blocks, angles, theta0, coefs)
    n_obs = sum(b.size for b in blocks)
    return PhaseFit(theta0, coefs, rss, math.sqrt(rss / n_obs), theta_se, coef_se, solves)


def _separable_stderr(design, blocks, angles, theta0, coefs, h=1e-6):
    """Standard errors of (theta0, all coefficients).

    The outcomes measured at one angle sum to one, so their residuals are
    correlated; the covariance is the cluster-robust sandwich with one cluster
    per measured distribution.
    """
    X = design(angles + theta0)
    dX = (design(angles + theta0 + h) - design(angles + theta0 - h)) / (2 * h)
    m, p = X.shape
    n_coef = sum(c.size for c in coefs)
    n_par = 1 + n_coef
    bread = np.zeros((n_par, n_par))
    meat = np.zeros((n_par, n_par))
    col = 1
    n_obs = 0
    for c, Y in zip(coefs, blocks):
        d = c.shape[1]
        R = Y - X @ c
        # Jacobian rows for one angle: (d outcomes) x (theta0, own coefficients)
        Jt = dX @ c  # (m, d)
        J = np.zeros((m, d, n_par))
        J[:, :, 0] = Jt
        for j in range(d):
            J[:, j, col + j * p:col + (j + 1) * p] = X
        bread += np.einsum("mda,mdb->ab", J, J)
        g = np.einsum("mda,md->ma", J, R)
        meat += g.T @ g
        col += c.size
        n_obs += Y.size
    clusters = sum(b.shape[0] for b in blocks)
    dof = n_obs - n_par
    if dof <= 0 or clusters <= 1:
        cov = np.full((n_par, n_par), np.nan)
    else:
        inv = np.linalg.pinv(bread)
        cov = inv @ meat @ inv * (clusters / (clusters - 1)) * ((n_obs - 1) / dof)
    se = np.sqrt(np.clip(np.diag(cov), 0, None))
    coef_se = []
    col = 1
    for c in coefs:
        p_, d = c.shape
        # parameters are ordered outcome-major, coefficient-minor
        coef_se.append(se[col:col + c.size].reshape(d, p_).T)
        col += c.size
    return float(se[0]), coef_se


# Mitigation ----------------------------------------------------------------

def project_simplex(v, z=1.0):
    """Euclidean projection of ``v`` onto ``{p >= 0, sum p = z}``."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - z
    idx = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(v - tau, 0.0)


def _kkt_polish(T, q, p, tol=1e-12):
    """Solve the equality-constrained problem on the support of ``p`` and
    accept it only if it satisfies the full KKT conditions."""
    support = np.nonzero(p > tol)[0]
    if support.size == 0:
        return None
    Ts = T[:, support]
    k = support.size
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = Ts.T @ Ts
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.concatenate([Ts.T @ q, [1.0]])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        return None
    ps, mu = sol[:k], sol[k]
    if np.any(ps < -tol):
        return None
    cand = np.zeros_like(p)
    cand[support] = np.maximum(ps, 0.0)
    # Multiplier sign convention: grad_i = (T^T (T p - q))_i must equal -mu on
    # the support and be >= -mu off it.
    grad = T.T @ (T @ cand - q)
    off = np.setdiff1d(np.arange(len(p)), support)
    if off.size and np.any(grad[off] + mu < -1e-10):
        return None
    return cand / cand.sum()


def simplex_lstsq(T, q, max_iter=20000, tol=1e-15):
    """``argmin_{p in simplex} ||q - T p||_2`` by accelerated projected gradient
    followed by an exact solve on the detected support."""
    T = np.asarray(T, dtype=float)
    q = np.asarray(q, dtype=float)
    L = np.linalg.norm(T, 2) ** 2
    p = project_simplex(np.linalg.lstsq(T, q, rcond=None)[0])
    y, t = p.copy(), 1.0
    for _ in range(max_iter):
        p_next = project_simplex(y - (T.T @ (T @ y - q)) / L)
        t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
        y = p_next + ((t - 1) / t_next) * (p_next - p)
        step = np.max(np.abs(p_next - p))
        p, t = p_next, t_next
        if step < tol:
            break
    polished = _kkt_polish(T, q, p)
    if polished is not None and np.linalg.norm(T @ polished - q) <= np.linalg.norm(T @ p - q) + 1e-15:
        return polished
    return p


def mitigate_distribution(q, T, cond_warn=1e8):
    """Recover the pre-readout distribution from ``q = T p`` on the simplex.

    When ``T^{-1} q`` is already a distribution it is returned directly;
    otherwise the simplex-constrained least-squares problem is solved. A
    :class:`IllConditionedWarning` is emitted when ``cond(T) > cond_warn``.
    """
    T = np.asarray(T, dtype=float)
    q = np.asarray(q, dtype=float)
    if T.shape != (q.shape[0], q.shape[0]):
        raise InvalidArgumentError(f"transition {T.shape} does not match distribution of length {q.shape[0]}")
    cond = np.linalg.cond(T)
    if not cond < cond_warn:
        warnings.warn(f"transition matrix is ill-conditioned (cond={cond:.3g})", IllConditionedWarning, stacklevel=2)
    else:
        p = np.linalg.solve(T, q)
        if np.all(p >= -1e-13):
            p = np.maximum(p, 0.0)
            return p / p.sum()
    return simplex_lstsq(T, q)


# Unitary projection --------------------------------------------------------

def nearest_unitary(M, rcond=1e-12):
    """Polar factor ``W`` of ``M = W P`` and the distance ``||M - W||_F``."""
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidArgumentError(f"expected a square matrix, got {M.shape}")
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] <= rcond * max(sv[0], 1e-300):
        raise FitFailureError(
            "matrix is numerically singular; no unique nearest unitary",
            {"smallest_singular_value": float(sv[-1])},
        )
    W, _ = scipy.linalg.polar(M, side="right")
    return W, float(np.linalg.norm(M - W))

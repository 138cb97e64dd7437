"""Dense symmetric eigendecomposition and correlation statistics.

The eigensolver is a self-contained cyclic Jacobi iteration.  The matrices
in this package (bias covariances, centered Gram matrices) are small dense
symmetric matrices for which Jacobi is accurate and, with the sign and
tie-breaking rules below, fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

_SYMMETRY_TOL = 1e-9
_OFFDIAG_TOL = 1e-12
_MAX_SWEEPS = 100


@dataclass(frozen=True)
class SymmetricEigen:
    """Eigenvalues in descending order, eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _offdiag_norm(a: np.ndarray) -> float:
    off = a - np.diag(np.diag(a))
    return float(np.linalg.norm(off))


def symmetric_eig(a: np.ndarray) -> SymmetricEigen:
    """Eigendecomposition of a real symmetric matrix by cyclic Jacobi.

    Convergence: off-diagonal Frobenius norm below 1e-12 times the
    Frobenius norm of the input, capped at 100 sweeps.  Eigenvalues are
    returned in descending order (ties broken by pre-sort position); each
    eigenvector is sign-fixed so its largest-magnitude component is
    positive.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise NumericalError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NumericalError("matrix contains non-finite entries")
    if np.max(np.abs(a - a.T)) > _SYMMETRY_TOL:
        raise NumericalError(
            f"matrix is not symmetric within {_SYMMETRY_TOL:g}"
        )

    n = a.shape[0]
    work = (a + a.T) / 2.0
    vecs = np.eye(n)
    scale = float(np.linalg.norm(work))

    if scale > 0.0:
        converged = False
        for _ in range(_MAX_SWEEPS):
            if _offdiag_norm(work) <= _OFFDIAG_TOL * scale:
                converged = True
                break
            for p in range(n - 1):
                for q in range(p + 1, n):
                    apq = work[p, q]
                    if apq == 0.0:
                        continue
                    theta = (work[q, q] - work[p, p]) / (2.0 * apq)
                    t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                    if theta == 0.0:
                        t = 1.0
                    c = 1.0 / np.hypot(t, 1.0)
                    s = t * c

                    col_p = work[:, p].copy()
                    col_q = work[:, q].copy()
                    work[:, p] = c * col_p - s * col_q
                    work[:, q] = s * col_p + c * col_q
                    row_p = work[p, :].copy()
                    row_q = work[q, :].copy()
                    work[p, :] = c * row_p - s * row_q
                    work[q, :] = s * row_p + c * row_q
                    work[p, q] = 0.0
                    work[q, p] = 0.0

                    vcol_p = vecs[:, p].copy()
                    vcol_q = vecs[:, q].copy()
                    vecs[:, p] = c * vcol_p - s * vcol_q
                    vecs[:, q] = s * vcol_p + c * vcol_q
        else:
            converged = _offdiag_norm(work) <= _OFFDIAG_TOL * scale
        if not converged:
            raise NumericalError(
                f"Jacobi iteration did not converge in {_MAX_SWEEPS} sweeps"
            )

    values = np.diag(work).copy()
    # Stable sort keeps the pre-sort order for exactly tied eigenvalues.
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vecs = vecs[:, order]

    for k in range(n):
        peak = int(np.argmax(np.abs(vecs[:, k])))
        if vecs[peak, k] < 0.0:
            vecs[:, k] = -vecs[:, k]

    values.setflags(write=False)
    vecs.setflags(write=False)
    return SymmetricEigen(eigenvalues=values, eigenvectors=vecs)


def _check_corr_input(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise NumericalError("correlation inputs must be 1-D and equal length")
    if x.size < 2:
        raise NumericalError("correlation needs at least two observations")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NumericalError("correlation inputs must be finite")
    return x, y


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson linear correlation coefficient."""
    x, y = _check_corr_input(x, y)
    xc = x - x.mean()
    yc = y - y.mean()
    sx = float(np.sqrt(np.dot(xc, xc)))
    sy = float(np.sqrt(np.dot(yc, yc)))
    if sx == 0.0 or sy == 0.0:
        raise NumericalError("correlation is undefined for a constant input")
    r = float(np.dot(xc, yc) / (sx * sy))
    return min(1.0, max(-1.0, r))


def average_ranks(x: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values receive the average of their ranks."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size, dtype=np.float64)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: np.ndarray, y: np.ndarray) -> float:
    """Spearman rank correlation: Pearson of the average-tie rank vectors."""
    x, y = _check_corr_input(x, y)
    return pearson(average_ranks(x), average_ranks(y))

"""Dense matrix primitives: Schatten norms, singular value thresholding,
box clipping, the combined proximal operator, and singular-span projections.

Everything here runs full (non-truncated) SVDs; intended problem sizes
keep dimensions in the hundreds, where correctness beats cleverness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .families import ParameterBox

__all__ = [
    "schatten_norm",
    "nuclear_norm",
    "operator_norm",
    "svt",
    "box_clip",
    "combined_prox",
    "DykstraInfo",
    "proj_onto",
    "proj_perp",
    "numerical_rank",
]

RANK_CUTOFF = 1e-9  # singular values below RANK_CUTOFF * sigma_max count as zero


def schatten_norm(a: np.ndarray, q: float) -> float:
    """Schatten q-norm from the singular values; ``q=inf`` gives the operator norm.

    ``q=1`` is the nuclear norm and ``q=2`` coincides with the Frobenius
    norm of the entries.
    """
    if not (q >= 1.0):
        raise ValueError("q must be >= 1 (or inf)")
    s = np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)
    if math.isinf(q):
        return float(s[0]) if s.size else 0.0
    return float((s**q).sum() ** (1.0 / q))


def nuclear_norm(a: np.ndarray) -> float:
    return schatten_norm(a, 1.0)


def operator_norm(a: np.ndarray) -> float:
    return schatten_norm(a, math.inf)


def svt(a: np.ndarray, tau: float) -> np.ndarray:
    """Singular value thresholding: soft-threshold the spectrum by ``tau``.

    This is the proximal operator of ``tau * nuclear_norm``.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("svt requires finite input")
    if tau == 0.0:
        return a.copy()
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    return (u * s) @ vt


def box_clip(a: np.ndarray, box: ParameterBox) -> np.ndarray:
    """Entrywise clamp into ``[box.lo, box.hi]`` (Euclidean projection onto the box)."""
    return np.clip(np.asarray(a, dtype=float), box.lo, box.hi)


@dataclass(frozen=True)
class DykstraInfo:
    iterations: int
    converged: bool
    change: float


def combined_prox(
    a: np.ndarray,
    tau: float,
    box: ParameterBox,
    max_iters: int = 200,
    tol: float = 1e-10,
    full_output: bool = False,
):
    """Proximal operator of ``tau * nuclear_norm + indicator(box)``.

    Dykstra's alternation between singular value thresholding and box
    clipping, stopped when the Frobenius change between successive
    iterates drops below ``tol`` or after ``max_iters`` cycles. Every
    cycle ends on the clip, so the returned point is always feasible;
    non-convergence is reported through the info flag, with the best
    iterate returned.
    """
    a = np.asarray(a, dtype=float)
    if tau == 0.0:
        x = box_clip(a, box)
        return (x, DykstraInfo(0, True, 0.0)) if full_output else x

    x = a
    p = np.zeros_like(a)
    q = np.zeros_like(a)
    change = math.inf
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        y = svt(x + p, tau)
        p = x + p - y
        x_new = box_clip(y + q, box)
        q = y + q - x_new
        change = float(np.linalg.norm(x_new - x))
        x = x_new
        if change < tol:
            converged = True
            break
    if full_output:
        return x, DykstraInfo(it, converged, change)
    return x


def _singular_spans(a: np.ndarray, rel_cutoff: float) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal bases of the left/right singular spans above the cutoff."""
    u, s, vt = np.linalg.svd(np.asarray(a, dtype=float), full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        r = 0
    else:
        r = int(np.count_nonzero(s > rel_cutoff * s[0]))
    return u[:, :r], vt[:r, :].T


def proj_perp(x_ref: np.ndarray, a: np.ndarray, rel_cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Component of ``a`` orthogonal to the singular spans of ``x_ref``.

    Computes ``(I - U U^T) a (I - V V^T)`` with ``U``/``V`` the left/right
    singular bases of ``x_ref`` above the rank cutoff.
    """
    a = np.asarray(a, dtype=float)
    u, v = _singular_spans(x_ref, rel_cutoff)
    if u.shape[1] == 0:
        return a.copy()
    tmp = a - u @ (u.T @ a)
    return tmp - (tmp @ v) @ v.T


def proj_onto(x_ref: np.ndarray, a: np.ndarray, rel_cutoff: float = RANK_CUTOFF) -> np.ndarray:
    """Complement of :func:`proj_perp`; the two always sum to ``a`` exactly."""
    return np.asarray(a, dtype=float) - proj_perp(x_ref, a, rel_cutoff)


def numerical_rank(a: np.ndarray, rel_cutoff: float = RANK_CUTOFF) -> int:
    """Rank with singular values below ``rel_cutoff * sigma_max`` treated as zero."""
    s = np.linalg.svd(np.asarray(a, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.count_nonzero(s > rel_cutoff * s[0]))

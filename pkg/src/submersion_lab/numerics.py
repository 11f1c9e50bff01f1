"""Shared numerical helpers: deterministic bases, nullspaces, finite differences."""

from __future__ import annotations

import numpy as np

DEFAULT_FD_STEP = 1e-4


def central_difference(g, h: float = DEFAULT_FD_STEP):
    """d/dt g(t) at t=0 by symmetric differences, O(h^2)."""
    return (g(h) - g(-h)) / (2.0 * h)


def fd_error_estimate(g, h: float = DEFAULT_FD_STEP):
    """Central difference at h/2 plus a Richardson-style error estimate.

    Returns (derivative_at_half_step, estimated_truncation_error).
    """
    d1 = central_difference(g, h)
    d2 = central_difference(g, h / 2.0)
    return d2, np.linalg.norm(np.asarray(d2) - np.asarray(d1)) / 3.0


def orthonormal_basis(projector: np.ndarray, dim: int | None = None,
                      tol: float = 1e-6) -> np.ndarray:
    """Deterministic orthonormal basis (columns) of range(projector).

    Modified Gram-Schmidt over the projected coordinate vectors taken in
    index order (lexicographic pivoting), with one reorthogonalization pass.
    If lexicographic acceptance comes up short of `dim`, the largest leftover
    residuals are pulled in, still deterministically.
    """
    d = projector.shape[0]
    cols = [projector[:, i].copy() for i in range(d)]
    accepted: list[np.ndarray] = []

    def reduce(v):
        for b in accepted:
            v = v - b * (b @ v)
        for b in accepted:
            v = v - b * (b @ v)
        return v

    for v in cols:
        if dim is not None and len(accepted) == dim:
            break
        v = reduce(v)
        n = np.linalg.norm(v)
        if n > tol:
            accepted.append(v / n)

    if dim is not None and len(accepted) < dim:
        # fallback sweep: pick remaining directions by residual size
        while len(accepted) < dim:
            residuals = [reduce(c) for c in cols]
            norms = [np.linalg.norm(r) for r in residuals]
            i = int(np.argmax(norms))
            if norms[i] <= 1e-12:
                break
            accepted.append(residuals[i] / norms[i])
    return np.array(accepted).T if accepted else np.zeros((d, 0))


def nullspace_basis(matrix: np.ndarray, nullity: int | None = None,
                    rtol: float = 1e-9):
    """Orthonormal nullspace basis (columns) via SVD.

    With `nullity` given, the trailing right-singular vectors are returned and
    the split is validated; otherwise the numerical rank at `rtol` decides.
    Returns (basis, singular_values).
    """
    m, n = matrix.shape
    u, s, vt = np.linalg.svd(matrix, full_matrices=True)
    s_full = np.zeros(n)
    s_full[: len(s)] = s
    if nullity is None:
        cut = s_full[0] * rtol if len(s) else 0.0
        rank = int(np.sum(s_full > cut))
    else:
        rank = n - nullity
    return vt[rank:].T, s_full


def rank_from_singular_values(s: np.ndarray, rtol: float = 1e-6) -> int:
    s = np.asarray(s)
    if s.size == 0 or s[0] <= 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def spd_solve(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve a symmetric positive-definite system (Cholesky)."""
    import scipy.linalg

    c, low = scipy.linalg.cho_factor(matrix)
    return scipy.linalg.cho_solve((c, low), rhs)


def parallel_map(fn, items, max_workers: int = 1):
    """Map preserving item order; threads only when max_workers > 1.

    Work items must be pure. Results are merged in submission order so the
    output is independent of scheduling.
    """
    items = list(items)
    if max_workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(fn, items))

"""Real, complex, quaternion and octonion arithmetic on numpy arrays.

Elements are real coordinate vectors along the last axis (length 1, 2, 4 or
8); multiplication is the Cayley-Dickson doubling (a,b)(c,d) =
(ac - conj(d)b, da + b conj(c)) and broadcasts over leading axes. All four
algebras are composition algebras: |xy| = |x||y|.
"""

from __future__ import annotations

import numpy as np

ALGEBRA_DIMS = (1, 2, 4, 8)


def conj(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = -x.copy()
    out[..., 0] = x[..., 0]
    return out


def multiply(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x.shape[-1]
    if d != y.shape[-1]:
        raise ValueError(f"algebra dimension mismatch: {d} vs {y.shape[-1]}")
    if d == 1:
        return x * y
    half = d // 2
    a, b = x[..., :half], x[..., half:]
    c, dd = y[..., :half], y[..., half:]
    low = multiply(a, c) - multiply(conj(dd), b)
    high = multiply(dd, a) + multiply(b, conj(c))
    return np.concatenate([low, high], axis=-1)


def norm(x: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.asarray(x, dtype=float), axis=-1)


def real_part(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=float)[..., 0]


def one(dim: int) -> np.ndarray:
    e = np.zeros(dim)
    e[0] = 1.0
    return e


def left_multiplication_matrix(x: np.ndarray) -> np.ndarray:
    """Matrix of v -> x v as a real-linear map."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return multiply(x[None, :], np.eye(d)).T


def right_multiplication_matrix(x: np.ndarray) -> np.ndarray:
    """Matrix of v -> v x as a real-linear map."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    return multiply(np.eye(d), x[None, :]).T


def random_unit(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)

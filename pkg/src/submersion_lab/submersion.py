"""Riemannian submersions with totally geodesic fibers.

Vertical spaces come from the SVD kernel of the projection differential,
horizontal lifts from least squares on a horizontal basis, and the
integrability tensor A from brackets of basic fields (base vectors extended
canonically on the base, lifted pointwise). Fatness and fiber geodesy are
sampled checks with seeded, per-index random streams.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import core
from .core import EmbeddedManifold, RankDeficiencyError
from .graph import SmoothMapBetweenManifolds
from .numerics import DEFAULT_FD_STEP, central_difference

FAT_TOLERANCE = 1e-3


@dataclass(frozen=True)
class RiemannianSubmersionBundle:
    """A submersion total -> base with metric-compatible splitting.

    The optional fiber utilities (a section of the projection, the nearest
    point on a prescribed fiber, a fiber sampler) are closed-form for the
    built-in bundles and power the pull-back construction.
    """

    total: EmbeddedManifold
    base: EmbeddedManifold
    projection: SmoothMapBetweenManifolds
    fiber_dim: int
    fiber_section: Optional[Callable[[np.ndarray], np.ndarray]] = None
    fiber_projector: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    fiber_sampler: Optional[Callable[[np.ndarray, np.random.Generator], np.ndarray]] = None
    name: str = "bundle"


@dataclass(frozen=True)
class Splitting:
    """Vertical/horizontal data of a bundle at one total-space point."""

    point: np.ndarray
    vertical_basis: np.ndarray    # columns
    horizontal_basis: np.ndarray  # columns
    jac: np.ndarray               # ambient d(projection)

    @property
    def vertical_projector(self) -> np.ndarray:
        return self.vertical_basis @ self.vertical_basis.T

    @property
    def horizontal_projector(self) -> np.ndarray:
        return self.horizontal_basis @ self.horizontal_basis.T


def splitting(bundle: RiemannianSubmersionBundle, p: np.ndarray) -> Splitting:
    p = core.check_point(bundle.total, p)
    basis_p = core.tangent_basis(bundle.total, p)
    jac = bundle.projection.jac(p)
    mat = jac @ basis_p
    u, s, vt = np.linalg.svd(mat)
    rank = bundle.base.intrinsic_dim
    if len(s) < rank or s[rank - 1] <= 1e-6 * s[0]:
        raise RankDeficiencyError(
            f"projection differential of {bundle.name} is rank deficient at the sample")
    vertical = basis_p @ vt[rank:].T
    horizontal = basis_p @ vt[:rank].T
    if vertical.shape[1] != bundle.fiber_dim:
        raise RankDeficiencyError(
            f"kernel of the projection has dimension {vertical.shape[1]}, "
            f"expected {bundle.fiber_dim}")
    return Splitting(point=p, vertical_basis=vertical,
                     horizontal_basis=horizontal, jac=jac)


def vertical_projector(bundle: RiemannianSubmersionBundle, p: np.ndarray) -> np.ndarray:
    return splitting(bundle, p).vertical_projector


def horizontal_projector(bundle: RiemannianSubmersionBundle, p: np.ndarray) -> np.ndarray:
    return splitting(bundle, p).horizontal_projector


def horizontal_lift(bundle: RiemannianSubmersionBundle, p: np.ndarray,
                    w: np.ndarray, split: Optional[Splitting] = None) -> np.ndarray:
    """The unique horizontal vector at p mapping to w under the projection."""
    sp = split if split is not None else splitting(bundle, p)
    mat = sp.jac @ sp.horizontal_basis
    coef, *_ = np.linalg.lstsq(mat, np.asarray(w, dtype=float), rcond=None)
    return sp.horizontal_basis @ coef


def a_tensor(bundle: RiemannianSubmersionBundle, p: np.ndarray,
             X: np.ndarray, Y: np.ndarray,
             h: float = DEFAULT_FD_STEP,
             split: Optional[Splitting] = None) -> np.ndarray:
    """Integrability tensor A(X, Y): half the vertical part of the bracket of
    the basic extensions of the horizontal parts of X and Y."""
    sp = split if split is not None else splitting(bundle, p)
    x_h = sp.horizontal_projector @ np.asarray(X, dtype=float)
    y_h = sp.horizontal_projector @ np.asarray(Y, dtype=float)
    w_x = sp.jac @ x_h
    w_y = sp.jac @ y_h
    bracket = core.lie_bracket(bundle.total,
                               basic_field(bundle, w_x),
                               basic_field(bundle, w_y), p, h)
    return 0.5 * (sp.vertical_projector @ bracket)


def basic_field(bundle: RiemannianSubmersionBundle,
                w_ambient: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Basic extension of a base vector: canonical extension on the base,
    horizontally lifted at every total-space point."""
    w_ambient = np.asarray(w_ambient, dtype=float)

    def fld(q: np.ndarray) -> np.ndarray:
        nq = bundle.projection(q)
        wq = bundle.base.projector_field(nq) @ w_ambient
        return horizontal_lift(bundle, q, wq)

    return fld


def a_tensor_coefficients(bundle: RiemannianSubmersionBundle, p: np.ndarray,
                          h: float = DEFAULT_FD_STEP,
                          split: Optional[Splitting] = None) -> np.ndarray:
    """A on the horizontal basis, in vertical-basis coordinates.

    Shape (h_dim, h_dim, v_dim); antisymmetric in the first two axes. One
    bracket per unordered basis pair, everything else by bilinearity.
    """
    sp = split if split is not None else splitting(bundle, p)
    h_dim = sp.horizontal_basis.shape[1]
    v_dim = sp.vertical_basis.shape[1]
    coeff = np.zeros((h_dim, h_dim, v_dim))
    for i in range(h_dim):
        for j in range(i + 1, h_dim):
            val = a_tensor(bundle, p, sp.horizontal_basis[:, i],
                           sp.horizontal_basis[:, j], h, split=sp)
            cij = sp.vertical_basis.T @ val
            coeff[i, j] = cij
            coeff[j, i] = -cij
    return coeff


def a_dagger(bundle: RiemannianSubmersionBundle, p: np.ndarray,
             X: np.ndarray, U: np.ndarray,
             h: float = DEFAULT_FD_STEP,
             split: Optional[Splitting] = None) -> np.ndarray:
    """Dual of the A-tensor: the horizontal vector with
    <A_dagger(X, U), Y> = <U, A(X, Y)> over the horizontal basis.

    Inputs are projected to their horizontal/vertical parts first.
    """
    sp = split if split is not None else splitting(bundle, p)
    u_v = sp.vertical_projector @ np.asarray(U, dtype=float)
    out = np.zeros(bundle.total.ambient_dim)
    for j in range(sp.horizontal_basis.shape[1]):
        y = sp.horizontal_basis[:, j]
        out = out + (u_v @ a_tensor(bundle, p, X, y, h, split=sp)) * y
    return out


def vertizontal_sec(bundle: RiemannianSubmersionBundle, p: np.ndarray,
                    X: np.ndarray, U: np.ndarray,
                    h: float = DEFAULT_FD_STEP) -> float:
    """Sectional curvature of a horizontal-vertical plane for unit orthogonal
    X horizontal, U vertical: the squared norm of A_dagger(X, U)."""
    sp = splitting(bundle, p)
    dual = a_dagger(bundle, p, X, U, h, split=sp)
    return float(dual @ dual)


@dataclass(frozen=True)
class FatnessReport:
    min_sigma: float
    worst_point: np.ndarray
    worst_direction: np.ndarray
    samples: int
    directions: int
    is_fat: bool
    tolerance: float = FAT_TOLERANCE


def fatness(bundle: RiemannianSubmersionBundle, sample_count: int = 200,
            directions: int = 50, seed: int = 0,
            h: float = DEFAULT_FD_STEP,
            fat_tolerance: float = FAT_TOLERANCE,
            max_workers: int = 1) -> FatnessReport:
    """Smallest singular value of A_X: horizontal -> vertical over random unit
    horizontal X at random points; positive minimum means the bundle is fat.

    The full A tensor is assembled once per point; each direction then costs
    one small SVD. Random streams split per sample index from the seed.
    """
    from .numerics import parallel_map

    seeds = np.random.SeedSequence(seed).spawn(sample_count)

    def one_sample(i: int):
        rng = np.random.Generator(np.random.PCG64(seeds[i]))
        p = bundle.total.random_point(rng)
        sp = splitting(bundle, p)
        coeff = a_tensor_coefficients(bundle, p, h, split=sp)
        h_dim, _, v_dim = coeff.shape
        best = (np.inf, None)
        for _ in range(directions):
            c = rng.standard_normal(h_dim)
            c /= np.linalg.norm(c)
            mat = np.tensordot(c, coeff, axes=(0, 0))  # (h_dim, v_dim)
            s = np.linalg.svd(mat.T, compute_uv=False)
            sigma = s[v_dim - 1] if len(s) >= v_dim else 0.0
            if sigma < best[0]:
                best = (float(sigma), sp.horizontal_basis @ c)
        return best[0], p, best[1]

    results = parallel_map(one_sample, range(sample_count), max_workers)
    sigmas = [r[0] for r in results]
    worst = int(np.argmin(sigmas))
    return FatnessReport(
        min_sigma=float(sigmas[worst]),
        worst_point=results[worst][1],
        worst_direction=results[worst][2],
        samples=sample_count,
        directions=directions,
        is_fat=bool(sigmas[worst] > fat_tolerance),
        tolerance=fat_tolerance)


def fiber_second_fundamental_form(bundle: RiemannianSubmersionBundle, p: np.ndarray,
                                  U: np.ndarray, Up: np.ndarray,
                                  h: float = DEFAULT_FD_STEP,
                                  split: Optional[Splitting] = None) -> np.ndarray:
    """Second fundamental form of the fiber through p inside the total space:
    horizontal part of the total-space derivative of a vertical extension."""
    sp = split if split is not None else splitting(bundle, p)
    up_amb = np.asarray(Up, dtype=float)

    def vertical_extension(q: np.ndarray) -> np.ndarray:
        sq = splitting(bundle, q)
        return sq.vertical_projector @ up_amb

    deriv = central_difference(
        lambda t: vertical_extension(bundle.total.retraction(p, t * np.asarray(U, float))), h)
    return sp.horizontal_projector @ deriv


def totally_geodesic_fibers_check(bundle: RiemannianSubmersionBundle,
                                  samples: int = 20, seed: int = 0,
                                  h: float = DEFAULT_FD_STEP) -> float:
    """Max fiber second-fundamental-form norm over sampled points and
    vertical basis pairs; ~0 certifies totally geodesic fibers."""
    seeds = np.random.SeedSequence(seed).spawn(samples)
    worst = 0.0
    for i in range(samples):
        rng = np.random.Generator(np.random.PCG64(seeds[i]))
        p = bundle.total.random_point(rng)
        sp = splitting(bundle, p)
        v = sp.vertical_basis
        for a in range(v.shape[1]):
            for b in range(a, v.shape[1]):
                ii = fiber_second_fundamental_form(bundle, p, v[:, a], v[:, b], h, split=sp)
                worst = max(worst, float(np.linalg.norm(ii)))
    return worst

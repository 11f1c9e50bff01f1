"""Embedded-submanifold calculus in flat ambient space.

A manifold is described extrinsically by a field of orthogonal tangent
projectors and a retraction; the metric is the one induced by the ambient
inner product. Covariant derivatives are tangent-projected ambient
derivatives along retraction curves, the second fundamental form comes from
the derivative of the projector field, and the full curvature tensor is
assembled from it via the Gauss identity, which only needs first derivatives
of the projector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import DEFAULT_FD_STEP, central_difference, orthonormal_basis

MEMBERSHIP_TOL = 1e-8
GRAM_DEGENERACY_TOL = 1e-12


class GeometryError(Exception):
    """Base class for geometric failures."""


class PointOffManifoldError(GeometryError):
    pass


class DegeneratePlaneError(GeometryError):
    pass


class RankDeficiencyError(GeometryError):
    pass


class SingularConfigurationError(GeometryError):
    pass


@dataclass(frozen=True)
class EmbeddedManifold:
    """Submanifold of R^d given by a tangent-projector field and a retraction.

    projector_field(x) must be symmetric, idempotent, of rank intrinsic_dim.
    retraction(x, v) returns a manifold point with retraction(x, hV) - (x+hV)
    = O(h^2) for tangent V; retraction(x, 0) is the nearest-point map used
    for the membership test. analytic_projector_derivative(x, u), when
    available, is the ambient directional derivative of the projector field
    and removes one finite-difference layer from every curvature quantity.
    """

    ambient_dim: int
    intrinsic_dim: int
    projector_field: Callable[[np.ndarray], np.ndarray]
    retraction: Callable[[np.ndarray, np.ndarray], np.ndarray]
    analytic_projector_derivative: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    sampler: Optional[Callable[[np.random.Generator], np.ndarray]] = None
    name: str = "manifold"
    membership_tol: float = MEMBERSHIP_TOL

    def membership_residual(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(self.retraction(np.asarray(x, dtype=float),
                                                    np.zeros(self.ambient_dim)) - x))

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        if self.sampler is None:
            raise GeometryError(f"{self.name} has no point sampler")
        return self.sampler(rng)


@dataclass(frozen=True)
class TangentVector:
    """An ambient vector attached to a manifold point."""

    base_point: np.ndarray
    components: np.ndarray

    def validate(self, manifold: EmbeddedManifold, tol: float = 1e-9) -> "TangentVector":
        p = manifold.projector_field(self.base_point)
        if np.linalg.norm(p @ self.components - self.components) > tol:
            raise GeometryError("components are not tangent at the base point")
        return self


# A vector field on a manifold is any callable point -> tangent components.
VectorField = Callable[[np.ndarray], np.ndarray]


def check_point(manifold: EmbeddedManifold, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    res = manifold.membership_residual(x)
    if res > manifold.membership_tol:
        raise PointOffManifoldError(
            f"point is {res:.3e} away from {manifold.name} "
            f"(tolerance {manifold.membership_tol:.1e})")
    return x


def tangent_projector(manifold: EmbeddedManifold, x: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the tangent space at x."""
    x = check_point(manifold, x)
    return manifold.projector_field(x)


def tangent_basis(manifold: EmbeddedManifold, x: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal tangent basis (columns) at x."""
    basis = orthonormal_basis(tangent_projector(manifold, x),
                              dim=manifold.intrinsic_dim)
    if basis.shape[1] != manifold.intrinsic_dim:
        raise RankDeficiencyError(
            f"tangent projector of {manifold.name} has rank {basis.shape[1]}, "
            f"expected {manifold.intrinsic_dim}")
    return basis


def random_tangent(manifold: EmbeddedManifold, x: np.ndarray,
                   rng: np.random.Generator, unit: bool = True) -> np.ndarray:
    v = manifold.projector_field(x) @ rng.standard_normal(manifold.ambient_dim)
    n = np.linalg.norm(v)
    if n < 1e-12:
        raise GeometryError("degenerate random tangent draw")
    return v / n if unit else v


def covariant_derivative(manifold: EmbeddedManifold, field: VectorField,
                         x: np.ndarray, direction: np.ndarray,
                         h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Levi-Civita derivative of `field` along `direction` at x.

    Tangent projection of the ambient derivative of the field along the
    retraction curve t -> retraction(x, t * direction).
    """
    x = check_point(manifold, x)
    p = manifold.projector_field(x)
    direction = np.asarray(direction, dtype=float)
    return p @ central_difference(
        lambda t: field(manifold.retraction(x, t * direction)), h)


def projector_derivative(manifold: EmbeddedManifold, x: np.ndarray,
                         direction: np.ndarray,
                         h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Directional derivative of the projector field along a tangent direction."""
    if manifold.analytic_projector_derivative is not None:
        return manifold.analytic_projector_derivative(x, direction)
    return central_difference(
        lambda t: manifold.projector_field(manifold.retraction(x, t * direction)), h)


def second_fundamental_form(manifold: EmbeddedManifold, x: np.ndarray,
                            X: np.ndarray, Y: np.ndarray,
                            h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Normal-valued second fundamental form II(X, Y) at x.

    Equals the normal projection of the ambient derivative, along X, of the
    canonical tangent extension y -> P(y) Y of Y, i.e. (I - P) dP[X] Y.
    """
    x = check_point(manifold, x)
    p = manifold.projector_field(x)
    dp = projector_derivative(manifold, x, X, h)
    return (np.eye(manifold.ambient_dim) - p) @ (dp @ np.asarray(Y, dtype=float))


def riemann(manifold: EmbeddedManifold, x: np.ndarray,
            X: np.ndarray, Y: np.ndarray, Z: np.ndarray, W: np.ndarray,
            h: float = DEFAULT_FD_STEP) -> float:
    """(4,0) curvature tensor R(X, Y, Z, W) via the flat-ambient Gauss identity.

    R(X,Y,Z,W) = <II(X,W), II(Y,Z)> - <II(X,Z), II(Y,W)>, with the sign fixed
    so the unit round sphere has R(X,Y,Y,X) = +1 on orthonormal pairs.
    """
    x = check_point(manifold, x)
    p = manifold.projector_field(x)
    q = np.eye(manifold.ambient_dim) - p
    dp_x = q @ projector_derivative(manifold, x, X, h)
    dp_y = q @ projector_derivative(manifold, x, Y, h)
    ii_xw = dp_x @ W
    ii_xz = dp_x @ Z
    ii_yz = dp_y @ Z
    ii_yw = dp_y @ W
    return float(ii_xw @ ii_yz - ii_xz @ ii_yw)


def sectional_curvature(manifold: EmbeddedManifold, x: np.ndarray,
                        X: np.ndarray, Y: np.ndarray,
                        h: float = DEFAULT_FD_STEP) -> float:
    """Sectional curvature of the plane spanned by X and Y."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    gram = (X @ X) * (Y @ Y) - (X @ Y) ** 2
    if gram <= GRAM_DEGENERACY_TOL:
        raise DegeneratePlaneError(
            f"plane is numerically degenerate (Gram determinant {gram:.3e})")
    return riemann(manifold, x, X, Y, Y, X, h) / gram


def lie_bracket(manifold: EmbeddedManifold, field_x: VectorField,
                field_y: VectorField, x: np.ndarray,
                h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Bracket [X, Y] of two tangent fields, by ambient derivatives along
    retraction curves. Tangent-projected to strip finite-difference noise."""
    x = check_point(manifold, x)
    p = manifold.projector_field(x)
    xx = field_x(x)
    yx = field_y(x)
    dy_along_x = central_difference(
        lambda t: field_y(manifold.retraction(x, t * xx)), h)
    dx_along_y = central_difference(
        lambda t: field_x(manifold.retraction(x, t * yx)), h)
    return p @ (dy_along_x - dx_along_y)


def extend_tangent(manifold: EmbeddedManifold, v: np.ndarray) -> VectorField:
    """Canonical smooth extension of an ambient vector: y -> P(y) v."""
    v = np.asarray(v, dtype=float)
    return lambda y: manifold.projector_field(y) @ v

"""Operators attached to the graph of a map between embedded manifolds.

For f: M -> N the graph {(x, f(x))} sits inside the product ambient space.
This module materializes df and its metric dual on deterministic orthonormal
tangent bases, the block isomorphism splitting T(MxN) into graph-tangent and
graph-normal parts, the normal projection, the tensorial second derivative
d2f, and the graph's second fundamental form.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import core
from .core import EmbeddedManifold, GeometryError
from .numerics import DEFAULT_FD_STEP, central_difference


class IllConditionedMetricError(GeometryError):
    pass


@dataclass(frozen=True)
class SmoothMapBetweenManifolds:
    """A map M -> N given on ambient coordinates, with Jacobian access.

    `jacobian`, when given, is the analytic ambient derivative; otherwise
    the Jacobian is assembled by central differences along source retraction
    curves, composed with the target tangent projection.
    """

    source: EmbeddedManifold
    target: EmbeddedManifold
    ambient_map: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = "map"
    fd_step: float = DEFAULT_FD_STEP

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.ambient_map(np.asarray(x, dtype=float))

    def jac(self, x: np.ndarray) -> np.ndarray:
        """Ambient Jacobian matrix at x (maps tangent vectors to tangent vectors)."""
        x = np.asarray(x, dtype=float)
        if self.jacobian is not None:
            return self.jacobian(x)
        basis = core.tangent_basis(self.source, x)
        cols = np.column_stack([
            central_difference(
                lambda t, b=basis[:, j]: self.ambient_map(self.source.retraction(x, t * b)),
                self.fd_step)
            for j in range(basis.shape[1])
        ])
        p_target = self.target.projector_field(self.ambient_map(x))
        return p_target @ cols @ basis.T


def identity_map(manifold: EmbeddedManifold) -> SmoothMapBetweenManifolds:
    d = manifold.ambient_dim
    return SmoothMapBetweenManifolds(
        source=manifold, target=manifold,
        ambient_map=lambda x: np.asarray(x, dtype=float),
        jacobian=lambda x: np.eye(d),
        name=f"id_{manifold.name}")


def constant_map(source: EmbeddedManifold, target: EmbeddedManifold,
                 value: np.ndarray) -> SmoothMapBetweenManifolds:
    value = np.asarray(value, dtype=float)
    core.check_point(target, value)
    return SmoothMapBetweenManifolds(
        source=source, target=target,
        ambient_map=lambda x: value.copy(),
        jacobian=lambda x: np.zeros((target.ambient_dim, source.ambient_dim)),
        name=f"const_{target.name}")


def compose(outer: SmoothMapBetweenManifolds,
            inner: SmoothMapBetweenManifolds) -> SmoothMapBetweenManifolds:
    """Composition outer(inner(.)) with chain-rule Jacobian."""
    if inner.target.ambient_dim != outer.source.ambient_dim:
        raise GeometryError(
            f"cannot compose {outer.name} with {inner.name}: "
            f"ambient dims {inner.target.ambient_dim} vs {outer.source.ambient_dim}")
    return SmoothMapBetweenManifolds(
        source=inner.source, target=outer.target,
        ambient_map=lambda x: outer.ambient_map(inner.ambient_map(x)),
        jacobian=lambda x: outer.jac(inner.ambient_map(x)) @ inner.jac(x),
        name=f"{outer.name}*{inner.name}")


# ---------------------------------------------------------------------------
# Operator package at a point
# ---------------------------------------------------------------------------

class GraphOperators:
    """df, its dual, and the graph splitting operators at one source point.

    Tangent bases are the deterministic lexicographic ones, so every matrix
    here is reproducible. O = (1 + df df^T)^{-1} is kept factored and applied
    through SPD solves.
    """

    def __init__(self, f: SmoothMapBetweenManifolds, x: np.ndarray):
        x = core.check_point(f.source, x)
        self.f = f
        self.x = x
        self.fx = f(x)
        self.basis_m = core.tangent_basis(f.source, x)
        self.basis_n = core.tangent_basis(f.target, self.fx)
        jac = f.jac(x)
        # matrix of df on the orthonormal tangent bases
        self.d = self.basis_n.T @ jac @ self.basis_m
        m_n = self.d.shape[0]
        m_m = self.d.shape[1]
        self._one_plus_ddt = np.eye(m_n) + self.d @ self.d.T
        self._one_plus_dtd = np.eye(m_m) + self.d.T @ self.d

    # -- coordinate helpers -------------------------------------------------
    def to_m(self, v: np.ndarray) -> np.ndarray:
        return self.basis_m.T @ v

    def to_n(self, w: np.ndarray) -> np.ndarray:
        return self.basis_n.T @ w

    def from_m(self, c: np.ndarray) -> np.ndarray:
        return self.basis_m @ c

    def from_n(self, c: np.ndarray) -> np.ndarray:
        return self.basis_n @ c

    # -- operators ----------------------------------------------------------
    def apply_df(self, v: np.ndarray) -> np.ndarray:
        return self.from_n(self.d @ self.to_m(v))

    def apply_df_dagger(self, w: np.ndarray) -> np.ndarray:
        return self.from_m(self.d.T @ self.to_n(w))

    def apply_o(self, w: np.ndarray) -> np.ndarray:
        return self.from_n(np.linalg.solve(self._one_plus_ddt, self.to_n(w)))

    def o_matrix(self) -> np.ndarray:
        return np.linalg.inv(self._one_plus_ddt)

    def pi(self, v: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Graph-normal coordinate of (v, w): w - df(v)."""
        return w - self.apply_df(v)

    def xi_n(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Isomorphism from T_{f(x)}N onto the graph normal space."""
        return -self.apply_df_dagger(w), w

    def xi(self, v: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Assemble (v, w) -> dF(v) + xi_n(w) in T(MxN)."""
        a, b = self.xi_n(w)
        return v + a, self.apply_df(v) + b

    def xi_inverse(self, v: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split (v, w) in T(MxN) into graph-tangent and fiberwise-normal parts.

        Block solve with (1 + df^T df) and (1 + df df^T); round-tripping
        through xi reproduces the input.
        """
        cv = self.to_m(v)
        cw = self.to_n(w)
        s_cv = np.linalg.solve(self._one_plus_dtd, cv)
        o_cw = np.linalg.solve(self._one_plus_ddt, cw)
        tangent = self.from_m(s_cv + self.d.T @ o_cw)
        normal = self.from_n(-self.d @ s_cv + o_cw)
        return tangent, normal

    def normal_projection(self, v: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Orthogonal projection of (v, w) onto the graph normal space."""
        resid = self.to_n(w) - self.d @ self.to_m(v)
        o_resid = np.linalg.solve(self._one_plus_ddt, resid)
        return -self.from_m(self.d.T @ o_resid), self.from_n(o_resid)


def graph_operators(f: SmoothMapBetweenManifolds, x: np.ndarray) -> GraphOperators:
    return GraphOperators(f, x)


# ---------------------------------------------------------------------------
# Spec operations
# ---------------------------------------------------------------------------

def df_dagger(f: SmoothMapBetweenManifolds, x: np.ndarray,
              metric_operator: Optional[np.ndarray] = None) -> np.ndarray:
    """Metric dual of df at x, as an ambient matrix T_{f(x)}N -> T_xM.

    With the induced metric the tangent-basis Gram matrix is the identity and
    the dual is the transpose; a source metric operator (ambient matrix acting
    on tangent vectors) turns this into a Gram system, rejected when its
    condition number exceeds 1e12.
    """
    ops = GraphOperators(f, x)
    if metric_operator is None:
        dual = ops.d.T
    else:
        gram = ops.basis_m.T @ metric_operator @ ops.basis_m
        if np.linalg.cond(gram) > 1e12:
            raise IllConditionedMetricError(
                f"metric Gram matrix condition number {np.linalg.cond(gram):.3e}")
        dual = np.linalg.solve(gram, ops.d.T)
    return ops.basis_m @ dual @ ops.basis_n.T


def xi_inverse(f: SmoothMapBetweenManifolds, x: np.ndarray,
               v: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return GraphOperators(f, x).xi_inverse(np.asarray(v, float), np.asarray(w, float))


def normal_projection_graph(f: SmoothMapBetweenManifolds, x: np.ndarray,
                            v: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return GraphOperators(f, x).normal_projection(np.asarray(v, float), np.asarray(w, float))


def d2f(f: SmoothMapBetweenManifolds, x: np.ndarray,
        X: np.ndarray, Xp: np.ndarray, h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Second derivative tensor of f: the target covariant derivative of the
    field df(Xp) along X minus df of the source covariant derivative.

    Extensions are the canonical tangent-projected constant fields, and the
    value is extension-independent to the finite-difference order; the result
    is symmetric in (X, Xp).
    """
    x = core.check_point(f.source, x)
    m, n = f.source, f.target
    X = np.asarray(X, dtype=float)
    xp_amb = np.asarray(Xp, dtype=float)
    fx = f(x)
    p_n = n.projector_field(fx)

    field = core.extend_tangent(m, xp_amb)

    def df_field(t: float) -> np.ndarray:
        y = m.retraction(x, t * X)
        return f.jac(y) @ field(y)

    term1 = p_n @ central_difference(df_field, h)
    term2 = f.jac(x) @ core.covariant_derivative(m, field, x, X, h)
    return term1 - term2


def graph_second_fundamental_form(f: SmoothMapBetweenManifolds, x: np.ndarray,
                                  X: np.ndarray, Xp: np.ndarray,
                                  h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Second fundamental form of the graph, as one ambient product vector."""
    ops = GraphOperators(f, x)
    w = ops.apply_o(d2f(f, x, X, Xp, h))
    a, b = ops.xi_n(w)
    return np.concatenate([a, b])


def graph_manifold(f: SmoothMapBetweenManifolds) -> EmbeddedManifold:
    """The graph of f as an embedded manifold of the product ambient space."""
    m, n = f.source, f.target
    d_m, d_n = m.ambient_dim, n.ambient_dim

    def projector(z: np.ndarray) -> np.ndarray:
        x = z[:d_m]
        basis = core.tangent_basis(m, x)
        jac = f.jac(x)
        cols = np.vstack([basis, jac @ basis])
        q, _ = np.linalg.qr(cols)
        return q @ q.T

    def retraction(z: np.ndarray, v: np.ndarray) -> np.ndarray:
        x1 = m.retraction(z[:d_m], v[:d_m])
        return np.concatenate([x1, f(x1)])

    sampler = None
    if m.sampler is not None:
        def sampler(rng: np.random.Generator) -> np.ndarray:
            x = m.sampler(rng)
            return np.concatenate([x, f(x)])

    return EmbeddedManifold(
        ambient_dim=d_m + d_n,
        intrinsic_dim=m.intrinsic_dim,
        projector_field=projector,
        retraction=retraction,
        sampler=sampler,
        name=f"graph({f.name})")

"""The pull-back of a Riemannian submersion along a map into its base.

f*P = {(x,p) : f(x) = pi(p)} is handled as an embedded submanifold of the
product ambient space: membership, tangent solver (nullspace of the linear
constraint df X = dpi E), a retraction that lands exactly back on the
constraint set via fiber projection, the induced submersion onto the graph
of f, the connection-metric reduction on the base, the mixed correction term
Lambda, the second fundamental form formula, and curvature along two
independent evaluation paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from . import core, submersion
from .core import EmbeddedManifold, GeometryError, SingularConfigurationError
from .graph import GraphOperators, SmoothMapBetweenManifolds, d2f
from .numerics import DEFAULT_FD_STEP, nullspace_basis
from .submersion import RiemannianSubmersionBundle, Splitting, a_dagger, splitting


# ---------------------------------------------------------------------------
# Metrics as operator fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricOperatorField:
    """A metric g(X, Y) = <G(x) X, Y> against the induced inner product.

    operator(x) is an ambient matrix, symmetric positive-definite on the
    tangent space at x.
    """

    operator: Callable[[np.ndarray], np.ndarray]
    name: str = "metric"


def induced_metric(manifold: EmbeddedManifold) -> MetricOperatorField:
    return MetricOperatorField(operator=manifold.projector_field,
                               name=f"induced_{manifold.name}")


class InadmissibleEpsilonError(GeometryError):
    """The fiber-scale epsilon destroys positive definiteness of the reduced
    base metric; carries the offending eigenvalue and the admissible bound."""

    def __init__(self, epsilon: float, min_eigenvalue: float,
                 max_admissible: float, point: np.ndarray):
        self.epsilon = epsilon
        self.min_eigenvalue = min_eigenvalue
        self.max_admissible = max_admissible
        self.point = point
        super().__init__(
            f"epsilon={epsilon:g} makes the reduced metric indefinite "
            f"(min eigenvalue {min_eigenvalue:.3e}); admissible epsilon "
            f"< {max_admissible:.6g}")


@dataclass(frozen=True)
class ReducedConnectionMetric:
    """Result of the base-metric reduction g' = g - eps * f-pullback metric."""

    epsilon: float
    metric_field: MetricOperatorField
    min_eigenvalue: float
    max_admissible_epsilon: float
    reconstruction_residual: float
    sampled_points: int


def reduce_connection_metric(f: SmoothMapBetweenManifolds,
                             epsilon: float,
                             metric: Optional[MetricOperatorField] = None,
                             points: Optional[list] = None,
                             samples: int = 25,
                             seed: int = 0) -> ReducedConnectionMetric:
    """Reduced base metric g'(X, X') = g(X, X') - eps <df X, df X'>.

    Validates positive definiteness of the reduced metric at the sampled
    points, reports its smallest eigenvalue, the largest admissible epsilon
    (from the generalized spectrum of df^T df against g), and the
    reconstruction residual g' + eps f*g_N - g on tangent basis pairs.
    Vectors tangent to a level set of f keep their g-inner products exactly.
    """
    if epsilon <= 0.0:
        raise GeometryError(f"epsilon must be positive, got {epsilon:g}")
    if metric is None:
        metric = induced_metric(f.source)
    if points is None:
        seeds = np.random.SeedSequence(seed).spawn(samples)
        points = [f.source.random_point(np.random.Generator(np.random.PCG64(s)))
                  for s in seeds]

    min_eig = np.inf
    max_adm = np.inf
    recon = 0.0
    worst_point = points[0]
    for x in points:
        ops = GraphOperators(f, x)
        g_mat = ops.basis_m.T @ metric.operator(x) @ ops.basis_m
        dtd = ops.d.T @ ops.d
        g_prime = g_mat - epsilon * dtd
        eigs = np.linalg.eigvalsh(0.5 * (g_prime + g_prime.T))
        if eigs[0] < min_eig:
            min_eig = float(eigs[0])
            worst_point = x
        mu = scipy.linalg.eigh(dtd, g_mat, eigvals_only=True)[-1]
        if mu > 1e-14:
            max_adm = min(max_adm, 1.0 / float(mu))
        recon = max(recon, float(np.max(np.abs(g_prime + epsilon * dtd - g_mat))))

    if min_eig <= 0.0:
        raise InadmissibleEpsilonError(epsilon, min_eig, max_adm, worst_point)

    def operator(x: np.ndarray) -> np.ndarray:
        ops = GraphOperators(f, x)
        g_mat = ops.basis_m.T @ metric.operator(x) @ ops.basis_m
        g_prime = g_mat - epsilon * (ops.d.T @ ops.d)
        return ops.basis_m @ g_prime @ ops.basis_m.T

    return ReducedConnectionMetric(
        epsilon=epsilon,
        metric_field=MetricOperatorField(operator, name=f"reduced(eps={epsilon:g})"),
        min_eigenvalue=min_eig,
        max_admissible_epsilon=float(max_adm),
        reconstruction_residual=recon,
        sampled_points=len(points))


# ---------------------------------------------------------------------------
# The pull-back bundle
# ---------------------------------------------------------------------------

class PullbackBundle:
    """f*P as an embedded manifold of the product ambient space.

    The retraction retracts both factors and then projects the fiber
    coordinate back onto the fiber over the new base image, so curves stay
    exactly on the constraint set and finite differences are clean.
    """

    def __init__(self, base_map: SmoothMapBetweenManifolds,
                 bundle: RiemannianSubmersionBundle,
                 membership_tol: float = 1e-8):
        if base_map.target.ambient_dim != bundle.base.ambient_dim:
            raise GeometryError(
                f"base map target dimension {base_map.target.ambient_dim} does not "
                f"match bundle base dimension {bundle.base.ambient_dim}")
        if bundle.fiber_projector is None:
            raise GeometryError(
                f"bundle {bundle.name} has no fiber projector; cannot build the pull-back")
        self.f = base_map
        self.bundle = bundle
        self.membership_tol = membership_tol
        self.d_m = base_map.source.ambient_dim
        self.d_p = bundle.total.ambient_dim
        self.d_n = bundle.base.ambient_dim
        self.intrinsic_dim = base_map.source.intrinsic_dim + bundle.fiber_dim
        self.total_manifold = self._build_manifold()
        self.name = f"pullback({base_map.name},{bundle.name})"

    # -- point plumbing ------------------------------------------------------
    def split_point(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        return z[:self.d_m], z[self.d_m:]

    def join(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        return np.concatenate([np.asarray(x, float), np.asarray(p, float)])

    def constraint_residual(self, x: np.ndarray, p: np.ndarray) -> float:
        return float(np.linalg.norm(self.f(x) - self.bundle.projection(p)))

    def tangent_basis(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        """Orthonormal basis (columns) of the tangent space at (x, p):
        the nullspace of (X, E) -> df X - dpi E over T_xM x T_pP."""
        basis_m = core.tangent_basis(self.f.source, x)
        basis_p = core.tangent_basis(self.bundle.total, p)
        c = np.hstack([self.f.jac(x) @ basis_m,
                       -self.bundle.projection.jac(p) @ basis_p])
        m_n = self.bundle.base.intrinsic_dim
        nullity = basis_m.shape[1] + basis_p.shape[1] - m_n
        coeffs, s = nullspace_basis(c, nullity=nullity)
        rank = c.shape[1] - nullity
        if rank > 0 and (s[0] <= 0 or s[rank - 1] <= 1e-6 * s[0]):
            raise SingularConfigurationError(
                f"tangent constraint of {getattr(self, 'name', 'pullback')} is "
                f"numerically singular (singular values {s[:rank]})")
        top = basis_m @ coeffs[:basis_m.shape[1]]
        bottom = basis_p @ coeffs[basis_m.shape[1]:]
        return np.vstack([top, bottom])

    def product_projector(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        out = np.zeros((self.d_m + self.d_p, self.d_m + self.d_p))
        out[:self.d_m, :self.d_m] = self.f.source.projector_field(x)
        out[self.d_m:, self.d_m:] = self.bundle.total.projector_field(p)
        return out

    def _build_manifold(self) -> EmbeddedManifold:
        d_m, d_p = self.d_m, self.d_p
        f, bundle = self.f, self.bundle

        def projector(z: np.ndarray) -> np.ndarray:
            basis = self.tangent_basis(z[:d_m], z[d_m:])
            return basis @ basis.T

        def retraction(z: np.ndarray, v: np.ndarray) -> np.ndarray:
            x_new = f.source.retraction(z[:d_m], v[:d_m])
            p_raw = bundle.total.retraction(z[d_m:], v[d_m:])
            p_new = bundle.fiber_projector(p_raw, f(x_new))
            return np.concatenate([x_new, p_new])

        sampler = None
        if f.source.sampler is not None and bundle.fiber_sampler is not None:
            def sampler(rng: np.random.Generator) -> np.ndarray:
                x = f.source.sampler(rng)
                return np.concatenate([x, bundle.fiber_sampler(f(x), rng)])

        return EmbeddedManifold(
            ambient_dim=d_m + d_p,
            intrinsic_dim=self.intrinsic_dim,
            projector_field=projector,
            retraction=retraction,
            sampler=sampler,
            membership_tol=self.membership_tol,
            name=f"f*{bundle.name}")

    # -- lifts and splittings --------------------------------------------------
    def horizontal_lift(self, x: np.ndarray, p: np.ndarray, X: np.ndarray,
                        split: Optional[Splitting] = None) -> np.ndarray:
        """(X, L_p(df X)): tangent, orthogonal to the vertical space, with
        squared norm |X|^2 + |df X|^2."""
        lifted = submersion.horizontal_lift(self.bundle, p, self.f.jac(x) @ X,
                                            split=split)
        return np.concatenate([np.asarray(X, float), lifted])

    def vertical_basis(self, x: np.ndarray, p: np.ndarray,
                       split: Optional[Splitting] = None) -> np.ndarray:
        sp = split if split is not None else splitting(self.bundle, p)
        v = sp.vertical_basis
        return np.vstack([np.zeros((self.d_m, v.shape[1])), v])

    def dpi_tilde(self, v: np.ndarray, p: np.ndarray,
                  split: Optional[Splitting] = None) -> np.ndarray:
        """Differential of id x pi applied to a product tangent vector."""
        sp = split if split is not None else splitting(self.bundle, p)
        return np.concatenate([v[:self.d_m], sp.jac @ v[self.d_m:]])


def pullback_bundle(base_map: SmoothMapBetweenManifolds,
                    bundle: RiemannianSubmersionBundle,
                    membership_tol: float = 1e-8) -> PullbackBundle:
    return PullbackBundle(base_map, bundle, membership_tol)


# ---------------------------------------------------------------------------
# Spec operations
# ---------------------------------------------------------------------------

def pullback_tangent_basis(pb: PullbackBundle, x: np.ndarray, p: np.ndarray) -> np.ndarray:
    return pb.tangent_basis(x, p)


def pullback_horizontal_lift(pb: PullbackBundle, x: np.ndarray, p: np.ndarray,
                             X: np.ndarray) -> np.ndarray:
    return pb.horizontal_lift(x, p, X)


@dataclass(frozen=True)
class SubmersionCheckReport:
    max_horizontal_norm_defect: float
    max_normal_isometry_defect: float
    max_normal_alignment_defect: float
    samples: int


def pullback_submersion_check(pb: PullbackBundle, samples: int = 25,
                              seed: int = 0) -> SubmersionCheckReport:
    """Check that id x pi restricts to a Riemannian submersion of f*P onto the
    graph of f and maps its normal space isometrically onto the graph normals."""
    seeds = np.random.SeedSequence(seed).spawn(samples)
    worst_h = worst_iso = worst_align = 0.0
    for sd in seeds:
        rng = np.random.Generator(np.random.PCG64(sd))
        z = pb.total_manifold.random_point(rng)
        x, p = pb.split_point(z)
        sp = splitting(pb.bundle, p)
        tangent = pb.tangent_basis(x, p)
        vert = pb.vertical_basis(x, p, split=sp)
        # orthonormal horizontal basis inside T f*P
        q_t = tangent @ tangent.T
        q_v = vert @ vert.T
        from .numerics import orthonormal_basis
        horiz = orthonormal_basis(q_t - q_v, dim=tangent.shape[1] - vert.shape[1])
        for j in range(horiz.shape[1]):
            img = pb.dpi_tilde(horiz[:, j], p, split=sp)
            worst_h = max(worst_h, abs(np.linalg.norm(img) - np.linalg.norm(horiz[:, j])))
        # normal space of f*P inside T(M x P), mapped to the graph normals
        normals = orthonormal_basis(pb.product_projector(x, p) - q_t,
                                    dim=pb.bundle.base.intrinsic_dim)
        imgs = np.column_stack([pb.dpi_tilde(normals[:, j], p, split=sp)
                                for j in range(normals.shape[1])])
        gram = imgs.T @ imgs
        worst_iso = max(worst_iso, float(np.max(np.abs(gram - np.eye(gram.shape[0])))))
        basis_m = core.tangent_basis(pb.f.source, x)
        graph_tangents = np.vstack([basis_m, pb.f.jac(x) @ basis_m])
        worst_align = max(worst_align, float(np.max(np.abs(imgs.T @ graph_tangents))))
    return SubmersionCheckReport(
        max_horizontal_norm_defect=worst_h,
        max_normal_isometry_defect=worst_iso,
        max_normal_alignment_defect=worst_align,
        samples=samples)


def lambda_term(pb: PullbackBundle, p: np.ndarray, Y: np.ndarray, Yp: np.ndarray,
                h: float = DEFAULT_FD_STEP,
                split: Optional[Splitting] = None) -> np.ndarray:
    """Mixed correction -dpi(Adag_{hor Y'} (vert Y) + Adag_{hor Y} (vert Y')).

    Symmetric, and zero whenever both arguments are horizontal or both are
    vertical; enters the second fundamental form of f*P alongside d2f.
    """
    sp = split if split is not None else splitting(pb.bundle, p)
    t1 = a_dagger(pb.bundle, p, Yp, Y, h, split=sp)
    t2 = a_dagger(pb.bundle, p, Y, Yp, h, split=sp)
    return -(sp.jac @ (t1 + t2))


def pullback_second_fundamental_form(pb: PullbackBundle, x: np.ndarray, p: np.ndarray,
                                     Xt: np.ndarray, Xtp: np.ndarray,
                                     h: float = DEFAULT_FD_STEP,
                                     split: Optional[Splitting] = None,
                                     ops: Optional[GraphOperators] = None) -> np.ndarray:
    """Image under d(id x pi) of the second fundamental form of f*P in M x P,
    assembled from graph operators: Xi_N O (d2f(X, X') + Lambda(Y, Y'))."""
    Xt = np.asarray(Xt, float)
    Xtp = np.asarray(Xtp, float)
    if ops is None:
        ops = GraphOperators(pb.f, x)
    w = (d2f(pb.f, x, Xt[:pb.d_m], Xtp[:pb.d_m], h)
         + lambda_term(pb, p, Xt[pb.d_m:], Xtp[pb.d_m:], h, split=split))
    ow = ops.apply_o(w)
    a, b = ops.xi_n(ow)
    return np.concatenate([a, b])


def pullback_second_fundamental_form_direct(pb: PullbackBundle, x: np.ndarray,
                                            p: np.ndarray, Xt: np.ndarray,
                                            Xtp: np.ndarray,
                                            h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Independent oracle for the formula above: flat-ambient second
    fundamental form of f*P, projected back into T(M x P) (stripping the
    curvature of M x P itself) and pushed through d(id x pi)."""
    z = pb.join(x, p)
    ii_flat = core.second_fundamental_form(pb.total_manifold, z, Xt, Xtp, h)
    ii_in_product = pb.product_projector(x, p) @ ii_flat
    return pb.dpi_tilde(ii_in_product, p)


def pullback_curvature(pb: PullbackBundle, x: np.ndarray, p: np.ndarray,
                       A: np.ndarray, B: np.ndarray, C: np.ndarray, D: np.ndarray,
                       h: float = DEFAULT_FD_STEP, path: str = "direct") -> float:
    """Curvature R(A, B, C, D) of f*P along one of two independent paths.

    "direct" evaluates the flat-ambient Gauss identity on the f*P manifold;
    "expansion" sums the factor curvatures of M and P and the O-weighted
    inner products of d2f + Lambda terms. The two agree to finite-difference
    tolerance and cross-validate each other.
    """
    z = pb.join(x, p)
    if path == "direct":
        return core.riemann(pb.total_manifold, z, A, B, C, D, h)
    if path != "expansion":
        raise GeometryError(f"unknown curvature path {path!r}")
    d_m = pb.d_m
    m, total = pb.f.source, pb.bundle.total
    sp = splitting(pb.bundle, p)
    ops = GraphOperators(pb.f, x)

    def w(u: np.ndarray, v: np.ndarray) -> np.ndarray:
        return (d2f(pb.f, x, u[:d_m], v[:d_m], h)
                + lambda_term(pb, p, u[d_m:], v[d_m:], h, split=sp))

    r_m = core.riemann(m, x, A[:d_m], B[:d_m], C[:d_m], D[:d_m], h)
    r_p = core.riemann(total, p, A[d_m:], B[d_m:], C[d_m:], D[d_m:], h)
    w_bc, w_ad, w_bd, w_ac = w(B, C), w(A, D), w(B, D), w(A, C)
    return float(r_m + r_p
                 + ops.apply_o(w_bc) @ w_ad
                 - ops.apply_o(w_bd) @ w_ac)


def pullback_sectional_curvature(pb: PullbackBundle, x: np.ndarray, p: np.ndarray,
                                 A: np.ndarray, B: np.ndarray,
                                 h: float = DEFAULT_FD_STEP) -> float:
    return core.sectional_curvature(pb.total_manifold, pb.join(x, p), A, B, h)


# Convenience re-exports of the fiber utilities at bundle level.

def fiber_point(bundle: RiemannianSubmersionBundle, n: np.ndarray) -> np.ndarray:
    if bundle.fiber_section is None:
        raise GeometryError(f"bundle {bundle.name} has no fiber section")
    return bundle.fiber_section(np.asarray(n, dtype=float))


def fiber_project(bundle: RiemannianSubmersionBundle, p_tilde: np.ndarray,
                  n: np.ndarray) -> np.ndarray:
    if bundle.fiber_projector is None:
        raise GeometryError(f"bundle {bundle.name} has no fiber projector")
    return bundle.fiber_projector(np.asarray(p_tilde, dtype=float),
                                  np.asarray(n, dtype=float))

"""The curvature obstruction bench for pull-backs of fat bundles.

For a kernel direction X of the base map, non-negative curvature of the
pull-back total space forces the integrability tensor applied to the lifted,
O-weighted second derivative of the map to annihilate every lifted image
direction. This module computes that obstruction vector, the vanishing and
cross-term curvature identities it rests on, explicit negative-curvature
plane certificates when it fails, level-set second fundamental forms, the
rank of the associated vertical-surjectivity map, and an aggregated verdict
report per scenario.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import core, submersion
from .core import GeometryError
from .graph import GraphOperators, SmoothMapBetweenManifolds, d2f
from .numerics import DEFAULT_FD_STEP, parallel_map
from .pullback import (PullbackBundle, pullback_curvature,
                       pullback_sectional_curvature)
from .submersion import FatnessReport, a_tensor, horizontal_lift, splitting

KERNEL_RTOL = 1e-6
CROSS_TERM_TOLERANCE = 1e-4
CONSISTENCY_TOLERANCE = 1e-6
XI_RANK_TOLERANCE = 1e-6
NEGATIVE_SEC_TOLERANCE = -1e-6


class KernelConstraintError(GeometryError):
    pass


# ---------------------------------------------------------------------------
# Kernel bookkeeping
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSplitting:
    """Kernel of df at a point, its orthogonal complement in T_xM, and the
    singular values that produced them."""

    rank: int
    kernel_basis: np.ndarray      # columns, ambient
    coimage_basis: np.ndarray     # columns, ambient, kernel-orthogonal
    singular_values: np.ndarray
    is_regular: bool              # full target rank at the relative threshold


def kernel_splitting(f: SmoothMapBetweenManifolds, x: np.ndarray,
                     rtol: float = KERNEL_RTOL) -> KernelSplitting:
    ops = GraphOperators(f, x)
    u, s, vt = np.linalg.svd(ops.d)
    m_m = ops.d.shape[1]
    s_full = np.zeros(m_m)
    s_full[: len(s)] = s
    if s_full[0] <= 0.0:
        rank = 0
    else:
        rank = int(np.sum(s_full > rtol * s_full[0]))
    kernel = ops.basis_m @ vt[rank:].T
    coimage = ops.basis_m @ vt[:rank].T
    return KernelSplitting(
        rank=rank, kernel_basis=kernel, coimage_basis=coimage,
        singular_values=s_full,
        is_regular=rank == f.target.intrinsic_dim)


def _require_kernel_direction(f: SmoothMapBetweenManifolds, x: np.ndarray,
                              X: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    resid = np.linalg.norm(f.jac(x) @ X)
    if resid > tol:
        raise KernelConstraintError(
            f"direction is not in the kernel of the differential "
            f"(|df X| = {resid:.3e} > {tol:.1e})")
    return X


# ---------------------------------------------------------------------------
# Obstruction vector and identities
# ---------------------------------------------------------------------------

def obstruction_vector(pb: PullbackBundle, x: np.ndarray, p: np.ndarray,
                       X: np.ndarray, Z: np.ndarray,
                       h: float = DEFAULT_FD_STEP) -> np.ndarray:
    """A(lift(O d2f(X,X)), lift(df Z)) at p, for X in the kernel of df.

    Vanishes for every Z exactly when the non-negative-curvature obstruction
    holds at this configuration.
    """
    X = _require_kernel_direction(pb.f, x, X)
    ops = GraphOperators(pb.f, x)
    sp = splitting(pb.bundle, p)
    w = ops.apply_o(d2f(pb.f, x, X, X, h))
    lift_w = horizontal_lift(pb.bundle, p, w, split=sp)
    lift_z = horizontal_lift(pb.bundle, p, pb.f.jac(x) @ np.asarray(Z, float), split=sp)
    return a_tensor(pb.bundle, p, lift_w, lift_z, h, split=sp)


@dataclass(frozen=True)
class ObstructionOperator:
    """The linear map Y -> A(lift(O d2f(X,X)), lift(Y)) on base tangents,
    in (vertical basis) x (base tangent basis) coordinates, plus the induced
    restriction to images df(Z) of coimage directions."""

    xi_matrix: np.ndarray          # v_dim x m_N
    obstruction_matrix: np.ndarray  # v_dim x rank(df)
    norm: float                     # sup over unit Z in (ker df)^perp
    best_z: Optional[np.ndarray]    # ambient maximizer in T_xM
    d2f_norm: float


def obstruction_operator(pb: PullbackBundle, x: np.ndarray, p: np.ndarray,
                         X: np.ndarray, h: float = DEFAULT_FD_STEP,
                         kd: Optional[KernelSplitting] = None,
                         ops: Optional[GraphOperators] = None) -> ObstructionOperator:
    X = _require_kernel_direction(pb.f, x, X)
    if ops is None:
        ops = GraphOperators(pb.f, x)
    if kd is None:
        kd = kernel_splitting(pb.f, x)
    sp = splitting(pb.bundle, p)
    d2 = d2f(pb.f, x, X, X, h)
    w = ops.apply_o(d2)
    lift_w = horizontal_lift(pb.bundle, p, w, split=sp)
    basis_n = core.tangent_basis(pb.bundle.base, pb.bundle.projection(p))
    xi_cols = []
    for a in range(basis_n.shape[1]):
        lifted = horizontal_lift(pb.bundle, p, basis_n[:, a], split=sp)
        val = a_tensor(pb.bundle, p, lift_w, lifted, h, split=sp)
        xi_cols.append(sp.vertical_basis.T @ val)
    xi_matrix = np.column_stack(xi_cols) if xi_cols else np.zeros((sp.vertical_basis.shape[1], 0))
    # restrict to df images of the coimage directions, Z unit in (ker df)^perp
    if kd.rank > 0:
        df_z = np.column_stack([basis_n.T @ (pb.f.jac(x) @ kd.coimage_basis[:, j])
                                for j in range(kd.rank)])
        obstruction_matrix = xi_matrix @ df_z
        u, s, vt = np.linalg.svd(obstruction_matrix)
        norm = float(s[0]) if len(s) else 0.0
        best_z = kd.coimage_basis @ vt[0] if len(s) else None
    else:
        obstruction_matrix = np.zeros((xi_matrix.shape[0], 0))
        norm, best_z = 0.0, None
    return ObstructionOperator(
        xi_matrix=xi_matrix, obstruction_matrix=obstruction_matrix,
        norm=norm, best_z=best_z, d2f_norm=float(np.linalg.norm(d2)))


def xi_map_rank(pb: PullbackBundle, x: np.ndarray, p: np.ndarray,
                X: np.ndarray, h: float = DEFAULT_FD_STEP,
                threshold: float = XI_RANK_TOLERANCE) -> int:
    """Rank of Y -> A(lift(O d2f(X,X)), lift(Y)); equals the fiber dimension
    on fat bundles exactly when d2f(X,X) is nonzero."""
    op = obstruction_operator(pb, x, p, X, h)
    s = np.linalg.svd(op.xi_matrix, compute_uv=False)
    return int(np.sum(s > threshold))


def vertizontal_flat_check(pb: PullbackBundle, x: np.ndarray, p: np.ndarray,
                           X: np.ndarray, U: np.ndarray,
                           h: float = DEFAULT_FD_STEP) -> float:
    """|R(U~, X~, X~, U~)| on f*P for X in ker df and U vertical; vanishes
    identically, so the residual is pure discretization noise."""
    X = _require_kernel_direction(pb.f, x, X)
    x_t = np.concatenate([X, np.zeros(pb.d_p)])
    u_t = np.concatenate([np.zeros(pb.d_m), np.asarray(U, float)])
    return abs(pullback_curvature(pb, x, p, u_t, x_t, x_t, u_t, h, path="direct"))


def cross_term_check(pb: PullbackBundle, x: np.ndarray, p: np.ndarray,
                     X: np.ndarray, U: np.ndarray, Z: np.ndarray,
                     h: float = DEFAULT_FD_STEP) -> tuple[float, float]:
    """Directly computed R(U~, X~, X~, Z~) against its closed form
    -<A(lift(df Z), lift(O d2f(X,X))), U>. Returns (direct, formula)."""
    X = _require_kernel_direction(pb.f, x, X)
    sp = splitting(pb.bundle, p)
    x_t = np.concatenate([X, np.zeros(pb.d_p)])
    u_amb = np.asarray(U, dtype=float)
    u_t = np.concatenate([np.zeros(pb.d_m), u_amb])
    z_t = pb.horizontal_lift(x, p, np.asarray(Z, float), split=sp)
    direct = pullback_curvature(pb, x, p, u_t, x_t, x_t, z_t, h, path="direct")
    ops = GraphOperators(pb.f, x)
    w = ops.apply_o(d2f(pb.f, x, X, X, h))
    lift_w = horizontal_lift(pb.bundle, p, w, split=sp)
    lift_z = horizontal_lift(pb.bundle, p, pb.f.jac(x) @ np.asarray(Z, float), split=sp)
    formula = -float(a_tensor(pb.bundle, p, lift_z, lift_w, h, split=sp) @ u_amb)
    return float(direct), formula


# ---------------------------------------------------------------------------
# Negative-plane certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NegativePlaneCertificate:
    """An explicit plane on f*P with directly verified negative sectional
    curvature, produced from a nonzero obstruction cross term."""

    x: np.ndarray
    p: np.ndarray
    plane_x: np.ndarray       # first spanning vector (kernel lift)
    plane_w: np.ndarray       # second spanning vector t*U~ + Z~
    t: float
    cross_term: float
    sec_value: float          # direct evaluation, < -1e-6
    predicted_value: float    # quadratic-expansion prediction
    z_direction: np.ndarray
    u_direction: np.ndarray

    @property
    def relative_agreement(self) -> float:
        return abs(self.sec_value - self.predicted_value) / max(abs(self.sec_value), 1e-300)


def certificate_parameter(cross_term: float, r_zz: float) -> float:
    """Mixing weight t with quadratic value t^2*0 + 2 t c + R_Z = -1."""
    if cross_term == 0.0:
        raise GeometryError("cross term must be nonzero")
    return -np.sign(cross_term) * (r_zz + 1.0) / (2.0 * abs(cross_term))


def negative_plane_finder(pb: PullbackBundle, x: np.ndarray, p: np.ndarray,
                          X: np.ndarray, h: float = DEFAULT_FD_STEP,
                          cross_tolerance: float = CROSS_TERM_TOLERANCE
                          ) -> Optional[NegativePlaneCertificate]:
    """Search for a plane of negative curvature through the kernel lift of X.

    Z runs over the coimage basis plus the top singular direction of the
    obstruction operator; U is the normalized obstruction vector (the unit
    vertical maximizer of the cross term, by duality). The mixing weight
    makes the quadratic expansion evaluate to -1, and a certificate is
    emitted only when the direct sectional curvature confirms the sign.
    """
    X = np.asarray(X, dtype=float)
    nx = np.linalg.norm(X)
    if abs(nx - 1.0) > 1e-8:
        X = X / nx
    X = _require_kernel_direction(pb.f, x, X)
    kd = kernel_splitting(pb.f, x)
    if kd.rank == 0:
        return None
    op = obstruction_operator(pb, x, p, X, h, kd=kd)
    sp = splitting(pb.bundle, p)
    candidates = [kd.coimage_basis[:, j] for j in range(kd.rank)]
    if op.best_z is not None:
        candidates.append(op.best_z)
    best = None
    for z in candidates:
        v = obstruction_vector(pb, x, p, X, z, h)
        c = float(np.linalg.norm(v))
        if best is None or c > best[0]:
            best = (c, z, v)
    c, z, v = best
    if c <= cross_tolerance:
        return None
    u = v / c
    x_t = np.concatenate([X, np.zeros(pb.d_p)])
    u_t = np.concatenate([np.zeros(pb.d_m), u])
    z_t = pb.horizontal_lift(x, p, z, split=sp)
    r_zz = pullback_curvature(pb, x, p, x_t, z_t, z_t, x_t, h, path="direct")
    t = certificate_parameter(c, r_zz)
    w_t = t * u_t + z_t
    gram = (x_t @ x_t) * (w_t @ w_t) - (x_t @ w_t) ** 2
    predicted = -1.0 / gram
    direct = pullback_sectional_curvature(pb, x, p, x_t, w_t, h)
    if direct >= NEGATIVE_SEC_TOLERANCE:
        return None
    return NegativePlaneCertificate(
        x=x, p=p, plane_x=x_t, plane_w=w_t, t=float(t),
        cross_term=c, sec_value=float(direct), predicted_value=float(predicted),
        z_direction=z, u_direction=u)


# ---------------------------------------------------------------------------
# Level sets
# ---------------------------------------------------------------------------

def kernel_projector_field(f: SmoothMapBetweenManifolds, rank: int):
    """Pointwise orthogonal projector onto ker df inside the tangent space,
    at the fixed rank of the working regular point."""

    def proj(y: np.ndarray) -> np.ndarray:
        ops = GraphOperators(f, y)
        _, _, vt = np.linalg.svd(ops.d)
        cols = ops.basis_m @ vt[rank:].T
        return cols @ cols.T

    return proj


def level_set_ii(f: SmoothMapBetweenManifolds, x: np.ndarray, X: np.ndarray,
                 h: float = DEFAULT_FD_STEP) -> tuple[np.ndarray, float]:
    """Second fundamental form of the level set through x in the direction X,
    with the kernel-aligned extension of X, plus the residual of the identity
    d2f(X, X) = -df(II).

    Returns (ii_vector, identity_residual).
    """
    X = _require_kernel_direction(f, x, X)
    kd = kernel_splitting(f, x)
    k_proj = kernel_projector_field(f, kd.rank)
    x_amb = np.asarray(X, dtype=float)

    def kernel_field(y: np.ndarray) -> np.ndarray:
        return k_proj(y) @ x_amb

    nabla = core.covariant_derivative(f.source, kernel_field, x, X, h)
    perp = f.source.projector_field(x) - k_proj(x)
    ii = perp @ nabla
    residual = float(np.linalg.norm(d2f(f, x, X, X, h) + f.jac(x) @ ii))
    return ii, residual


@dataclass(frozen=True)
class RankProfile:
    min_rank: int
    histogram: dict
    witnesses: list            # (point, singular values) at the minimal rank
    samples: int


def rank_profile(f: SmoothMapBetweenManifolds, points: Optional[list] = None,
                 samples: int = 200, seed: int = 0,
                 rtol: float = KERNEL_RTOL, max_witnesses: int = 5) -> RankProfile:
    """Rank statistics of df over sampled (or given) points, with witnesses
    of the minimal rank; locates singular level sets."""
    if points is None:
        seeds = np.random.SeedSequence(seed).spawn(samples)
        points = [f.source.random_point(np.random.Generator(np.random.PCG64(s)))
                  for s in seeds]
    histogram: dict = {}
    min_rank = None
    witnesses: list = []
    for x in points:
        kd = kernel_splitting(f, x, rtol)
        histogram[kd.rank] = histogram.get(kd.rank, 0) + 1
        if min_rank is None or kd.rank < min_rank:
            min_rank = kd.rank
            witnesses = [(x, kd.singular_values)]
        elif kd.rank == min_rank and len(witnesses) < max_witnesses:
            witnesses.append((x, kd.singular_values))
    return RankProfile(min_rank=int(min_rank), histogram=histogram,
                       witnesses=witnesses, samples=len(points))


# ---------------------------------------------------------------------------
# Scenario-level report
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObstructionSample:
    x: np.ndarray
    p: np.ndarray
    X: np.ndarray
    obstruction_norm: float
    d2f_norm: float
    xi_rank: int
    level_set_ii_norm: float
    level_set_identity_residual: float
    flatness_residual: float
    is_regular: bool


@dataclass
class ObstructionReport:
    bundle_name: str
    map_name: str
    seed: int
    fd_step: float
    fatness: FatnessReport
    fiber_geodesy: float
    samples: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    unverified_candidates: int = 0
    singular_points: int = 0
    verdict: str = "CONSISTENT"
    consistency_tolerance: float = CONSISTENCY_TOLERANCE
    cross_tolerance: float = CROSS_TERM_TOLERANCE

    @property
    def regular_samples(self) -> list:
        return [s for s in self.samples if s.is_regular]

    @property
    def max_obstruction_norm(self) -> float:
        vals = [s.obstruction_norm for s in self.regular_samples]
        return max(vals) if vals else 0.0

    @property
    def max_level_set_ii(self) -> float:
        vals = [s.level_set_ii_norm for s in self.regular_samples]
        return max(vals) if vals else 0.0

    @property
    def max_flatness_residual(self) -> float:
        vals = [s.flatness_residual for s in self.samples]
        return max(vals) if vals else 0.0

    @property
    def best_certificate(self) -> Optional[NegativePlaneCertificate]:
        if not self.certificates:
            return None
        return min(self.certificates, key=lambda cert: cert.sec_value)


def theorem_report(pb: PullbackBundle, samples: int = 200,
                   kernel_directions: int = 20, seed: int = 0,
                   h: float = DEFAULT_FD_STEP,
                   consistency_tolerance: float = CONSISTENCY_TOLERANCE,
                   cross_tolerance: float = CROSS_TERM_TOLERANCE,
                   fatness_samples: int = 50, fatness_directions: int = 20,
                   fiber_samples: int = 10,
                   max_workers: int = 1) -> ObstructionReport:
    """Sampled totally-geodesic-level-set test over a pull-back scenario.

    Per sample: a base point, a random fiber point over its image, kernel
    directions of the base map, the obstruction operator norm, the rank of
    its vertical map, the level-set second fundamental form, and the
    vertical-plane flatness residual. Nonzero obstructions trigger a
    negative-plane search; the verdict is VIOLATED exactly when a certificate
    re-verifies, CONSISTENT when all obstruction norms stay below tolerance,
    INCONCLUSIVE otherwise.
    """
    report = ObstructionReport(
        bundle_name=pb.bundle.name, map_name=pb.f.name, seed=seed, fd_step=h,
        fatness=submersion.fatness(pb.bundle, sample_count=fatness_samples,
                                   directions=fatness_directions, seed=seed, h=h,
                                   max_workers=max_workers),
        fiber_geodesy=submersion.totally_geodesic_fibers_check(
            pb.bundle, samples=fiber_samples, seed=seed, h=h),
        consistency_tolerance=consistency_tolerance,
        cross_tolerance=cross_tolerance)

    seeds = np.random.SeedSequence(seed).spawn(samples)

    def one_sample(i: int):
        rng = np.random.Generator(np.random.PCG64(seeds[i]))
        x = pb.f.source.random_point(rng)
        p = pb.bundle.fiber_sampler(pb.f(x), rng)
        kd = kernel_splitting(pb.f, x)
        out_samples = []
        out_certs = []
        unverified = 0
        kernel_dim = kd.kernel_basis.shape[1]
        if kernel_dim == 0:
            return out_samples, out_certs, unverified, kd.is_regular
        n_dirs = kernel_directions if kernel_dim > 1 else 1
        dirs = [kd.kernel_basis[:, j] for j in range(min(kernel_dim, n_dirs))]
        while len(dirs) < n_dirs:
            c = rng.standard_normal(kernel_dim)
            c /= np.linalg.norm(c)
            dirs.append(kd.kernel_basis @ c)
        sp = splitting(pb.bundle, p)
        ops = GraphOperators(pb.f, x)
        for X in dirs:
            op = obstruction_operator(pb, x, p, X, h, kd=kd, ops=ops)
            s_xi = np.linalg.svd(op.xi_matrix, compute_uv=False)
            rank_xi = int(np.sum(s_xi > XI_RANK_TOLERANCE))
            ii, identity_residual = level_set_ii(pb.f, x, X, h)
            x_t = np.concatenate([X, np.zeros(pb.d_p)])
            flat_res = 0.0
            for a in range(sp.vertical_basis.shape[1]):
                u_t = np.concatenate([np.zeros(pb.d_m), sp.vertical_basis[:, a]])
                flat_res = max(flat_res, abs(pullback_curvature(pb, x, p, u_t, x_t, x_t, u_t,
                                                    h, path="direct")))
            out_samples.append(ObstructionSample(
                x=x, p=p, X=X,
                obstruction_norm=op.norm,
                d2f_norm=op.d2f_norm,
                xi_rank=rank_xi,
                level_set_ii_norm=float(np.linalg.norm(ii)),
                level_set_identity_residual=identity_residual,
                flatness_residual=flat_res,
                is_regular=kd.is_regular))
            if kd.is_regular and op.norm > cross_tolerance:
                cert = negative_plane_finder(pb, x, p, X, h, cross_tolerance)
                if cert is not None:
                    out_certs.append(cert)
                else:
                    unverified += 1
        return out_samples, out_certs, unverified, kd.is_regular

    results = parallel_map(one_sample, range(samples), max_workers)
    for out_samples, out_certs, unverified, is_regular in results:
        report.samples.extend(out_samples)
        report.certificates.extend(out_certs)
        report.unverified_candidates += unverified
        if not is_regular:
            report.singular_points += 1

    if report.certificates:
        report.verdict = "VIOLATED"
    elif report.unverified_candidates == 0 and \
            report.max_obstruction_norm <= consistency_tolerance:
        report.verdict = "CONSISTENT"
    else:
        report.verdict = "INCONCLUSIVE"
    return report

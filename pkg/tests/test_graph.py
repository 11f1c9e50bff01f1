"""Graph operators: duals, the block splitting, normal projection, d2f."""

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from submersion_lab import core, geometries, graph
from submersion_lab.graph import (SmoothMapBetweenManifolds,
                                  compose, constant_map, d2f, df_dagger,
                                  graph_manifold, graph_operators,
                                  graph_second_fundamental_form, identity_map,
                                  normal_projection_graph, xi_inverse)

from conftest import linear_sphere_map, rng_for


def flat_linear_map(matrix, half_width=1.0):
    matrix = np.asarray(matrix, dtype=float)
    src = geometries.flat_space(matrix.shape[1], half_width)
    dst = geometries.flat_space(matrix.shape[0], half_width * 10)
    return SmoothMapBetweenManifolds(
        source=src, target=dst,
        ambient_map=lambda x: matrix @ x,
        jacobian=lambda x: matrix,
        name="flat_linear")


class TestDfDagger:
    def test_constant_map_zero(self, s2, s3):
        f = constant_map(s3, s2, np.array([0.0, 0.0, 1.0]))
        x = np.array([1.0, 0.0, 0.0, 0.0])
        npt.assert_allclose(df_dagger(f, x), np.zeros((4, 3)), atol=0)

    def test_identity_map(self, s2):
        f = identity_map(s2)
        x = np.array([0.0, 0.0, 1.0])
        dual = df_dagger(f, x)
        npt.assert_allclose(dual, s2.projector_field(x), atol=1e-12)

    def test_flat_scaling(self):
        f = flat_linear_map([[2.0]])
        npt.assert_allclose(df_dagger(f, np.array([0.3])), [[2.0]], atol=1e-14)

    def test_duality_identity(self, s2, s3):
        rng = rng_for(2)
        f = linear_sphere_map(s3, s2, rng.standard_normal((3, 4)))
        x = s3.random_point(rng)
        dual = df_dagger(f, x)
        jac = f.jac(x)
        for _ in range(5):
            X = core.random_tangent(s3, x, rng)
            Y = core.random_tangent(s2, f(x), rng)
            assert abs((dual @ Y) @ X - Y @ (jac @ X)) <= 1e-10

    def test_ill_conditioned_metric_rejected(self, s2):
        f = identity_map(s2)
        x = np.array([0.0, 0.0, 1.0])
        bad = np.diag([1.0, 1e-14, 1.0])
        with pytest.raises(graph.IllConditionedMetricError):
            df_dagger(f, x, metric_operator=bad)


class TestXiInverse:
    def test_zero_differential_identity_blocks(self, s2, s3):
        f = constant_map(s3, s2, np.array([0.0, 0.0, 1.0]))
        rng = rng_for(3)
        x = s3.random_point(rng)
        X = core.random_tangent(s3, x, rng)
        Y = core.random_tangent(s2, f(x), rng)
        tv, nw = xi_inverse(f, x, X, Y)
        npt.assert_allclose(tv, X, atol=1e-12)
        npt.assert_allclose(nw, Y, atol=1e-12)

    def test_flat_identity_halves(self):
        f = flat_linear_map(np.eye(2))
        x = np.zeros(2)
        X = np.array([1.0, 0.0])
        Y = np.array([0.0, 2.0])
        tv, nw = xi_inverse(f, x, X, Y)
        npt.assert_allclose(tv, 0.5 * (X + Y), atol=1e-12)
        npt.assert_allclose(nw, 0.5 * (Y - X), atol=1e-12)

    def test_roundtrip_random_flat_map(self):
        rng = rng_for(4)
        f = flat_linear_map(rng.standard_normal((3, 2)))
        x = np.zeros(2)
        ops = graph_operators(f, x)
        for _ in range(10):
            X = rng.standard_normal(2)
            Y = rng.standard_normal(3)
            tv, nw = ops.xi_inverse(X, Y)
            rx, ry = ops.xi(tv, nw)
            assert np.linalg.norm(rx - X) <= 1e-10
            assert np.linalg.norm(ry - Y) <= 1e-10

    def test_roundtrip_sphere_map(self, s2, s3):
        rng = rng_for(5)
        f = linear_sphere_map(s3, s2, rng.standard_normal((3, 4)))
        x = s3.random_point(rng)
        ops = graph_operators(f, x)
        X = core.random_tangent(s3, x, rng)
        Y = core.random_tangent(s2, f(x), rng)
        tv, nw = ops.xi_inverse(X, Y)
        rx, ry = ops.xi(tv, nw)
        assert max(np.linalg.norm(rx - X), np.linalg.norm(ry - Y)) <= 1e-9


class TestNormalProjectionGraph:
    def test_graph_tangent_annihilated(self, s2, s3):
        rng = rng_for(6)
        f = linear_sphere_map(s3, s2, rng.standard_normal((3, 4)))
        x = s3.random_point(rng)
        X = core.random_tangent(s3, x, rng)
        pv, pw = normal_projection_graph(f, x, X, f.jac(x) @ X)
        assert np.linalg.norm(pv) <= 1e-9
        assert np.linalg.norm(pw) <= 1e-9

    def test_zero_differential_keeps_target_part(self, s2, s3):
        f = constant_map(s3, s2, np.array([0.0, 0.0, 1.0]))
        rng = rng_for(7)
        x = s3.random_point(rng)
        X = core.random_tangent(s3, x, rng)
        Y = core.random_tangent(s2, f(x), rng)
        pv, pw = normal_projection_graph(f, x, X, Y)
        npt.assert_allclose(pv, np.zeros(4), atol=1e-12)
        npt.assert_allclose(pw, Y, atol=1e-12)

    def test_against_gram_schmidt_oracle(self, s2, s3):
        # brute force: orthonormalize a graph tangent basis and subtract the
        # tangential component; both flat and sphere scenarios
        rng = rng_for(8)
        cases = [flat_linear_map(rng.standard_normal((3, 2))),
                 linear_sphere_map(s3, s2, rng.standard_normal((3, 4))),
                 linear_sphere_map(s2, s2, rng.standard_normal((3, 3)))]
        for f in cases:
            for _ in range(5):
                x = f.source.random_point(rng)
                basis_m = core.tangent_basis(f.source, x)
                cols = np.vstack([basis_m, f.jac(x) @ basis_m])
                q, _ = np.linalg.qr(cols)
                v = core.random_tangent(f.source, x, rng)
                w = core.random_tangent(f.target, f(x), rng)
                stacked = np.concatenate([v, w])
                oracle = stacked - q @ (q.T @ stacked)
                pv, pw = normal_projection_graph(f, x, v, w)
                assert np.linalg.norm(np.concatenate([pv, pw]) - oracle) <= 1e-8

    def test_idempotent(self, s2):
        rng = rng_for(9)
        f = linear_sphere_map(s2, s2, rng.standard_normal((3, 3)))
        x = s2.random_point(rng)
        v = core.random_tangent(s2, x, rng)
        w = core.random_tangent(s2, f(x), rng)
        pv, pw = normal_projection_graph(f, x, v, w)
        qv, qw = normal_projection_graph(f, x, pv, pw)
        assert max(np.linalg.norm(qv - pv), np.linalg.norm(qw - pw)) <= 1e-8

    def test_commute_identity(self, s2, s3):
        # df (1 + df^T df)^{-1} = (1 + df df^T)^{-1} df on tangent bases
        rng = rng_for(10)
        f = linear_sphere_map(s3, s2, rng.standard_normal((3, 4)))
        x = s3.random_point(rng)
        d = graph_operators(f, x).d
        lhs = d @ np.linalg.inv(np.eye(3) + d.T @ d)
        rhs = np.linalg.inv(np.eye(2) + d @ d.T) @ d
        npt.assert_allclose(lhs, rhs, atol=1e-10)

    def test_o_spectrum_in_unit_interval(self, s2, s3):
        rng = rng_for(11)
        f = linear_sphere_map(s3, s2, rng.standard_normal((3, 4)))
        x = s3.random_point(rng)
        ops = graph_operators(f, x)
        eigs = np.linalg.eigvalsh(ops.o_matrix())
        assert np.all(eigs > 0.0)
        assert np.all(eigs <= 1.0 + 1e-12)
        one_plus = np.eye(2) + ops.d @ ops.d.T
        npt.assert_allclose(ops.o_matrix() @ one_plus, np.eye(2), atol=1e-10)


class TestD2f:
    def test_identity_map_zero(self, s2):
        f = identity_map(s2)
        rng = rng_for(12)
        x = s2.random_point(rng)
        X = core.random_tangent(s2, x, rng)
        Y = core.random_tangent(s2, x, rng)
        assert np.linalg.norm(d2f(f, x, X, Y)) <= 1e-8

    def test_constant_map_zero(self, s2, s3):
        f = constant_map(s3, s2, np.array([0.0, 0.0, 1.0]))
        rng = rng_for(13)
        x = s3.random_point(rng)
        X = core.random_tangent(s3, x, rng)
        assert np.linalg.norm(d2f(f, x, X, X)) <= 1e-10

    def test_hopf_vertical_direction_vanishes(self, hopf_complex):
        # kernel directions of the bundle projection are fiber velocities and
        # the fibers are great circles, hence geodesics: d2f(X, X) = 0.
        rng = rng_for(14)
        f = hopf_complex.projection
        p = hopf_complex.total.random_point(rng)
        a, b = p[:2], p[2:]
        vertical = np.array([-a[1], a[0], -b[1], b[0]])
        # oracle: the fiber circle acceleration is purely normal
        accel = -p  # second derivative of cos(t) p + sin(t) (ip) at t=0
        assert np.linalg.norm(hopf_complex.total.projector_field(p) @ accel) <= 1e-12
        assert np.linalg.norm(d2f(f, p, vertical, vertical)) <= 1e-6

    def test_symmetry(self, s2, s3):
        rng = rng_for(15)
        f = linear_sphere_map(s3, s2, rng.standard_normal((3, 4)))
        x = s3.random_point(rng)
        X = core.random_tangent(s3, x, rng)
        Y = core.random_tangent(s3, x, rng)
        assert np.linalg.norm(d2f(f, x, X, Y) - d2f(f, x, Y, X)) <= 1e-4

    def test_extension_independence(self, s2):
        # halving the step changes the value only at second order
        rng = rng_for(16)
        f = linear_sphere_map(s2, s2, rng.standard_normal((3, 3)))
        x = s2.random_point(rng)
        X = core.random_tangent(s2, x, rng)
        v1 = d2f(f, x, X, X, h=1e-4)
        v2 = d2f(f, x, X, X, h=5e-5)
        assert np.linalg.norm(v1 - v2) <= 1e-7


class TestGraphSecondFundamentalForm:
    def test_identity_and_constant_vanish(self, s2, s3):
        rng = rng_for(17)
        for f in (identity_map(s2),
                  constant_map(s3, s2, np.array([0.0, 0.0, 1.0]))):
            x = f.source.random_point(rng)
            X = core.random_tangent(f.source, x, rng)
            assert np.linalg.norm(graph_second_fundamental_form(f, x, X, X)) <= 1e-8

    def test_against_direct_ambient_oracle(self, s2, s3):
        # embed the graph in the product ambient space and compare with the
        # flat-ambient second fundamental form projected to T(M x N)
        rng = rng_for(18)
        f = linear_sphere_map(s3, s2, rng.standard_normal((3, 4)))
        gm = graph_manifold(f)
        for _ in range(5):
            x = s3.random_point(rng)
            z = np.concatenate([x, f(x)])
            X = core.random_tangent(s3, x, rng)
            Y = core.random_tangent(s3, x, rng)
            xt = np.concatenate([X, f.jac(x) @ X])
            yt = np.concatenate([Y, f.jac(x) @ Y])
            direct = core.second_fundamental_form(gm, z, xt, yt)
            p_prod = np.zeros((7, 7))
            p_prod[:4, :4] = s3.projector_field(x)
            p_prod[4:, 4:] = s2.projector_field(f(x))
            direct_in_product = p_prod @ direct
            formula = graph_second_fundamental_form(f, x, X, Y)
            assert np.linalg.norm(formula - direct_in_product) <= 1e-4

    def test_output_normal_to_graph(self, s2):
        rng = rng_for(19)
        f = linear_sphere_map(s2, s2, rng.standard_normal((3, 3)))
        x = s2.random_point(rng)
        X = core.random_tangent(s2, x, rng)
        ii = graph_second_fundamental_form(f, x, X, X)
        basis_m = core.tangent_basis(s2, x)
        graph_tangents = np.vstack([basis_m, f.jac(x) @ basis_m])
        assert np.max(np.abs(ii @ graph_tangents)) <= 1e-6


@settings(max_examples=40, deadline=None, derandomize=True)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4), st.integers(1, 4),
       st.sampled_from([1.0, 0.0, 0.3]))
def test_xi_roundtrip_property(seed, m, n, scale):
    # the graph splitting inverts exactly for any differential, including
    # zero and rank-deficient ones
    rng = np.random.default_rng(seed)
    mat = scale * rng.standard_normal((n, m))
    if min(m, n) > 1 and seed % 3 == 0:
        mat[:, -1] = mat[:, 0]  # force rank deficiency
    f = flat_linear_map(mat)
    ops = graph_operators(f, np.zeros(m))
    v = rng.standard_normal(m)
    w = rng.standard_normal(n)
    tv, nw = ops.xi_inverse(v, w)
    rv, rw = ops.xi(tv, nw)
    assert np.linalg.norm(rv - v) <= 1e-9 * max(1.0, np.linalg.norm(v))
    assert np.linalg.norm(rw - w) <= 1e-9 * max(1.0, np.linalg.norm(w))


class TestCompose:
    def test_identity_composition(self, s2):
        rng = rng_for(20)
        f = linear_sphere_map(s2, s2, rng.standard_normal((3, 3)))
        g = compose(identity_map(s2), f)
        x = s2.random_point(rng)
        npt.assert_allclose(g(x), f(x), atol=1e-14)
        npt.assert_allclose(g.jac(x), f.jac(x), atol=1e-14)

    def test_chain_rule_vs_fd(self, s2):
        rng = rng_for(21)
        f = linear_sphere_map(s2, s2, rng.standard_normal((3, 3)))
        g = linear_sphere_map(s2, s2, rng.standard_normal((3, 3)))
        fg = compose(f, g)
        x = s2.random_point(rng)
        X = core.random_tangent(s2, x, rng)
        h = 1e-5
        fd = (fg(s2.retraction(x, h * X)) - fg(s2.retraction(x, -h * X))) / (2 * h)
        npt.assert_allclose(s2.projector_field(fg(x)) @ (fg.jac(x) @ X),
                            s2.projector_field(fg(x)) @ fd, atol=1e-6)

    def test_fd_jacobian_fallback_matches_analytic(self, s2):
        rng = rng_for(22)
        mat = rng.standard_normal((3, 3))
        analytic = linear_sphere_map(s2, s2, mat)
        fallback = SmoothMapBetweenManifolds(
            source=s2, target=s2, ambient_map=analytic.ambient_map, name="fd")
        x = s2.random_point(rng)
        X = core.random_tangent(s2, x, rng)
        assert np.linalg.norm((fallback.jac(x) - analytic.jac(x)) @ X) <= 1e-6

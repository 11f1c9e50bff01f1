"""Embedded manifolds from projector fields: derivatives and curvature.

Every manifold here is a subset of flat space described by two callables:
an orthogonal projector onto the tangent space at each point, and a
retraction that steps along the manifold. That is enough to differentiate
vector fields, read off second fundamental forms, and assemble the full
curvature tensor from first derivatives of the projector alone.
"""

import numpy as np

from submersion_lab import core, geometries

rng = np.random.default_rng(0)

# -- a round 2-sphere ---------------------------------------------------------

s2 = geometries.sphere(2)
x = s2.random_point(rng)
print("point on S2:", x, " |x| =", np.linalg.norm(x))

P = core.tangent_projector(s2, x)
print("projector rank:", int(round(np.trace(P))))

# tangent vectors are just ambient vectors annihilated by I - P
X = core.random_tangent(s2, x, rng)
Y = core.random_tangent(s2, x, rng)

# -- covariant derivative = project the ambient derivative --------------------

# the velocity field of the equator is parallel along itself (a geodesic):
velocity = lambda y: np.array([-y[1], y[0], 0.0])
eq = np.array([1.0, 0.0, 0.0])
nabla = core.covariant_derivative(s2, velocity, eq, velocity(eq))
print("geodesic acceleration of the equator:", np.linalg.norm(nabla))

# -- second fundamental form and curvature ------------------------------------

ii = core.second_fundamental_form(s2, x, X, X)
print("II(X,X) + x |X|^2 =", np.linalg.norm(ii + x * (X @ X)), "(sphere shape operator)")

print("sec(S2) =", core.sectional_curvature(s2, x, X, Y))
print("sec(S2(r=2)) =", core.sectional_curvature(
    geometries.sphere(2, 2.0), 2 * x, X, Y), "(expect 1/4)")

# without the closed-form projector derivative the same number emerges from
# finite differences of the projector field along retraction curves:
s2_fd = geometries.sphere(2, analytic=False)
print("sec via fd projector:", core.sectional_curvature(s2_fd, x, X, Y))

# -- products are flat in mixed planes ----------------------------------------

torus = geometries.product_manifold(geometries.sphere(1), geometries.sphere(1))
z = torus.random_point(rng)
u = np.concatenate([core.random_tangent(geometries.sphere(1), z[:2], rng), [0, 0]])
v = np.concatenate([[0, 0], core.random_tangent(geometries.sphere(1), z[2:], rng)])
print("sec of a mixed torus plane:", core.sectional_curvature(torus, z, u, v))

# -- curvature tensor symmetries ----------------------------------------------

s3 = geometries.sphere(3)
p3 = s3.random_point(rng)
vecs = [core.random_tangent(s3, p3, rng) for _ in range(4)]
a, b, c, d = vecs
print("antisymmetry check:",
      core.riemann(s3, p3, a, b, c, d) + core.riemann(s3, p3, b, a, c, d))
print("first Bianchi sum:",
      core.riemann(s3, p3, a, b, c, d)
      + core.riemann(s3, p3, a, c, d, b)
      + core.riemann(s3, p3, a, d, b, c))

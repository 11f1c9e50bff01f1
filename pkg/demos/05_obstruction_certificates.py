"""The curvature obstruction in action: geodesic level sets or negative planes.

If the pull-back of a fat bundle carries non-negative sectional curvature,
the regular level sets of the base map must be totally geodesic. The bench
tests the contrapositive numerically: for kernel directions X of df it
evaluates the obstruction vector A(lift(O d2f(X,X)), lift(df Z)); when the
obstruction is nonzero it assembles an explicit plane whose directly
computed sectional curvature is negative, which certifies that this
pull-back metric is not non-negatively curved.
"""

import numpy as np

from submersion_lab import geometries, obstruction
from submersion_lab.graph import compose
from submersion_lab.pullback import pullback_bundle
from submersion_lab.submersion import splitting

rng = np.random.default_rng(4)
hopf = geometries.hopf_fibration("complex")

# --- positive control: the bundle projection itself --------------------------
# its level sets are the Hopf fibers, which are great circles

pure = pullback_bundle(hopf.projection, hopf)
z = pure.total_manifold.random_point(rng)
x, p = pure.split_point(z)
kd = obstruction.kernel_splitting(pure.f, x)
X = kd.kernel_basis[:, 0]
op = obstruction.obstruction_operator(pure, x, p, X)
ii, _ = obstruction.level_set_ii(pure.f, x, X)
print("pure Hopf: obstruction norm", op.norm,
      " level-set II", np.linalg.norm(ii),
      " certificate:", obstruction.negative_plane_finder(pure, x, p, X))

# --- negative control: compose with a non-isometric diffeomorphism -----------
# level sets become images of great circles that are no longer geodesics

phi = geometries.perturbation_diffeo(hopf.total, 0.3, np.array([1.0, 0, 0, 0]))
perturbed = pullback_bundle(compose(hopf.projection, phi), hopf)
z = perturbed.total_manifold.random_point(rng)
x, p = perturbed.split_point(z)
kd = obstruction.kernel_splitting(perturbed.f, x)
X = kd.kernel_basis[:, 0]
op = obstruction.obstruction_operator(perturbed, x, p, X)
ii, resid = obstruction.level_set_ii(perturbed.f, x, X)
print("perturbed Hopf: obstruction norm", op.norm,
      " level-set II", np.linalg.norm(ii), " identity residual", resid)

# the two curvature identities behind the construction
sp = splitting(hopf, p)
u = sp.vertical_basis[:, 0]
print("vertical-plane flatness residual:",
      obstruction.vertizontal_flat_check(perturbed, x, p, X, u))
direct, formula = obstruction.cross_term_check(perturbed, x, p, X, u,
                                               kd.coimage_basis[:, 0])
print("cross term: direct", direct, " closed form", formula)

cert = obstruction.negative_plane_finder(perturbed, x, p, X)
print("certificate: t =", cert.t, " cross term =", cert.cross_term)
print("  direct sectional curvature:", cert.sec_value)
print("  expansion prediction:      ", cert.predicted_value)
print("  relative agreement:        ", cert.relative_agreement)

# --- scenario-level reports ---------------------------------------------------

rep = obstruction.theorem_report(pure, samples=40, seed=0,
                                 fatness_samples=20, fatness_directions=10,
                                 fiber_samples=5)
print("pure scenario verdict:", rep.verdict,
      " max obstruction:", rep.max_obstruction_norm)

rep = obstruction.theorem_report(perturbed, samples=40, seed=0,
                                 fatness_samples=20, fatness_directions=10,
                                 fiber_samples=5)
print("perturbed scenario verdict:", rep.verdict,
      " certificates:", len(rep.certificates),
      " best plane sec:", rep.best_certificate.sec_value)

# rank profiling locates singular level sets, e.g. the equator of a two-fold
rho2 = geometries.geodesic_k_fold(2, 2)
equator = [np.array([0.0, np.cos(t), np.sin(t)]) for t in np.linspace(0, 3, 4)]
profile = obstruction.rank_profile(rho2, points=equator)
print("two-fold rank profile on the equator:", profile.histogram,
      " min rank:", profile.min_rank)

"""
Exterior forms: wedge, d, commutator and Hodge star
====================================================

"""

import numpy as np

from formflow.forms import (
    Chart, DifferentialForm, commutator, exterior_derivative, hodge_star, is_closed,
)

plane = Chart.euclidean("x", "y")
dx, dy = DifferentialForm.basis(plane, "x"), DifferentialForm.basis(plane, "y")
print("dx ^ dy =", dx ^ dy)
print("dx ^ dx =", dx ^ dx)

# the gradient of xy is exact, so its commutator vanishes
grad = exterior_derivative(DifferentialForm.scalar(plane, "x*y"))
print("d(xy) =", grad, " K zero:", commutator(grad).is_zero)

# the rotation form is not: K_12 = 2 everywhere
rot = DifferentialForm.one_form(plane, ["-y", "x"])
print("K for -y dx + x dy:\n", commutator(rot).evaluate((0.3, -0.7)))

pts = np.random.default_rng(0).uniform(-1, 1, (20, 2))
print(is_closed(rot, pts))

# Hodge star under the Minkowski signature (+,-,-,-)
mink = Chart.minkowski()
for k in range(5):
    a = DifferentialForm(mink, k, {tuple(range(k)): 1.0})
    print(k, "** =", hodge_star(hodge_star(a)))

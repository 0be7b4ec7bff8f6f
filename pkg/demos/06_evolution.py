"""
From a nonidentical relation to a closed form on a curve
=========================================================

"""

import math

import numpy as np

from formflow.evolution import (
    Pseudostructure, build_relation, classify_interaction, detect_degenerate_loci,
    extract_state_function, nonidentity_measure, restrict_to_pseudostructure,
)
from formflow.expr import parse
from formflow.forms import Chart

plane = Chart(("x", "y"))
rel = build_relation(["-y", "x"], 1, plane)
pts = np.random.default_rng(0).uniform(-1, 1, (50, 2))
print("nonidentity measure:", nonidentity_measure(rel, pts))
print("interaction for degree 1:", classify_interaction(1))

# where does the relation degenerate? scan D = x^2 + y^2 - 1
loci = detect_degenerate_loci(parse("x^2 + y^2 - 1"), plane, [(-2, 2), (-2, 2)], 64)
print(len(loci), "locus points, max | |r| - 1 | =", np.max(np.abs(np.hypot(*loci.T) - 1)))

# on the unit circle the pullback is exactly d tau
circle = Pseudostructure(plane, ("tau",), ("cos(tau)", "sin(tau)"), [(0, 2 * math.pi)])
res = restrict_to_pseudostructure(rel, circle)
print("pullback:", res.form, " closed:", res.closed)

# integrating it gives the state function psi(tau) = tau
sf = extract_state_function(res, 0.0, 0.0, 2 * math.pi, num=9)
print(np.column_stack([sf.tau, sf.psi]))

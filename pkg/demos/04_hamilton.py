"""
Hamiltonian flow, action and the Poincare form
===============================================

"""

import math

import numpy as np

from formflow.hamilton import (
    HamiltonianSystem, hamilton_jacobi_residual, integrate_hamilton, poincare_residual,
)

osc = HamiltonianSystem("(p^2 + q^2)/2")

# pick the step closest to 1e-3 that lands exactly on t = 2 pi
steps = math.ceil(2 * math.pi / 1e-3)
traj = integrate_hamilton(osc, [1.0], [0.0], 0.0, 2 * math.pi / steps, steps)
print("after one period:", traj.endpoint())
print("action over the period:", traj.S[-1] - traj.S[0])
print("energy drift:", traj.energy_drift())
print("Poincare residual:", poincare_residual(osc, traj))

# s = q^2 / (2t) solves the free-particle Hamilton-Jacobi equation, s = q^2 does not
free = HamiltonianSystem("p^2/2")
pts = np.column_stack([np.linspace(0.5, 2, 9), np.linspace(-2, 2, 9)])
print(hamilton_jacobi_residual(free, "q^2/(2*t)", pts))
print(hamilton_jacobi_residual(free, "q^2", pts).max_residual)

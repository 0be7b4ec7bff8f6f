"""
Characteristic strips of first-order equations
===============================================

"""

from formflow.charpit import (
    FirstOrderPDE, JetPoint, characteristic_direction, generalized_solution_certificate,
    integrate_strip,
)

# transport: straight rays along (1, 2), u carried unchanged
transport = FirstOrderPDE("p1 + 2*p2")
strip = integrate_strip(transport, JetPoint([0, 0], 5.0, [-2, 1]), ds=0.01, steps=100)
print("transport endpoint:", strip.endpoint())
print(generalized_solution_certificate(strip, transport, 1e-8))

# eikonal: rays follow p, u grows at rate 2|p|^2
eikonal = FirstOrderPDE("p1^2 + p2^2 - 1")
print("direction at p=(1,0):", characteristic_direction(eikonal, JetPoint([0, 0], 0.0, [1, 0])))
strip = integrate_strip(eikonal, JetPoint([0, 0], 0.0, [0.6, 0.8]), ds=0.01, steps=100)
print("eikonal endpoint:", strip.endpoint())

# a u-dependent equation: u and p grow exponentially along x1
growth = FirstOrderPDE("p1 - u", n=1)
strip = integrate_strip(growth, JetPoint([0.0], 3.0, [3.0]), ds=1e-3, steps=100)
print("max |F| =", strip.max_F, " strip residual =", strip.max_strip_residual)

# a damaged sample breaks the strip condition and is caught
strip.u[50] += 0.1
print(generalized_solution_certificate(strip, growth, 1e-8))

"""
Closure of the field-strength form on a spacetime grid
=======================================================

"""

from formflow.maxwell import (
    SpacetimeGrid, assemble_from_EB, certify_physical_structure, closure_residuals,
    sample_expressions,
)

wave = "sin(6.283185307179586*(x - t))"
bounds = [[0, 0.5], [0, 1], [0, 1], [0, 1]]

# residuals of d theta and d *theta fall by about 4 when h halves
prev = None
for n in (8, 16, 32):
    grid = SpacetimeGrid.from_bounds(bounds, n)
    r = closure_residuals(sample_expressions(grid, ["0", wave, "0"], ["0", "0", wave]))
    ratio = "" if prev is None else f"  ratio {prev.closed / r.closed:.3f}"
    print(f"n={n:3d}  d theta {r.closed:.3e}  d *theta {r.dual:.3e}{ratio}")
    prev = r

# constant fields are exactly closed
grid = SpacetimeGrid.from_bounds(bounds, 8)
print(closure_residuals(assemble_from_EB(grid, [0, 0, 0], [0, 0, 1])))

# a uniform charge density is not source free
print(certify_physical_structure(sample_expressions(grid, ["x", "0", "0"], ["0", "0", "0"]), 1e-6))

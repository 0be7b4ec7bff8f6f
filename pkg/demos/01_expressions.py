"""
Parsing, differentiating and evaluating expressions
====================================================

"""

import numpy as np

from formflow.expr import differentiate, evaluate, evaluate_array, parse, substitute

# infix text becomes an immutable tree; printing gives back parseable text
e = parse("x/(x^2 + 1)")
print("e      =", e)
print("de/dx  =", differentiate(e, "x"))

# the derivative vanishes at the maximum x = 1
print("de/dx(1) =", evaluate(differentiate(e, "x"), {"x": 1.0}))

# a quick central-difference cross-check
h = 1e-5
cd = (evaluate(e, {"x": 1 + h}) - evaluate(e, {"x": 1 - h})) / (2 * h)
print("central difference =", cd)

# vectorised evaluation over a numpy grid
xs = np.linspace(-3, 3, 7)
print(evaluate_array(e, {"x": xs}))

# substitution composes expressions
print(substitute(parse("x^2 + y^2"), {"x": "cos(t)", "y": "sin(t)"}))

# poles raise instead of returning inf or nan
try:
    evaluate(parse("1/x"), {"x": 0.0})
except ArithmeticError as exc:
    print("singular:", exc)

"""Shared random generators for property tests."""

import itertools
import sys

import numpy as np
import pytest

from formflow.expr import Expression, parse
from formflow.forms import Chart, DifferentialForm


def random_polynomial(rng, names, degree=4, terms=4, scale=2.0):
    """Sum of ``terms`` monomials of total degree <= ``degree``."""
    total = Expression.constant(float(rng.normal()))
    for _ in range(terms):
        k = int(rng.integers(0, degree + 1))
        mono = Expression.constant(float(np.round(rng.uniform(-scale, scale), 3)))
        for _ in range(k):
            mono = mono * Expression.variable(str(rng.choice(names)))
        total = total + mono
    return total


def random_expression(rng, names, depth=5):
    """Random smooth expression built from operations that stay finite on
    moderate inputs (divisions and logs are guarded by positive offsets)."""
    if depth <= 0 or rng.random() < 0.2:
        if rng.random() < 0.6:
            return Expression.variable(str(rng.choice(names)))
        return Expression.constant(float(np.round(rng.uniform(-2, 2), 2)))
    sub = lambda: random_expression(rng, names, depth - 1)
    op = int(rng.integers(0, 9))
    if op == 0:
        return sub() + sub()
    if op == 1:
        return sub() - sub()
    if op == 2:
        return sub() * sub()
    if op == 3:
        return sub() / (1 + sub() ** 2)
    if op == 4:
        return sub() ** int(rng.integers(2, 4))
    if op == 5:
        return sub().apply("sin")
    if op == 6:
        return sub().apply("cos")
    if op == 7:
        return sub().apply("sin").apply("exp")
    return (2 + sub().apply("cos")).apply("ln")


def random_form(rng, chart, degree, poly_degree=4):
    coeffs = {}
    for idx in itertools.combinations(range(chart.dimension), degree):
        if rng.random() < 0.75:
            coeffs[idx] = random_polynomial(rng, chart.names, poly_degree, terms=3)
    return DifferentialForm(chart, degree, coeffs)


def random_chart(rng):
    n = int(rng.integers(2, 5))
    return Chart(("x", "y", "z", "w")[:n])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def plane():
    return Chart(("x", "y"))


@pytest.fixture
def space():
    return Chart(("x", "y", "z"))


def expr(text):
    return parse(text)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)

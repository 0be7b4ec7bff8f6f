import csv

import numpy as np
import pytest

from formflow.evolution import (
    INTERACTIONS, Pseudostructure, build_relation, classify_interaction, detect_degenerate_loci,
    extract_state_function, line_integral, nonidentity_measure, restrict_to_pseudostructure,
    write_loci_csv,
)
from formflow.expr import Expression, differentiate, evaluate, parse
from formflow.forms import Chart, DegreeError, DifferentialForm, exterior_derivative

from conftest import random_expression, random_polynomial

TWO_PI = 6.283185307179586


@pytest.fixture
def box(rng):
    return rng.uniform(-1, 1, (50, 2))


def test_build_relation(plane):
    rel = build_relation(["y", "x"], 1, plane)
    assert rel.omega == DifferentialForm.one_form(plane, ["y", "x"])
    assert rel.provenance == ("energy", "force")
    rel = build_relation(["-y", "x"], 1, ["x", "y"])
    assert str(rel.omega.coefficient("x")) == "-y"
    with pytest.raises(DegreeError):
        build_relation(["x"], 4, Chart(("a", "b", "c", "d", "e")))
    with pytest.raises(DegreeError):
        build_relation({("x", "y", "z"): 1}, 3, plane)


def test_nonidentity_examples(plane, space, box, rng):
    assert nonidentity_measure(build_relation(["y", "x"], 1, plane), box) == 0.0
    assert nonidentity_measure(build_relation(["-y", "x"], 1, plane), box) == 2.0
    rel = build_relation({("x", "y"): "z"}, 2, space)
    assert nonidentity_measure(rel, rng.uniform(-1, 1, (20, 3))) == 1.0
    with pytest.raises(ValueError):
        nonidentity_measure(build_relation("x", 0, plane), box)


def test_locus_unit_circle(plane):
    D = parse("x^2 + y^2 - 1")
    pts = detect_degenerate_loci(D, plane, [(-2, 2), (-2, 2)], 64, 1e-6)
    assert len(pts) >= 100
    for x, y in pts:
        assert abs(evaluate(D, {"x": x, "y": y})) <= 1e-6
    assert np.max(np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1)) <= 1e-4


def test_locus_edge_cases(plane):
    bounds = [(-2, 2), (-2, 2)]
    assert detect_degenerate_loci(parse("1"), plane, bounds, 32).shape == (0, 2)
    assert len(detect_degenerate_loci(parse("1/x"), plane, [(-1, 1.1), (-1, 1)], 32)) == 0
    pts = detect_degenerate_loci(parse("x"), plane, [(-1, 1.1), (-1, 1)], 32, 1e-6)
    assert np.all(np.abs(pts[:, 0]) <= 1e-6)
    assert pts[:, 1].min() == -1 and pts[:, 1].max() == 1


def test_locus_tolerance_is_respected(plane, rng):
    for _ in range(10):
        D = random_polynomial(rng, ["x", "y"], degree=3, terms=4)
        tol = 10.0 ** -rng.integers(4, 10)
        pts = detect_degenerate_loci(D, plane, [(-1, 1), (-1, 1)], 24, tol)
        for x, y in pts:
            assert abs(evaluate(D, {"x": x, "y": y})) <= tol


def test_locus_newton_polish(plane):
    D = parse("x^2 + y^2 - 1")
    pts = detect_degenerate_loci(D, plane, [(-2, 2), (-2, 2)], 32, 1e-6, polish=True)
    assert np.max(np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1)) <= 1e-12


def test_loci_csv(tmp_path, plane):
    D = parse("x^2 + y^2 - 1")
    pts = detect_degenerate_loci(D, plane, [(-2, 2), (-2, 2)], 16)
    path = tmp_path / "loci.csv"
    write_loci_csv(path, pts, D, plane)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["x", "y", "abs_D"]
    assert len(rows) == len(pts) + 1
    assert all(float(r[2]) <= 1e-6 for r in rows[1:])


def test_circle_restriction(plane):
    rel = build_relation(["-y", "x"], 1, plane)
    ps = Pseudostructure(plane, ("tau",), ("cos(tau)", "sin(tau)"), [(0, TWO_PI)])
    res = restrict_to_pseudostructure(rel, ps)
    assert res.closed
    c = res.form.coefficient("tau")
    for t in np.linspace(0, TWO_PI, 17):
        assert abs(evaluate(c, {"tau": t}) - 1.0) <= 1e-15
    sf = extract_state_function(res, 0.0, 0.0, TWO_PI)
    assert np.max(np.abs(sf.psi - sf.tau)) <= 1e-10


def test_diagonal_restriction(plane):
    res = restrict_to_pseudostructure(build_relation(["y", "x"], 1, plane),
                                      Pseudostructure(plane, ("tau",), ("tau", "tau")))
    c = res.form.coefficient("tau")
    assert evaluate(c, {"tau": 1.5}) == 3.0
    sf = extract_state_function(res, 0.0, 0.0, 2.0)
    assert np.max(np.abs(sf.psi - sf.tau ** 2)) <= 1e-10


def test_frozen_coordinate_restriction(plane):
    res = restrict_to_pseudostructure(build_relation([1, 0], 1, plane),
                                      Pseudostructure(plane, ("tau",), (2, "tau")))
    assert res.form.is_zero()
    sf = extract_state_function(res, -1.0, 0.7, 1.0)
    assert np.all(sf.psi == 0.7)


def test_pseudostructure_validation(plane):
    with pytest.raises(ValueError):
        Pseudostructure(plane, ("tau", "sigma"), ("tau", "sigma"))
    with pytest.raises(ValueError):
        Pseudostructure(plane, ("tau",), ("tau", "s"))


def test_pullback_to_curve_is_closed(rng, space):
    for _ in range(30):
        A = [random_polynomial(rng, space.names, degree=3, terms=3) for _ in range(3)]
        curve = [random_expression(rng, ["tau"], depth=3) for _ in range(3)]
        res = restrict_to_pseudostructure(build_relation(A, 1, space),
                                          Pseudostructure(space, ("tau",), curve))
        assert res.closed
        (coeff,) = res.form.coefficients.values() or [Expression.constant(0.0)]
        assert differentiate(coeff, "sigma").is_zero


def test_state_function_derivative_recovers_coefficient(plane):
    rel = build_relation(["x*y", "x^2 - y"], 1, plane)
    ps = Pseudostructure(plane, ("tau",), ("cos(tau)", "sin(2*tau)"), [(0, 3)])
    res = restrict_to_pseudostructure(rel, ps)
    c = res.form.coefficient("tau")
    # central-difference truncation is O(h^2); 1e4 intervals put it near 4e-7
    sf = extract_state_function(res, 0.0, 0.0, 3.0, num=10_001)
    central = (sf.psi[2:] - sf.psi[:-2]) / (sf.tau[2:] - sf.tau[:-2])
    want = np.array([evaluate(c, {"tau": t}) for t in sf.tau[1:-1]])
    assert np.max(np.abs(central - want)) <= 1e-6
    assert sf.error_estimate <= 1e-10


def test_path_independence_for_exact_forms(plane, rng):
    for _ in range(10):
        f = random_polynomial(rng, ["x", "y"], degree=4, terms=5)
        omega = exterior_derivative(DifferentialForm.scalar(plane, f))
        rel = build_relation([omega.coefficient("x"), omega.coefficient("y")], 1, plane)
        assert nonidentity_measure(rel, rng.uniform(-1, 1, (30, 2))) <= 1e-12
        a, b = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        # two staircase paths on the grid lines through a and b
        path1 = [a, (b[0], a[1]), b]
        path2 = [a, (a[0], b[1]), b]
        i1, i2 = line_integral(rel.omega, path1), line_integral(rel.omega, path2)
        assert abs(i1 - i2) <= 1e-8
        exact = evaluate(f, {"x": b[0], "y": b[1]}) - evaluate(f, {"x": a[0], "y": a[1]})
        assert abs(i1 - exact) <= 1e-8


def test_rotation_form_is_path_dependent(plane):
    omega = DifferentialForm.one_form(plane, ["-y", "x"])
    lower = line_integral(omega, [(-1, -1), (1, -1), (1, 1)])
    upper = line_integral(omega, [(-1, -1), (-1, 1), (1, 1)])
    assert abs((lower - upper) - 8.0) <= 1e-12  # circulation 2 * area 4


def test_interactions():
    assert [classify_interaction(p) for p in range(4)] == [
        "strong", "weak", "electromagnetic", "gravitational"]
    assert INTERACTIONS[2] == "electromagnetic"
    with pytest.raises(DegreeError):
        classify_interaction(5)

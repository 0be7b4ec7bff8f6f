"""Evolutionary relations ``d psi = omega^p`` on an accompanying chart.

Covers the nonidentity measure of a relation, the scan for zero loci of
determinant-type functions, restriction of ``omega`` to an explicitly
parametrised pseudostructure, and recovery of the state function ``psi``
along it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .expr import (
    Expression,
    SingularEvaluationError,
    as_expression,
    differentiate,
    evaluate,
    evaluate_array,
)
from .forms import (
    Chart,
    DegreeError,
    DifferentialForm,
    commutator,
    exterior_derivative,
    pullback,
)
from .io import write_csv

__all__ = [
    "EvolutionaryRelation",
    "Pseudostructure",
    "Restriction",
    "StateFunction",
    "INTERACTIONS",
    "build_relation",
    "nonidentity_measure",
    "detect_degenerate_loci",
    "restrict_to_pseudostructure",
    "extract_state_function",
    "line_integral",
    "classify_interaction",
    "write_loci_csv",
]

INTERACTIONS = {0: "strong", 1: "weak", 2: "electromagnetic", 3: "gravitational"}


def _check_degree(p: int) -> int:
    if isinstance(p, bool) or int(p) != p or p not in INTERACTIONS:
        raise DegreeError(f"form degree must be one of 0, 1, 2, 3; got {p!r}")
    return int(p)


@dataclass(frozen=True)
class EvolutionaryRelation:
    """``d psi = omega`` with ``omega`` of degree ``p`` on ``chart``.

    ``chart.names[0]`` is the along-trajectory coordinate. For ``p = 0``
    ``omega`` is a single :class:`Expression`. ``provenance`` holds one tag
    per stored coefficient (e.g. ``"energy"`` or ``"force"``).
    """

    chart: Chart
    degree: int
    omega: DifferentialForm | Expression
    provenance: tuple[str, ...] = ()


def build_relation(A, p: int, chart: Chart | Sequence[str],
                   provenance: Sequence[str] = None) -> EvolutionaryRelation:
    """Assemble a relation from its coefficients.

    ``A`` is one expression for ``p = 0``, ``n`` expressions for ``p = 1``,
    and for ``p >= 2`` either a mapping from index tuples to expressions or
    a sequence in increasing-combination order (``(0,1), (0,2), ...``).
    """
    p = _check_degree(p)
    if not isinstance(chart, Chart):
        chart = Chart(tuple(chart))
    n = chart.dimension
    if p == 0:
        if isinstance(A, (list, tuple)):
            if len(A) != 1:
                raise ValueError(f"p = 0 takes a single coefficient, got {len(A)}")
            A = A[0]
        omega = as_expression(A)
        count = 1
    elif p > n:
        raise DegreeError(f"degree {p} exceeds chart dimension {n}")
    elif isinstance(A, Mapping):
        omega = DifferentialForm(chart, p, A)
        count = len(A)
    else:
        combos = list(itertools.combinations(range(n), p))
        if len(A) != len(combos):
            raise ValueError(f"degree {p} on {n} coordinates needs {len(combos)} coefficients, got {len(A)}")
        omega = DifferentialForm(chart, p, dict(zip(combos, A)))
        count = len(combos)

    if provenance is None:
        if p == 1:
            provenance = ("energy",) + ("force",) * (n - 1)
        else:
            provenance = ("unspecified",) * count
    provenance = tuple(provenance)
    if len(provenance) != count:
        raise ValueError(f"need {count} provenance tags, got {len(provenance)}")
    return EvolutionaryRelation(chart, p, omega, provenance)


def nonidentity_measure(rel: EvolutionaryRelation, samples) -> float:
    """Largest commutator entry (``p = 1``) or ``d omega`` coefficient (``p >= 2``)
    over the sample points. Zero means the relation is identical there."""
    if rel.degree == 0:
        raise ValueError("no commutator is defined for a degree-0 relation")
    samples = list(samples)
    if rel.degree == 1:
        return commutator(rel.omega).max_abs(samples)
    d_omega = exterior_derivative(rel.omega)
    worst = 0.0
    for pt in samples:
        vals = d_omega.evaluate(pt).values()
        worst = max(worst, max((abs(v) for v in vals), default=0.0))
    return worst


# ---------------------------------------------------------------------------
# zero loci of determinant functions


def _node_values(D: Expression, chart: Chart, axes: list[np.ndarray]) -> np.ndarray:
    mesh = dict(zip(chart.names, np.meshgrid(*axes, indexing="ij")))
    try:
        return evaluate_array(D, mesh)
    except SingularEvaluationError:
        pass
    shape = tuple(len(a) for a in axes)
    out = np.full(shape, np.nan)
    for idx in np.ndindex(*shape):
        try:
            out[idx] = evaluate(D, {k: float(v[idx]) for k, v in mesh.items()})
        except SingularEvaluationError:
            pass
    return out


def _bisect(f, a: np.ndarray, b: np.ndarray, fa: float, tol: float, max_iter: int = 200):
    """Bisect the segment ``a -> b`` (sign change assumed) until ``|f| <= tol``."""
    for _ in range(max_iter):
        m = 0.5 * (a + b)
        try:
            fm = f(m)
        except SingularEvaluationError:
            return None
        if abs(fm) <= tol:
            return m, fm
        if np.array_equal(m, a) or np.array_equal(m, b):
            return None
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return None


def _newton_polish(D, grads, chart, x, fx, tol, iters=5):
    best = (x, fx)
    for _ in range(iters):
        env = chart.point(x)
        try:
            g = np.array([evaluate(e, env) for e in grads])
        except SingularEvaluationError:
            break
        gg = float(g @ g)
        if gg == 0.0:
            break
        x = x - fx * g / gg
        try:
            fx = evaluate(D, chart.point(x))
        except SingularEvaluationError:
            break
        if abs(fx) < abs(best[1]):
            best = (x, fx)
    return best


def detect_degenerate_loci(D, chart: Chart | Sequence[str], bounds: Sequence[Sequence[float]],
                           resolution: int = 64, tol: float = 1e-6,
                           polish: bool = False) -> np.ndarray:
    """Points of the box where ``|D| <= tol``.

    Nodes of a ``resolution``-per-axis grid already within ``tol`` are kept;
    every grid edge with a sign change is bisected until ``|D| <= tol``.
    Edges straddling a pole never reach ``tol`` and are dropped, so every
    returned point satisfies the tolerance. Returns an ``(m, n)`` array in
    scan order.
    """
    D = as_expression(D)
    if not isinstance(chart, Chart):
        chart = Chart(tuple(chart))
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    if len(bounds) != chart.dimension:
        raise ValueError("need one (lo, hi) pair per chart coordinate")
    axes = [np.linspace(lo, hi, resolution) for lo, hi in bounds]
    vals = _node_values(D, chart, axes)
    shape = vals.shape

    def f(x):
        return evaluate(D, chart.point(x))

    grads = [differentiate(D, n) for n in chart.names] if polish else None
    points = []
    for idx in np.ndindex(*shape):
        v = vals[idx]
        if np.isfinite(v) and abs(v) <= tol:
            points.append((np.array([axes[a][i] for a, i in enumerate(idx)]), v))
    for axis in range(len(shape)):
        for idx in np.ndindex(*shape):
            if idx[axis] + 1 >= shape[axis]:
                continue
            jdx = list(idx)
            jdx[axis] += 1
            jdx = tuple(jdx)
            va, vb = vals[idx], vals[jdx]
            if not (np.isfinite(va) and np.isfinite(vb)):
                continue
            if abs(va) <= tol or abs(vb) <= tol or (va < 0) == (vb < 0):
                continue
            a = np.array([axes[k][i] for k, i in enumerate(idx)])
            b = np.array([axes[k][i] for k, i in enumerate(jdx)])
            hit = _bisect(f, a, b, va, tol)
            if hit is None:
                continue
            if polish:
                hit = _newton_polish(D, grads, chart, hit[0], hit[1], tol)
            points.append(hit)
    if not points:
        return np.empty((0, chart.dimension))
    return np.array([p for p, _ in points])


def write_loci_csv(path, points: np.ndarray, D, chart: Chart) -> None:
    D = as_expression(D)
    rows = ([*pt, abs(evaluate(D, chart.point(pt)))] for pt in points)
    write_csv(path, [*chart.names, "abs_D"], rows)


# ---------------------------------------------------------------------------
# pseudostructures


@dataclass(frozen=True)
class Pseudostructure:
    """Explicit parametrisation ``x^i = phi^i(tau)`` of a ``d``-dimensional set.

    ``parametrization`` has one expression per chart coordinate, written in
    the ``parameters``; ``bounds`` is the parameter box.
    """

    chart: Chart
    parameters: tuple[str, ...]
    parametrization: tuple[Expression, ...]
    bounds: tuple[tuple[float, float], ...] = None
    determinant_function: Expression | None = None

    def __post_init__(self):
        params = tuple(self.parameters)
        maps = tuple(as_expression(m) for m in self.parametrization)
        if not 1 <= len(params) < self.chart.dimension:
            raise ValueError("pseudostructure dimension must satisfy 1 <= d < n")
        if len(maps) != self.chart.dimension:
            raise ValueError(f"need {self.chart.dimension} component expressions, got {len(maps)}")
        for m in maps:
            extra = set(m.free_variables) - set(params)
            if extra:
                raise ValueError(f"parametrization uses unknown parameters {sorted(extra)}")
        object.__setattr__(self, "parameters", params)
        object.__setattr__(self, "parametrization", maps)
        if self.bounds is not None:
            object.__setattr__(self, "bounds", tuple((float(a), float(b)) for a, b in self.bounds))
        if self.determinant_function is not None:
            object.__setattr__(self, "determinant_function", as_expression(self.determinant_function))

    @property
    def dimension(self) -> int:
        return len(self.parameters)

    @property
    def parameter_chart(self) -> Chart:
        return Chart(self.parameters)


@dataclass
class Restriction:
    """Pullback of ``omega`` to a pseudostructure, with its closure record."""

    form: DifferentialForm
    closed: bool
    coefficients: dict[tuple[int, ...], Expression]
    closure_terms: list[Expression] = field(default_factory=list)


def restrict_to_pseudostructure(rel: EvolutionaryRelation, ps: Pseudostructure) -> Restriction:
    if rel.chart != ps.chart:
        raise ValueError("relation and pseudostructure live on different charts")
    if (rel.degree, ps.dimension) not in ((1, 1), (2, 2)):
        raise DegreeError(
            f"restriction needs p = d in {{1, 2}}; got p = {rel.degree}, d = {ps.dimension}"
        )
    form = pullback(rel.omega, ps.parameter_chart, ps.parametrization)
    d_form = exterior_derivative(form)
    # top-degree form: its derivative along any direction off the structure vanishes
    fresh = "_normal"
    while fresh in ps.parameters:
        fresh += "_"
    terms = [differentiate(c, fresh) for c in form.coefficients.values()]
    closed = d_form.is_zero() and all(t.is_zero for t in terms)
    return Restriction(form, closed, dict(form.coefficients), terms)


@dataclass
class StateFunction:
    tau: np.ndarray
    psi: np.ndarray
    error_estimate: float


def _as_line_form(restricted) -> DifferentialForm:
    form = restricted.form if isinstance(restricted, Restriction) else restricted
    if form.degree != 1 or form.chart.dimension != 1:
        raise DegreeError("state extraction needs a 1-form on a 1-dimensional parameter box")
    return form


def extract_state_function(restricted, tau0: float, psi0: float, tau1: float,
                           num: int = 101) -> StateFunction:
    """``psi(tau) = psi0 + int_{tau0}^{tau} a`` on ``num`` uniform samples.

    Each interval uses Simpson's rule with its midpoint; the error estimate
    is the Richardson difference against the rule on halved intervals.
    """
    form = _as_line_form(restricted)
    if num < 2:
        raise ValueError("num must be at least 2")
    tau = np.linspace(tau0, tau1, num)
    a = form.coefficient((0,))
    name = form.chart.names[0]
    if a.is_zero:
        return StateFunction(tau, np.full(num, float(psi0)), 0.0)

    def f(t):
        try:
            return evaluate(a, {name: float(t)})
        except SingularEvaluationError as exc:
            raise SingularEvaluationError(f"singular integrand at {name} = {t!r}: {exc}") from None

    h = np.diff(tau)
    fa = np.array([f(t) for t in tau])
    mids = 0.5 * (tau[:-1] + tau[1:])
    fm = np.array([f(t) for t in mids])
    coarse = h / 6.0 * (fa[:-1] + 4 * fm + fa[1:])
    q1 = np.array([f(t) for t in 0.5 * (tau[:-1] + mids)])
    q3 = np.array([f(t) for t in 0.5 * (mids + tau[1:])])
    fine = h / 12.0 * (fa[:-1] + 4 * q1 + 2 * fm + 4 * q3 + fa[1:])
    psi = float(psi0) + np.concatenate([[0.0], np.cumsum(coarse)])
    err = float(np.sum(np.abs(fine - coarse)) / 15.0)
    return StateFunction(tau, psi, err)


def line_integral(form: DifferentialForm, vertices: Sequence[Sequence[float]],
                  num: int = 65) -> float:
    """Integral of a 1-form along the polygonal path through ``vertices``."""
    if form.degree != 1:
        raise DegreeError("line integrals need a 1-form")
    vertices = np.asarray(vertices, dtype=float)
    s = Expression.variable("s")
    seg_chart = Chart(("s",))
    total = 0.0
    for a, b in zip(vertices[:-1], vertices[1:]):
        maps = [float(ai) + (float(bi) - float(ai)) * s for ai, bi in zip(a, b)]
        seg = pullback(form, seg_chart, maps)
        total += extract_state_function(seg, 0.0, 0.0, 1.0, num).psi[-1]
    return float(total)


def classify_interaction(p: int) -> str:
    return INTERACTIONS[_check_degree(p)]

"""Skew-symmetric differential forms on a coordinate chart.

Forms are stored canonically: one coefficient per strictly increasing
multi-index, with permutation signs applied when the form is built.
Coefficients are either :class:`~formflow.expr.Expression` objects (the
analytic backend) or numpy arrays sampled on a grid. Every operation here
except :func:`exterior_derivative` and :func:`commutator` works for both.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .expr import (
    Add,
    Expression,
    SingularEvaluationError,
    Sub,
    as_expression,
    differentiate,
    evaluate,
    substitute,
)

__all__ = [
    "Chart",
    "DifferentialForm",
    "CommutatorTensor",
    "ClosureReport",
    "ChartMismatchError",
    "DegreeError",
    "permutation_sign",
    "wedge",
    "exterior_derivative",
    "commutator",
    "is_closed",
    "hodge_star",
    "hodge_sign",
    "pullback",
]


class ChartMismatchError(ValueError):
    pass


class DegreeError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    """Ordered coordinate names with a diagonal metric signature."""

    names: tuple[str, ...]
    signature: tuple[int, ...] = None

    def __post_init__(self):
        names = tuple(self.names)
        if isinstance(self.names, str):
            raise TypeError("names must be a sequence of coordinate names")
        if len(names) < 1:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(names)) != len(names):
            raise ValueError(f"coordinate names must be unique: {names}")
        sig = (1,) * len(names) if self.signature is None else tuple(int(s) for s in self.signature)
        if len(sig) != len(names):
            raise ValueError("signature length must equal the number of coordinates")
        if any(s not in (1, -1) for s in sig):
            raise ValueError("signature entries must be +1 or -1")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "signature", sig)

    @classmethod
    def euclidean(cls, *names: str) -> "Chart":
        return cls(names)

    @classmethod
    def minkowski(cls, names: Sequence[str] = ("t", "x", "y", "z")) -> "Chart":
        return cls(tuple(names), (1,) + (-1,) * (len(names) - 1))

    @property
    def dimension(self) -> int:
        return len(self.names)

    def index(self, name: str | int) -> int:
        if isinstance(name, (int, np.integer)):
            if not 0 <= name < self.dimension:
                raise IndexError(f"coordinate index {name} out of range")
            return int(name)
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"{name!r} is not a coordinate of {self.names}") from None

    @property
    def determinant_sign(self) -> int:
        return int(np.prod(self.signature))

    def point(self, values: Sequence[float] | Mapping[str, float]) -> dict[str, float]:
        """Normalise a sample point to a ``{name: value}`` mapping."""
        if isinstance(values, Mapping):
            return {k: float(values[k]) for k in self.names}
        values = np.asarray(values, dtype=float).ravel()
        if values.size != self.dimension:
            raise ValueError(f"expected {self.dimension} coordinates, got {values.size}")
        return dict(zip(self.names, values.tolist()))


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation that sorts ``seq``; 0 if an entry repeats."""
    seq = list(seq)
    if len(set(seq)) != len(seq):
        return 0
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _is_zero_coeff(c) -> bool:
    return isinstance(c, Expression) and c.is_zero


def _coerce_coeff(c):
    if isinstance(c, np.ndarray):
        return np.asarray(c, dtype=float)
    return as_expression(c)


def _scale(c, sign: int):
    if sign == 1:
        return c
    if sign == -1:
        return -c
    raise ValueError(sign)


class DifferentialForm:
    """A degree-``k`` form ``sum_I a_I dx^I`` over ``chart``.

    ``coefficients`` may use any index order and coordinate names or integer
    positions; entries are canonicalised (sorted with sign, repeated indices
    dropped, duplicates summed). Degrees above the chart dimension are
    allowed and are identically zero.
    """

    __slots__ = ("chart", "degree", "coefficients")

    def __init__(self, chart: Chart, degree: int, coefficients: Mapping = None):
        if degree < 0:
            raise DegreeError(f"negative degree {degree}")
        canon: dict[tuple[int, ...], object] = {}
        for idx, c in (coefficients or {}).items():
            if isinstance(idx, (str, int, np.integer)):
                idx = (idx,)
            idx = tuple(chart.index(i) for i in idx)
            if len(idx) != degree:
                raise DegreeError(f"index {idx} does not have length {degree}")
            sign = permutation_sign(idx)
            if sign == 0:
                continue
            c = _coerce_coeff(c)
            key = tuple(sorted(idx))
            c = _scale(c, sign)
            canon[key] = canon[key] + c if key in canon else c
        canon = {k: v for k, v in canon.items() if not _is_zero_coeff(v)}
        if degree == 0 and () not in canon:
            canon[()] = Expression.constant(0.0)
        object.__setattr__(self, "chart", chart)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "coefficients", MappingProxyType(dict(sorted(canon.items()))))

    def __setattr__(self, name, value):
        raise AttributeError("DifferentialForm is immutable")

    # construction helpers
    @classmethod
    def scalar(cls, chart: Chart, f) -> "DifferentialForm":
        return cls(chart, 0, {(): f})

    @classmethod
    def basis(cls, chart: Chart, *names) -> "DifferentialForm":
        """``dx^{i1} ^ ... ^ dx^{ik}`` with unit coefficient."""
        return cls(chart, len(names), {tuple(names): 1.0})

    @classmethod
    def one_form(cls, chart: Chart, coeffs: Sequence) -> "DifferentialForm":
        if len(coeffs) != chart.dimension:
            raise ValueError(f"expected {chart.dimension} coefficients, got {len(coeffs)}")
        return cls(chart, 1, {(i,): c for i, c in enumerate(coeffs)})

    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "DifferentialForm":
        return cls(chart, degree, {})

    @property
    def backend(self) -> str:
        if any(isinstance(c, np.ndarray) for c in self.coefficients.values()):
            return "grid"
        return "analytic"

    def coefficient(self, index) -> object:
        """Coefficient on ``index`` (any order; sign applied). Zero if absent."""
        if isinstance(index, (str, int, np.integer)):
            index = (index,)
        idx = tuple(self.chart.index(i) for i in index)
        sign = permutation_sign(idx)
        key = tuple(sorted(idx))
        if sign == 0 or key not in self.coefficients:
            return Expression.constant(0.0)
        return _scale(self.coefficients[key], sign)

    def is_zero(self) -> bool:
        return all(
            _is_zero_coeff(c) or (isinstance(c, np.ndarray) and not c.any())
            for c in self.coefficients.values()
        )

    def evaluate(self, point) -> dict[tuple[int, ...], float]:
        """Numeric coefficient values at one chart point (analytic backend)."""
        env = self.chart.point(point)
        return {k: evaluate(c, env) for k, c in self.coefficients.items()}

    def components(self) -> list[tuple[int, ...]]:
        return list(itertools.combinations(range(self.chart.dimension), self.degree))

    def map_coefficients(self, fn: Callable) -> "DifferentialForm":
        return DifferentialForm(self.chart, self.degree, {k: fn(c) for k, c in self.coefficients.items()})

    def __eq__(self, other: object) -> bool:
        """Structural equality: same chart, degree and stored coefficients."""
        if not isinstance(other, DifferentialForm):
            return NotImplemented
        if self.chart != other.chart or self.degree != other.degree:
            return False
        if self.coefficients.keys() != other.coefficients.keys():
            return False
        for k, a in self.coefficients.items():
            b = other.coefficients[k]
            if isinstance(a, np.ndarray) and isinstance(b, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif a is not b and (isinstance(a, np.ndarray) or isinstance(b, np.ndarray) or a != b):
                return False
        return True

    __hash__ = None

    def __add__(self, other: "DifferentialForm") -> "DifferentialForm":
        _check_same(self, other)
        if self.degree != other.degree:
            raise DegreeError("cannot add forms of different degree")
        out = dict(self.coefficients)
        for k, c in other.coefficients.items():
            out[k] = out[k] + c if k in out else c
        return DifferentialForm(self.chart, self.degree, out)

    def __neg__(self) -> "DifferentialForm":
        return self.map_coefficients(lambda c: -c)

    def __sub__(self, other: "DifferentialForm") -> "DifferentialForm":
        return self + (-other)

    def __mul__(self, f) -> "DifferentialForm":
        """Multiply every coefficient by a scalar function or number."""
        if not isinstance(f, np.ndarray):
            f = as_expression(f)
        return self.map_coefficients(lambda c: c * f)

    __rmul__ = __mul__

    def __xor__(self, other: "DifferentialForm") -> "DifferentialForm":
        return wedge(self, other)

    def __repr__(self) -> str:
        if self.backend == "grid":
            return f"<DifferentialForm degree={self.degree} grid components={len(self.coefficients)}>"
        terms = []
        for k, c in self.coefficients.items():
            basis = "^".join("d" + self.chart.names[i] for i in k)
            text = f"({c})" if isinstance(c.ast, (Add, Sub)) else str(c)
            terms.append(text + (f" {basis}" if basis else ""))
        return " + ".join(terms) if terms else f"0 (degree {self.degree})"


def _check_same(a: DifferentialForm, b: DifferentialForm) -> None:
    if a.chart != b.chart:
        raise ChartMismatchError(f"chart mismatch: {a.chart.names} vs {b.chart.names}")


def wedge(a: DifferentialForm, b: DifferentialForm) -> DifferentialForm:
    _check_same(a, b)
    out: dict[tuple[int, ...], object] = {}
    for ia, ca in a.coefficients.items():
        for ib, cb in b.coefficients.items():
            idx = ia + ib
            sign = permutation_sign(idx)
            if sign == 0:
                continue
            key = tuple(sorted(idx))
            term = _scale(ca * cb, sign)
            out[key] = out[key] + term if key in out else term
    return DifferentialForm(a.chart, a.degree + b.degree, out)


def _derivative(a: DifferentialForm, partial: Callable[[object, int], object]) -> DifferentialForm:
    """``d`` with a caller-supplied partial derivative of one coefficient."""
    n = a.chart.dimension
    out: dict[tuple[int, ...], object] = {}
    for idx, c in a.coefficients.items():
        for i in range(n):
            if i in idx:
                continue
            dc = partial(c, i)
            if _is_zero_coeff(dc):
                continue
            full = (i,) + idx
            key = tuple(sorted(full))
            term = _scale(dc, permutation_sign(full))
            out[key] = out[key] + term if key in out else term
    return DifferentialForm(a.chart, a.degree + 1, out)


def exterior_derivative(a: DifferentialForm) -> DifferentialForm:
    """Exterior derivative of an analytic form.

    Coefficient variables that are not chart coordinates are treated as
    constants.
    """
    if a.backend != "analytic":
        raise TypeError("exterior_derivative needs Expression coefficients")
    names = a.chart.names
    return _derivative(a, lambda c, i: differentiate(c, names[i]))


@dataclass(frozen=True)
class CommutatorTensor:
    """Antisymmetric matrix ``K[i][j] = d_i p_j - d_j p_i`` (0-based)."""

    chart: Chart
    entries: tuple[tuple[Expression, ...], ...]

    def __getitem__(self, ij) -> Expression:
        i, j = ij
        return self.entries[i][j]

    @property
    def is_zero(self) -> bool:
        """Symbolically zero after the conservative simplification."""
        return all(e.is_zero for row in self.entries for e in row)

    def evaluate(self, point) -> np.ndarray:
        env = self.chart.point(point)
        n = self.chart.dimension
        out = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                out[i, j] = evaluate(self.entries[i][j], env)
                out[j, i] = -out[i, j]
        return out

    def max_abs(self, points: Iterable) -> float:
        return max((float(np.max(np.abs(self.evaluate(p)))) for p in points), default=0.0)


def commutator(theta: DifferentialForm) -> CommutatorTensor:
    if theta.degree != 1:
        raise DegreeError(f"commutator needs a 1-form, got degree {theta.degree}")
    if theta.backend != "analytic":
        raise TypeError("commutator needs Expression coefficients")
    chart = theta.chart
    n = chart.dimension
    p = [theta.coefficient((i,)) for i in range(n)]
    zero = Expression.constant(0.0)
    K = [[zero] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            kij = differentiate(p[j], chart.names[i]) - differentiate(p[i], chart.names[j])
            K[i][j] = kij
            K[j][i] = -kij
    return CommutatorTensor(chart, tuple(tuple(row) for row in K))


@dataclass
class ClosureReport:
    closed: bool
    max_residual: float
    location: dict[str, float] | None
    tolerance: float
    skipped: list[dict[str, float]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.closed


def is_closed(a: DifferentialForm, sample_points: Iterable, tol: float = 1e-10) -> ClosureReport:
    """Sampled closure test: every coefficient of ``d a`` within ``tol``.

    Points where a coefficient is singular are skipped and listed in the
    report rather than aborting the check.
    """
    da = exterior_derivative(a)
    worst, where = 0.0, None
    skipped = []
    for pt in sample_points:
        env = a.chart.point(pt)
        try:
            values = [abs(evaluate(c, env)) for c in da.coefficients.values()]
        except SingularEvaluationError:
            skipped.append(env)
            continue
        r = max(values, default=0.0)
        if where is None or r > worst:
            worst, where = r, env
    return ClosureReport(worst <= tol, worst, where, tol, skipped)


def hodge_sign(chart: Chart, index: Sequence[int]) -> tuple[int, tuple[int, ...]]:
    """Sign and canonical complement for ``*dx^index`` under the fixed convention.

    ``*dx^I = s * sgn(I, J) dx^J`` where ``J`` is the increasing complement of
    ``I``, ``sgn(I, J)`` the parity of the concatenation and ``s`` the product
    of metric signs over ``I``.
    """
    index = tuple(index)
    comp = tuple(i for i in range(chart.dimension) if i not in index)
    s = 1
    for i in index:
        s *= chart.signature[i]
    return s * permutation_sign(index + comp), comp


def hodge_star(a: DifferentialForm) -> DifferentialForm:
    if a.degree > a.chart.dimension:
        return DifferentialForm.zero(a.chart, 0)
    out = {}
    for idx, c in a.coefficients.items():
        sign, comp = hodge_sign(a.chart, idx)
        out[comp] = _scale(c, sign)
    return DifferentialForm(a.chart, a.chart.dimension - a.degree, out)


def _det(rows: list[list[Expression]]) -> Expression:
    k = len(rows)
    total = Expression.constant(0.0)
    for perm in itertools.permutations(range(k)):
        term = Expression.constant(float(permutation_sign(perm)))
        for r, c in enumerate(perm):
            term = term * rows[r][c]
        total = total + term
    return total


def pullback(a: DifferentialForm, target: Chart, mapping: Sequence) -> DifferentialForm:
    """Pull ``a`` back through ``x^i = mapping[i](target coordinates)``.

    ``mapping`` holds one expression per coordinate of ``a.chart``, written in
    the coordinates of ``target``.
    """
    if a.backend != "analytic":
        raise TypeError("pullback needs Expression coefficients")
    if len(mapping) != a.chart.dimension:
        raise ValueError(f"need {a.chart.dimension} component maps, got {len(mapping)}")
    maps = [as_expression(m) for m in mapping]
    subst = dict(zip(a.chart.names, maps))
    jac = [[differentiate(m, t) for t in target.names] for m in maps]
    k = a.degree
    out = {}
    for J in itertools.combinations(range(target.dimension), k):
        total = Expression.constant(0.0)
        for I, c in a.coefficients.items():
            minor = [[jac[i][j] for j in J] for i in I]
            total = total + substitute(c, subst) * _det(minor)
        out[J] = total
    return DifferentialForm(target, k, out)

"""First-order PDEs ``F(x, u, p) = 0``: nonidentity of ``du = p_i dx^i``,
characteristic directions and characteristic strips.

The characteristic system integrated here is::

    dx_i/ds = F_{p_i}
    dp_i/ds = -(F_{x_i} + p_i F_u)
    du/ds   = sum_i p_i F_{p_i}          (strip condition du = p_i dx^i)

with no renormalisation of the parameter ``s``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import Expression, as_expression, differentiate, evaluate
from .forms import Chart, CommutatorTensor, DifferentialForm, commutator
from .io import write_csv

__all__ = [
    "FirstOrderPDE",
    "JetPoint",
    "CharacteristicStrip",
    "StripCertificate",
    "NotAPDEError",
    "StationaryPointError",
    "OffSurfaceError",
    "StripIntegrationError",
    "nonidentity_residual",
    "characteristic_direction",
    "degenerate_condition",
    "integrate_strip",
    "strip_condition_residuals",
    "generalized_solution_certificate",
]


class NotAPDEError(ValueError):
    pass


class StationaryPointError(ArithmeticError):
    """All ``F_{p_i}`` vanish: no integrating direction at this jet point."""


class OffSurfaceError(ValueError):
    pass


class StripIntegrationError(ArithmeticError):
    pass


def _infer_dimension(F: Expression, u: str) -> int:
    n = 0
    for v in F.free_variables:
        m = re.fullmatch(r"[xp]([1-9][0-9]*)", v)
        if m:
            n = max(n, int(m.group(1)))
        elif v != u:
            raise NotAPDEError(f"cannot infer the dimension: unexpected variable {v!r}")
    if n == 0:
        raise NotAPDEError("F does not depend on any derivative p_i")
    return n


class FirstOrderPDE:
    """``F(x^1..x^n, u, p_1..p_n) = 0`` with cached first partials.

    Parameters
    ----------
    F : Expression or str
    coordinates : names of the independent variables (default ``x1..xn``)
    u : name of the unknown
    momenta : names of ``p_i = du/dx^i`` (default ``p1..pn``)
    n : number of independent variables, used when ``coordinates`` is omitted;
        if both are omitted it is the largest ``i`` among ``x<i>``/``p<i>`` in F
    """

    def __init__(self, F, coordinates: Sequence[str] = None, u: str = "u",
                 momenta: Sequence[str] = None, n: int = None):
        self.F = as_expression(F)
        if coordinates is None:
            if n is None:
                n = _infer_dimension(self.F, u)
            coordinates = [f"x{i + 1}" for i in range(n)]
        coordinates = tuple(coordinates)
        n = len(coordinates)
        if momenta is None:
            momenta = [f"p{i + 1}" for i in range(n)]
        momenta = tuple(momenta)
        if len(momenta) != n:
            raise ValueError("need one momentum name per coordinate")
        self.chart = Chart(coordinates)
        self.u = u
        self.momenta = momenta
        declared = set(coordinates) | {u} | set(momenta)
        if len(declared) != 2 * n + 1:
            raise ValueError("coordinate, unknown and momentum names must be distinct")
        extra = set(self.F.free_variables) - declared
        if extra:
            raise NotAPDEError(f"F references undeclared variables {sorted(extra)}")

        self.F_x = tuple(differentiate(self.F, c) for c in coordinates)
        self.F_u = differentiate(self.F, u)
        self.F_p = tuple(differentiate(self.F, m) for m in momenta)
        if all(d.is_zero for d in self.F_p):
            raise NotAPDEError("F does not depend on any derivative p_i")
        self._g_partials = None

    @property
    def n(self) -> int:
        return self.chart.dimension

    @property
    def coordinates(self) -> tuple[str, ...]:
        return self.chart.names

    def env(self, x, u, p) -> dict[str, float]:
        env = dict(zip(self.coordinates, map(float, x)))
        env[self.u] = float(u)
        env.update(zip(self.momenta, map(float, p)))
        return env

    def residual(self, jp: "JetPoint") -> float:
        return evaluate(self.F, self.env(jp.x, jp.u, jp.p))

    def strip_integrand_partials(self):
        """Partials of ``g = sum_i p_i F_{p_i}`` with respect to (x, u, p)."""
        if self._g_partials is None:
            g = Expression.constant(0.0)
            for m, fp in zip(self.momenta, self.F_p):
                g = g + Expression.variable(m) * fp
            self._g_partials = (
                g,
                tuple(differentiate(g, c) for c in self.coordinates),
                differentiate(g, self.u),
                tuple(differentiate(g, m) for m in self.momenta),
            )
        return self._g_partials

    def __repr__(self):
        return f"FirstOrderPDE({str(self.F)!r}, coordinates={self.coordinates})"


@dataclass(frozen=True)
class JetPoint:
    x: np.ndarray
    u: float
    p: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).ravel()
        p = np.asarray(self.p, dtype=float).ravel()
        if x.shape != p.shape:
            raise ValueError("x and p must have the same length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(p)) and np.isfinite(self.u)):
            raise ValueError("jet point entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", float(self.u))


def nonidentity_residual(p_field: Sequence, chart: Chart | Sequence[str]) -> CommutatorTensor:
    """Commutator of ``theta = p_i dx^i``; zero iff the p-field is a differential."""
    if not isinstance(chart, Chart):
        chart = Chart(tuple(chart))
    p_field = [as_expression(p) for p in p_field]
    for p in p_field:
        extra = set(p.free_variables) - set(chart.names)
        if extra:
            raise ValueError(f"p-field may only depend on chart coordinates, found {sorted(extra)}")
    return commutator(DifferentialForm.one_form(chart, p_field))


def _field(pde: FirstOrderPDE, x, u, p):
    env = pde.env(x, u, p)
    fx = np.array([evaluate(e, env) for e in pde.F_x])
    fu = evaluate(pde.F_u, env)
    fp = np.array([evaluate(e, env) for e in pde.F_p])
    dx = fp
    dp = 0.0 - (fx + p * fu)  # avoids -0.0 entries
    du = float(np.dot(p, dx))
    return dx, du, dp


def characteristic_direction(pde: FirstOrderPDE, jp: JetPoint):
    """Integrating direction ``(dx, du, dp)`` at ``jp``."""
    dx, du, dp = _field(pde, jp.x, jp.u, jp.p)
    if not np.any(dx):
        raise StationaryPointError(f"all dF/dp_i vanish at x={jp.x}, u={jp.u}, p={jp.p}")
    return dx, du, dp


def degenerate_condition(pde: FirstOrderPDE, jp: JetPoint, direction) -> float:
    """First homogeneous equation of the closure system along ``direction``.

    ``direction`` is ``(dx, dp)`` or the ``(dx, du, dp)`` triple returned by
    :func:`characteristic_direction`. Zero means the direction lies in the
    degenerate (solvability) locus.
    """
    if len(direction) == 3:
        dx, _, dp = direction
    else:
        dx, dp = direction
    dx = np.asarray(dx, dtype=float)
    dp = np.asarray(dp, dtype=float)
    env = pde.env(jp.x, jp.u, jp.p)
    fu = evaluate(pde.F_u, env)
    total = 0.0
    for i in range(pde.n):
        total += (evaluate(pde.F_x[i], env) + jp.p[i] * fu) * dx[i]
        total += evaluate(pde.F_p[i], env) * dp[i]
    return float(total)


@dataclass
class CharacteristicStrip:
    """Samples ``(x(s), u(s), p(s))`` at ``s = s_k = k * ds``.

    ``strip_residual[k]`` is the strip-condition residual of the step ending
    at sample ``k`` (zero for the first sample).
    """

    ds: float
    s: np.ndarray
    x: np.ndarray
    u: np.ndarray
    p: np.ndarray
    F_residual: np.ndarray = field(default=None)
    strip_residual: np.ndarray = field(default=None)

    def __len__(self) -> int:
        return len(self.s)

    @property
    def samples(self) -> list[JetPoint]:
        return [JetPoint(self.x[k], self.u[k], self.p[k]) for k in range(len(self))]

    @property
    def max_F(self) -> float:
        return float(np.max(np.abs(self.F_residual)))

    @property
    def max_strip_residual(self) -> float:
        return float(np.max(self.strip_residual))

    def endpoint(self) -> JetPoint:
        return JetPoint(self.x[-1], self.u[-1], self.p[-1])

    def csv_header(self) -> list[str]:
        n = self.x.shape[1]
        return (["s"] + [f"x{i + 1}" for i in range(n)] + ["u"]
                + [f"p{i + 1}" for i in range(n)] + ["F_residual", "strip_residual"])

    def csv_rows(self) -> list[list[float]]:
        return [[self.s[k], *self.x[k], self.u[k], *self.p[k],
                 self.F_residual[k], self.strip_residual[k]] for k in range(len(self))]

    def to_csv(self, path) -> None:
        write_csv(path, self.csv_header(), self.csv_rows())


def strip_condition_residuals(pde: FirstOrderPDE, x, u, p, ds: float) -> np.ndarray:
    """Per-step ``|du/ds - p . dx/ds|`` measured from the samples.

    The increment ``u_{k+1} - u_k`` is compared with the integral of
    ``g = p . F_p`` over the step, computed by the corrected trapezoid rule
    ``ds/2 (g_k + g_{k+1}) + ds^2/12 (g'_k - g'_{k+1})`` (error O(ds^5)),
    where ``g'`` is the derivative of ``g`` along the characteristic field.
    """
    g, g_x, g_u, g_p = pde.strip_integrand_partials()
    m = len(u)
    gv = np.empty(m)
    dg = np.empty(m)
    for k in range(m):
        env = pde.env(x[k], u[k], p[k])
        vx, vu, vp = _field(pde, x[k], u[k], p[k])
        gv[k] = evaluate(g, env)
        dg[k] = (
            sum(evaluate(e, env) * v for e, v in zip(g_x, vx))
            + evaluate(g_u, env) * vu
            + sum(evaluate(e, env) * v for e, v in zip(g_p, vp))
        )
    out = np.zeros(m)
    quad = 0.5 * ds * (gv[:-1] + gv[1:]) + ds * ds / 12.0 * (dg[:-1] - dg[1:])
    out[1:] = np.abs(np.diff(u) - quad) / ds
    return out


def _rk4_step(pde, y, ds, n):
    def f(y):
        dx, du, dp = _field(pde, y[:n], y[n], y[n + 1:])
        return np.concatenate([dx, [du], dp])

    k1 = f(y)
    k2 = f(y + 0.5 * ds * k1)
    k3 = f(y + 0.5 * ds * k2)
    k4 = f(y + ds * k3)
    return y + ds / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_strip(pde: FirstOrderPDE, start: JetPoint, ds: float, steps: int,
                    surface_tol: float = 1e-8) -> CharacteristicStrip:
    """Fixed-step RK4 integration of the characteristic system from ``start``."""
    if ds <= 0:
        raise ValueError("ds must be positive")
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if start.x.size != pde.n:
        raise ValueError(f"start point has {start.x.size} coordinates, PDE has {pde.n}")
    f0 = pde.residual(start)
    if abs(f0) > surface_tol:
        raise OffSurfaceError(f"start is off the equation surface: |F| = {abs(f0):.3g}")

    n = pde.n
    ys = np.empty((steps + 1, 2 * n + 1))
    ys[0] = np.concatenate([start.x, [start.u], start.p])
    characteristic_direction(pde, start)
    for k in range(steps):
        y = _rk4_step(pde, ys[k], ds, n)
        if not np.all(np.isfinite(y)):
            raise StripIntegrationError(f"non-finite state after step {k + 1}")
        ys[k + 1] = y
        characteristic_direction(pde, JetPoint(y[:n], y[n], y[n + 1:]))

    x, u, p = ys[:, :n], ys[:, n], ys[:, n + 1:]
    s = ds * np.arange(steps + 1)
    F_res = np.array([evaluate(pde.F, pde.env(x[k], u[k], p[k])) for k in range(steps + 1)])
    return CharacteristicStrip(ds, s, x, u, p, F_res,
                               strip_condition_residuals(pde, x, u, p, ds))


@dataclass
class StripCertificate:
    ok: bool
    max_F: float
    max_strip_residual: float
    tolerance: float

    def __bool__(self):
        return self.ok


def generalized_solution_certificate(strip: CharacteristicStrip, pde: FirstOrderPDE,
                                     tol: float) -> StripCertificate:
    """Recheck ``F = 0`` and ``du = p dx`` along the stored samples."""
    if len(strip) == 0:
        raise ValueError("empty strip")
    F_res = np.array([evaluate(pde.F, pde.env(strip.x[k], strip.u[k], strip.p[k]))
                      for k in range(len(strip))])
    res = strip_condition_residuals(pde, strip.x, strip.u, strip.p, strip.ds)
    max_F = float(np.max(np.abs(F_res)))
    max_s = float(np.max(res))
    return StripCertificate(max_F <= tol and max_s <= tol, max_F, max_s, tol)

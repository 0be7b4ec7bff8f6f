"""Command line front end: ``formflow analyze|validate|version``.

A problem is a UTF-8 JSON document (see README for the schema). ``analyze``
prints a plain-text report and exits with 0 when every verdict passes, 1 when
a verdict fails and 2 on operational errors (bad spec, singular evaluation,
I/O). ``FORMFLOW_SEED`` overrides the seed declared in the spec file.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .charpit import (
    FirstOrderPDE,
    JetPoint,
    StationaryPointError,
    characteristic_direction,
    degenerate_condition,
    generalized_solution_certificate,
    integrate_strip,
    nonidentity_residual,
)
from .evolution import (
    Pseudostructure,
    build_relation,
    classify_interaction,
    detect_degenerate_loci,
    extract_state_function,
    nonidentity_measure,
    restrict_to_pseudostructure,
    write_loci_csv,
)
from .expr import Expression, ExpressionError, ExpressionSyntaxError, parse
from .forms import Chart
from .hamilton import (
    HamiltonianSystem,
    hamilton_jacobi_residual,
    integrate_hamilton,
    poincare_residual,
)
from .io import write_csv
from .maxwell import (
    SpacetimeGrid,
    certify_physical_structure,
    exclusion_mask,
    read_field_csv,
    sample_expressions,
)

KINDS = ("pde-analysis", "characteristics", "hamilton", "maxwell-check", "evolution")

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


class SpecError(ValueError):
    """Schema violation; ``field`` names the offending entry."""

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"schema violation: {field}: {reason}")


@dataclass
class ProblemSpec:
    kind: str
    chart: dict[str, Any]
    expressions: dict[str, Any]
    parameters: dict[str, Any]
    outputs: dict[str, str]
    seed: int
    source: Path | None = None

    def output_path(self, key: str) -> Path | None:
        if key not in self.outputs:
            return None
        p = Path(self.outputs[key])
        if not p.is_absolute() and self.source is not None:
            p = self.source.parent / p
        return p


# ---------------------------------------------------------------------------
# loading and validation


def _parse_expr(text, where: str) -> Expression:
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return Expression.constant(float(text))
    if not isinstance(text, str):
        raise SpecError(where, "expected an expression string")
    try:
        return parse(text)
    except ExpressionSyntaxError as exc:
        raise SpecError(where, f"expression syntax error: {exc}") from None


def _parse_exprs(value, where: str):
    if isinstance(value, list):
        return [_parse_expr(v, f"{where}[{i}]") for i, v in enumerate(value)]
    if isinstance(value, dict):
        return {k: _parse_exprs(v, f"{where}.{k}") for k, v in value.items()}
    return _parse_expr(value, where)


def _number(params, key, where, default=None, positive=False, integer=False, minimum=None):
    if key not in params:
        if default is None:
            raise SpecError(f"{where}.{key}", "required")
        return default
    v = params[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise SpecError(f"{where}.{key}", "expected a finite number")
    if integer and int(v) != v:
        raise SpecError(f"{where}.{key}", "expected an integer")
    if positive and v <= 0:
        reason = "tolerances > 0" if "tol" in key else "must be > 0"
        raise SpecError(f"{where}.{key}", reason)
    if minimum is not None and v < minimum:
        raise SpecError(f"{where}.{key}", f"must be >= {minimum}")
    return int(v) if integer else float(v)


def _bounds(params, key, n, where):
    b = params.get(key)
    if not isinstance(b, list) or len(b) != n or any(
        not isinstance(r, list) or len(r) != 2 or not all(isinstance(x, (int, float)) for x in r)
        or not r[0] < r[1] for r in b
    ):
        raise SpecError(f"{where}.{key}", f"expected {n} [lo, hi] pairs with lo < hi")
    return [(float(lo), float(hi)) for lo, hi in b]


def _vector(value, n, where):
    if not isinstance(value, list) or len(value) != n or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise SpecError(where, f"expected a list of {n} numbers")
    return [float(v) for v in value]


def _names(value, where, count=None):
    if not isinstance(value, list) or not value or not all(isinstance(v, str) and v for v in value):
        raise SpecError(where, "expected a non-empty list of names")
    if len(set(value)) != len(value):
        raise SpecError(where, "names must be unique")
    if count is not None and len(value) != count:
        raise SpecError(where, f"expected {count} names")
    return list(value)


def load_spec(path) -> ProblemSpec:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise SpecError("path", f"file not found: {path}") from None
    try:
        doc = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError:
        raise SpecError("path", "file is not valid UTF-8") from None
    except json.JSONDecodeError as exc:
        raise SpecError("document", f"invalid JSON: {exc}") from None
    spec = spec_from_dict(doc)
    spec.source = path
    return spec


def spec_from_dict(doc: dict) -> ProblemSpec:
    if not isinstance(doc, dict):
        raise SpecError("document", "top level must be a JSON object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise SpecError("kind", f"must be one of {', '.join(KINDS)}")
    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise SpecError("seed", "expected a non-negative integer")
    chart = doc.get("chart", {})
    exprs = doc.get("expressions", {})
    params = doc.get("parameters", {})
    outputs = doc.get("outputs", {})
    for name, v in (("chart", chart), ("expressions", exprs), ("parameters", params), ("outputs", outputs)):
        if not isinstance(v, dict):
            raise SpecError(name, "expected an object")
    for k, v in outputs.items():
        if not isinstance(v, str) or not v:
            raise SpecError(f"outputs.{k}", "expected a file path")
    for k, v in params.items():
        if ("tol" in k) and (isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0):
            raise SpecError(f"parameters.{k}", "tolerances > 0")

    spec = ProblemSpec(kind, dict(chart), _parse_exprs(exprs, "expressions") if exprs else {},
                       dict(params), dict(outputs), seed)
    _VALIDATORS[kind](spec)
    return spec


def _validate_chart(spec, default_signature=True) -> list[str]:
    names = _names(spec.chart.get("coordinates"), "chart.coordinates")
    sig = spec.chart.get("signature")
    if sig is not None:
        if not isinstance(sig, list) or len(sig) != len(names) or any(s not in (1, -1) for s in sig):
            raise SpecError("chart.signature", "expected one +1/-1 entry per coordinate")
    return names


def _require_expr(spec, key):
    if key not in spec.expressions:
        raise SpecError(f"expressions.{key}", "required")
    return spec.expressions[key]


def _v_pde_analysis(spec):
    names = _validate_chart(spec)
    p = _require_expr(spec, "p")
    if not isinstance(p, list) or len(p) != len(names):
        raise SpecError("expressions.p", f"expected {len(names)} component expressions")
    _bounds(spec.parameters, "bounds", len(names), "parameters")
    _number(spec.parameters, "samples", "parameters", 20, positive=True, integer=True)
    if "F" in spec.expressions and not isinstance(spec.expressions["F"], Expression):
        raise SpecError("expressions.F", "expected a single expression")


def _v_characteristics(spec):
    names = _validate_chart(spec)
    if not isinstance(_require_expr(spec, "F"), Expression):
        raise SpecError("expressions.F", "expected a single expression")
    start = spec.parameters.get("start")
    if not isinstance(start, dict):
        raise SpecError("parameters.start", "required object with x, u, p")
    _vector(start.get("x"), len(names), "parameters.start.x")
    _vector(start.get("p"), len(names), "parameters.start.p")
    _number(start, "u", "parameters.start")
    _number(spec.parameters, "ds", "parameters", positive=True)
    _number(spec.parameters, "steps", "parameters", positive=True, integer=True)
    if "momenta" in spec.chart:
        _names(spec.chart["momenta"], "chart.momenta", len(names))


def _v_hamilton(spec):
    q = _names(spec.chart.get("coordinates", ["q"]), "chart.coordinates")
    if "momenta" in spec.chart:
        _names(spec.chart["momenta"], "chart.momenta", len(q))
    if not isinstance(_require_expr(spec, "H"), Expression):
        raise SpecError("expressions.H", "expected a single expression")
    _vector(spec.parameters.get("q0"), len(q), "parameters.q0")
    _vector(spec.parameters.get("p0"), len(q), "parameters.p0")
    _number(spec.parameters, "dt", "parameters", positive=True)
    _number(spec.parameters, "steps", "parameters", positive=True, integer=True)
    if "s" in spec.expressions:
        _bounds(spec.parameters, "hj_bounds", len(q) + 1, "parameters")


def _v_maxwell(spec):
    p = spec.parameters
    if "input_csv" not in p:
        for key in ("E", "B"):
            v = _require_expr(spec, key)
            if not isinstance(v, list) or len(v) != 3:
                raise SpecError(f"expressions.{key}", "expected 3 component expressions")
        _bounds(p, "bounds", 4, "parameters")
        res = p.get("resolutions")
        if not isinstance(res, list) or not res or any(
            isinstance(r, bool) or not isinstance(r, int) or r < 5 for r in res
        ):
            raise SpecError("parameters.resolutions", "resolutions >= 5 required")
    elif not isinstance(p["input_csv"], str):
        raise SpecError("parameters.input_csv", "expected a file path")
    _number(p, "tolerance", "parameters", positive=True)
    if "exclude_radius" in p:
        _number(p, "exclude_radius", "parameters", positive=True)
    if p.get("exclude_norm", "inf") not in ("inf", "2"):
        raise SpecError("parameters.exclude_norm", "must be \"inf\" or \"2\"")
    if "expected_ratio" in p:
        _number(p, "expected_ratio", "parameters", positive=True)


def _v_evolution(spec):
    names = _validate_chart(spec)
    deg = spec.parameters.get("degree", 1)
    if deg not in (0, 1, 2, 3) or isinstance(deg, bool):
        raise SpecError("parameters.degree", "the form degree must be 0, 1, 2 or 3")
    _require_expr(spec, "omega")
    if deg >= 1:
        _bounds(spec.parameters, "bounds", len(names), "parameters")
    ps = spec.chart.get("pseudostructure")
    if ps is not None:
        if not isinstance(ps, dict):
            raise SpecError("chart.pseudostructure", "expected an object")
        params = _names(ps.get("parameters"), "chart.pseudostructure.parameters")
        m = ps.get("map")
        if not isinstance(m, list) or len(m) != len(names):
            raise SpecError("chart.pseudostructure.map", f"expected {len(names)} expressions")
        ps["map"] = _parse_exprs(m, "chart.pseudostructure.map")
        _bounds(ps, "bounds", len(params), "chart.pseudostructure")
    if "determinant" in spec.expressions:
        _number(spec.parameters, "resolution", "parameters", 64, integer=True, minimum=2)


_VALIDATORS = {
    "pde-analysis": _v_pde_analysis,
    "characteristics": _v_characteristics,
    "hamilton": _v_hamilton,
    "maxwell-check": _v_maxwell,
    "evolution": _v_evolution,
}


# ---------------------------------------------------------------------------
# reports


def _fmt(x: float) -> str:
    return f"{x:.6g}"


@dataclass
class Check:
    name: str
    passed: bool | None  # None: informational
    detail: str


@dataclass
class AnalysisReport:
    spec: ProblemSpec
    echo: list[tuple[str, str]] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)
    timing: float | None = None

    def add(self, name, passed, detail):
        self.checks.append(Check(name, passed, detail))

    @property
    def exit_status(self) -> int:
        return EXIT_FAIL if any(c.passed is False for c in self.checks) else EXIT_OK

    def render(self, timing: bool = False) -> str:
        lines = [("kind", self.spec.kind)] + self.echo + [("seed", str(self.spec.seed))]
        for c in self.checks:
            verdict = {True: "PASS", False: "FAIL", None: "INFO"}[c.passed]
            lines.append((f"check {c.name}", f"{verdict}  {c.detail}"))
        for a in self.artifacts:
            lines.append(("wrote", a))
        if timing and self.timing is not None:
            lines.append(("elapsed_s", f"{self.timing:.3f}"))
        lines.append(("exit_status", str(self.exit_status)))
        width = max(len(k) for k, _ in lines)
        return "".join(f"{k.ljust(width)} : {v}\n" for k, v in lines)


class CheckError(RuntimeError):
    def __init__(self, check: str, exc: Exception):
        self.check = check
        super().__init__(f"{check}: {exc}")


def _rng(spec: ProblemSpec) -> np.random.Generator:
    return np.random.default_rng(spec.seed)


def _samples(rng, bounds, count):
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    return lo + (hi - lo) * rng.random((count, len(bounds)))


def _emit(report: AnalysisReport, key: str, header, rows):
    path = report.spec.output_path(key)
    if path is None:
        return
    write_csv(path, header, rows)
    report.artifacts.append(report.spec.outputs[key])


def _run_pde_analysis(spec, report):
    names = spec.chart["coordinates"]
    chart = Chart(tuple(names))
    tol = spec.parameters.get("tolerance", 1e-10)
    pts = _samples(_rng(spec), _bounds(spec.parameters, "bounds", len(names), "parameters"),
                   int(spec.parameters.get("samples", 20)))
    report.echo.append(("p", "(" + ", ".join(str(p) for p in spec.expressions["p"]) + ")"))
    K = nonidentity_residual(spec.expressions["p"], chart)
    per_point = [float(np.max(np.abs(K.evaluate(x)))) for x in pts]
    worst = max(per_point)
    label = "identical" if worst <= tol else "nonidentical"
    report.add("nonidentity", worst <= tol, f"{label}, max |K| {_fmt(worst)} (tol {_fmt(tol)})")
    _emit(report, "csv", [*names, "max_abs_K"], ([*x, k] for x, k in zip(pts, per_point)))

    if "F" in spec.expressions:
        pde = FirstOrderPDE(spec.expressions["F"], coordinates=names,
                            u=spec.chart.get("unknown", "u"), momenta=spec.chart.get("momenta"))
        rng = _rng(spec)
        u_lo, u_hi = spec.parameters.get("u_range", [-1.0, 1.0])
        worst_deg, used = 0.0, 0
        for x in pts:
            p = [float(np.atleast_1d(e(**dict(zip(names, x))))[0]) for e in spec.expressions["p"]]
            jp = JetPoint(x, u_lo + (u_hi - u_lo) * rng.random(), p)
            try:
                direction = characteristic_direction(pde, jp)
            except StationaryPointError:
                continue
            worst_deg = max(worst_deg, abs(degenerate_condition(pde, jp, direction)))
            used += 1
        deg_tol = spec.parameters.get("degenerate_tolerance", 1e-12)
        report.add("degenerate_direction", worst_deg <= deg_tol,
                   f"max residual {_fmt(worst_deg)} over {used} jet points (tol {_fmt(deg_tol)})")


def _run_characteristics(spec, report):
    names = spec.chart["coordinates"]
    pde = FirstOrderPDE(spec.expressions["F"], coordinates=names,
                        u=spec.chart.get("unknown", "u"), momenta=spec.chart.get("momenta"))
    report.echo.append(("F", str(pde.F)))
    st = spec.parameters["start"]
    start = JetPoint(st["x"], st["u"], st["p"])
    ds = float(spec.parameters["ds"])
    steps = int(spec.parameters["steps"])
    tol = spec.parameters.get("tolerance", 1e-8)
    strip = integrate_strip(pde, start, ds, steps)
    cert = generalized_solution_certificate(strip, pde, tol)
    end = strip.endpoint()
    report.add("first_integral", cert.max_F <= tol, f"max |F| {_fmt(cert.max_F)} (tol {_fmt(tol)})")
    report.add("strip_condition", cert.max_strip_residual <= tol,
               f"max residual {_fmt(cert.max_strip_residual)} (tol {_fmt(tol)})")
    report.add("endpoint", None, "x=(" + ", ".join(_fmt(v) for v in end.x) + f") u={_fmt(end.u)} "
               "p=(" + ", ".join(_fmt(v) for v in end.p) + ")")
    path = spec.output_path("csv")
    if path is not None:
        strip.to_csv(path)
        report.artifacts.append(spec.outputs["csv"])


def _run_hamilton(spec, report):
    q = spec.chart.get("coordinates", ["q"])
    sys_ = HamiltonianSystem(spec.expressions["H"], q=q, p=spec.chart.get("momenta"),
                             t=spec.chart.get("time", "t"))
    report.echo.append(("H", str(sys_.H)))
    prm = spec.parameters
    tol = prm.get("tolerance", 1e-6)
    traj = integrate_hamilton(sys_, prm["q0"], prm["p0"], float(prm.get("t0", 0.0)),
                              float(prm["dt"]), int(prm["steps"]))
    drift = traj.energy_drift()
    if sys_.autonomous:
        report.add("energy_drift", drift <= tol, f"{_fmt(drift)} (tol {_fmt(tol)})")
    else:
        report.add("energy_drift", None, f"{_fmt(drift)} (time-dependent H)")
    pr = poincare_residual(sys_, traj)
    report.add("poincare_invariant", pr <= tol, f"max residual {_fmt(pr)} (tol {_fmt(tol)})")
    report.add("action", None, f"S(t_end) - S(t0) = {_fmt(traj.S[-1] - traj.S[0])}")
    if "s" in spec.expressions:
        pts = _samples(_rng(spec), _bounds(prm, "hj_bounds", len(q) + 1, "parameters"),
                       int(prm.get("hj_samples", 20)))
        hj = hamilton_jacobi_residual(sys_, spec.expressions["s"], pts)
        hj_tol = prm.get("hj_tolerance", 1e-10)
        extra = f", skipped {len(hj.skipped)}" if hj.skipped else ""
        report.add("hamilton_jacobi", hj.max_residual <= hj_tol,
                   f"max residual {_fmt(hj.max_residual)} (tol {_fmt(hj_tol)}{extra})")
    path = spec.output_path("csv")
    if path is not None:
        traj.to_csv(path, sys_)
        report.artifacts.append(spec.outputs["csv"])


def _run_maxwell(spec, report):
    prm = spec.parameters
    tol = prm["tolerance"]
    rows = []
    if "input_csv" in prm:
        src = Path(prm["input_csv"])
        if not src.is_absolute() and spec.source is not None:
            src = spec.source.parent / src
        fields = [read_field_csv(src)]
    else:
        E, B = spec.expressions["E"], spec.expressions["B"]
        report.echo.append(("E", "(" + ", ".join(map(str, E)) + ")"))
        report.echo.append(("B", "(" + ", ".join(map(str, B)) + ")"))
        fields = []
        for n in prm["resolutions"]:
            grid = SpacetimeGrid.from_bounds(prm["bounds"], n)
            fields.append(sample_expressions(grid, E, B))
    mask_r = prm.get("exclude_radius")
    norm = prm.get("exclude_norm", "inf")
    results = []
    for f in fields:
        mask = None
        if mask_r is not None:
            mask = exclusion_mask(f.grid, mask_r, norm)
        rep = certify_physical_structure(f, tol, mask)
        results.append((f.grid, rep))
        n = f.grid.shape[1]
        report.add(f"residuals[{n}]", None,
                   f"d theta {_fmt(rep.closed_residual)}, d *theta {_fmt(rep.dual_residual)}")
        rows.append([n, max(f.grid.spacing), rep.closed_residual, rep.dual_residual])
    final = results[-1][1]
    report.add("physical_structure", final.ok,
               f"closed {_fmt(final.closed_residual)}, dual {_fmt(final.dual_residual)} (tol {_fmt(tol)})")
    if len(results) >= 2:
        (_, a), (_, b) = results[-2], results[-1]
        ratios = []
        for x, y in ((a.closed_residual, b.closed_residual), (a.dual_residual, b.dual_residual)):
            ratios.append(x / y if y > 0 else math.inf if x > 0 else math.nan)
        detail = f"closed {_fmt(ratios[0])}, dual {_fmt(ratios[1])}"
        if "expected_ratio" in prm:
            want = prm["expected_ratio"]
            rel = prm.get("ratio_tolerance", 0.2)
            ok = all(math.isfinite(r) and abs(r - want) <= rel * want for r in ratios)
            report.add("convergence_ratio", ok, f"{detail} (expected {_fmt(want)} +/- {_fmt(100 * rel)}%)")
        else:
            report.add("convergence_ratio", None, detail)
    _emit(report, "csv", ["resolution", "h", "closed_residual", "dual_residual"], rows)


def _run_evolution(spec, report):
    names = spec.chart["coordinates"]
    chart = Chart(tuple(names), spec.chart.get("signature"))
    prm = spec.parameters
    p = prm.get("degree", 1)
    omega = spec.expressions["omega"]
    if isinstance(omega, dict):
        omega = {tuple(k.replace(" ", "").split(",")): v for k, v in omega.items()}
    rel = build_relation(omega, p, chart, prm.get("provenance"))
    report.echo.append(("degree", str(p)))
    report.add("interaction", None, classify_interaction(p))
    ps_doc = spec.chart.get("pseudostructure")
    tol = prm.get("tolerance", 1e-10)
    if p >= 1:
        pts = _samples(_rng(spec), _bounds(prm, "bounds", len(names), "parameters"),
                       int(prm.get("samples", 20)))
        measure = nonidentity_measure(rel, pts)
        label = "identical" if measure <= tol else "nonidentical"
        # with a pseudostructure the relation is expected to be nonidentical off it
        verdict = None if ps_doc is not None else measure <= tol
        report.add("relation", verdict, f"{label}, measure {_fmt(measure)}")
    if ps_doc is not None:
        ps = Pseudostructure(chart, tuple(ps_doc["parameters"]), tuple(ps_doc["map"]),
                             ps_doc["bounds"])
        res = restrict_to_pseudostructure(rel, ps)
        coeffs = ", ".join(str(c) for c in res.coefficients.values()) or "0"
        report.add("restriction", res.closed, f"pullback coefficients [{coeffs}]")
        if ps.dimension == 1:
            (t0, t1), = ps.bounds
            sf = extract_state_function(res, t0, float(prm.get("psi0", 0.0)), t1,
                                        int(prm.get("num", 101)))
            report.add("state_function", None,
                       f"psi({_fmt(t1)}) = {_fmt(sf.psi[-1])}, quadrature error {_fmt(sf.error_estimate)}")
            _emit(report, "csv", [ps.parameters[0], "psi"], zip(sf.tau, sf.psi))
    if "determinant" in spec.expressions:
        D = spec.expressions["determinant"]
        ltol = prm.get("locus_tolerance", 1e-6)
        pts = detect_degenerate_loci(D, chart, _bounds(prm, "bounds", len(names), "parameters"),
                                     int(prm.get("resolution", 64)), ltol)
        report.add("degenerate_loci", None, f"{len(pts)} points with |D| <= {_fmt(ltol)}")
        path = spec.output_path("loci_csv")
        if path is not None:
            write_loci_csv(path, pts, D, chart)
            report.artifacts.append(spec.outputs["loci_csv"])


_RUNNERS = {
    "pde-analysis": _run_pde_analysis,
    "characteristics": _run_characteristics,
    "hamilton": _run_hamilton,
    "maxwell-check": _run_maxwell,
    "evolution": _run_evolution,
}


def run(spec: ProblemSpec) -> AnalysisReport:
    report = AnalysisReport(spec)
    if spec.source is not None:
        report.echo.append(("spec", spec.source.name))
    if "coordinates" in spec.chart:
        report.echo.append(("chart", ", ".join(spec.chart["coordinates"])))
    t0 = time.perf_counter()
    try:
        _RUNNERS[spec.kind](spec, report)
    except (SpecError, CheckError):
        raise
    except (ExpressionError, ArithmeticError, ValueError, OSError) as exc:
        raise CheckError(spec.kind, exc) from exc
    report.timing = time.perf_counter() - t0
    return report


def _apply_env_seed(spec: ProblemSpec) -> None:
    env = os.environ.get("FORMFLOW_SEED")
    if env is None:
        return
    try:
        seed = int(env)
    except ValueError:
        raise SpecError("FORMFLOW_SEED", "expected a non-negative integer") from None
    if seed < 0:
        raise SpecError("FORMFLOW_SEED", "expected a non-negative integer")
    spec.seed = seed


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="formflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", help="run the analysis described by a spec file")
    a.add_argument("spec")
    a.add_argument("--timing", action="store_true", help="append elapsed time to the report")
    v = sub.add_parser("validate", help="check a spec file without running it")
    v.add_argument("spec")
    sub.add_parser("version", help="print the package version")
    args = parser.parse_args(argv)

    if args.command == "version":
        print(f"formflow {__version__}")
        return EXIT_OK
    try:
        spec = load_spec(args.spec)
        _apply_env_seed(spec)
        if args.command == "validate":
            print(f"valid {spec.kind} spec: {Path(args.spec).name}")
            return EXIT_OK
        report = run(spec)
    except (SpecError, CheckError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    sys.stdout.write(report.render(timing=args.timing))
    return report.exit_status


if __name__ == "__main__":
    sys.exit(main())

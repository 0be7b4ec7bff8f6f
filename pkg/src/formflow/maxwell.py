"""Closure checks ``d theta = 0`` and ``d *theta = 0`` for a sampled field
strength 2-form on a uniform 4-D spacetime grid (c = 1, no sources).

Component convention::

    F_tx = E_x   F_ty = E_y   F_tz = E_z
    F_xy = -B_z  F_xz = B_y   F_yz = -B_x

Derivatives are second-order central differences; residual maxima are taken
over interior nodes only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .expr import as_expression, evaluate_array
from .forms import Chart, DifferentialForm, _derivative, hodge_star
from .io import write_csv

__all__ = [
    "SpacetimeGrid",
    "FieldStrength2Form",
    "ClosureResiduals",
    "PhysicalStructureReport",
    "COMPONENTS",
    "assemble_from_EB",
    "closure_residuals",
    "exclusion_mask",
    "certify_physical_structure",
    "sample_expressions",
    "read_field_csv",
    "write_field_csv",
]

AXES = ("t", "x", "y", "z")
MINKOWSKI = Chart.minkowski(AXES)
COMPONENTS = ("tx", "ty", "tz", "xy", "xz", "yz")
FIELD_COLUMNS = ("Ex", "Ey", "Ez", "Bx", "By", "Bz")


@dataclass(frozen=True)
class SpacetimeGrid:
    """Uniform node grid; node ``i`` on axis ``a`` sits at ``origin[a] + i*spacing[a]``."""

    origin: tuple[float, float, float, float]
    spacing: tuple[float, float, float, float]
    shape: tuple[int, int, int, int]
    signature: tuple[int, int, int, int] = (1, -1, -1, -1)

    def __post_init__(self):
        for name in ("origin", "spacing", "shape"):
            if len(getattr(self, name)) != 4:
                raise ValueError(f"{name} needs 4 entries (t, x, y, z)")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "spacing", tuple(float(v) for v in self.spacing))
        object.__setattr__(self, "shape", tuple(int(v) for v in self.shape))
        if any(h <= 0 for h in self.spacing):
            raise ValueError("grid spacings must be positive")
        if any(n < 5 for n in self.shape):
            raise ValueError("need at least 5 nodes per axis")

    @classmethod
    def from_bounds(cls, bounds: Sequence[Sequence[float]], shape, endpoint: bool = False):
        """Grid over ``[lo, hi)`` per axis (``[lo, hi]`` with ``endpoint=True``)."""
        if np.isscalar(shape):
            shape = (int(shape),) * 4
        spacing = []
        for (lo, hi), n in zip(bounds, shape):
            spacing.append((hi - lo) / ((n - 1) if endpoint else n))
        return cls(tuple(b[0] for b in bounds), tuple(spacing), tuple(shape))

    @property
    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(n) for o, h, n in zip(self.origin, self.spacing, self.shape)]

    def mesh(self) -> dict[str, np.ndarray]:
        return dict(zip(AXES, np.meshgrid(*self.axes, indexing="ij")))

    def node(self, index) -> dict[str, float]:
        return {a: o + h * i for a, o, h, i in zip(AXES, self.origin, self.spacing, index)}


class FieldStrength2Form:
    """Six independent components ``F_{mu nu}`` (``mu < nu``) sampled on a grid."""

    def __init__(self, grid: SpacetimeGrid, components: Mapping[str, np.ndarray]):
        missing = set(COMPONENTS) - set(components)
        if missing:
            raise ValueError(f"missing components {sorted(missing)}")
        comps = {}
        for key in COMPONENTS:
            arr = np.asarray(components[key], dtype=float)
            if arr.shape != grid.shape:
                raise ValueError(f"component F_{key} has shape {arr.shape}, grid is {grid.shape}")
            comps[key] = arr
        self.grid = grid
        self.components = comps

    def __getitem__(self, key: str) -> np.ndarray:
        return self.components[key]

    def as_form(self) -> DifferentialForm:
        return DifferentialForm(MINKOWSKI, 2, {(k[0], k[1]): v for k, v in self.components.items()})

    @classmethod
    def from_form(cls, grid: SpacetimeGrid, form: DifferentialForm) -> "FieldStrength2Form":
        comps = {}
        for key in COMPONENTS:
            c = form.coefficient((key[0], key[1]))
            comps[key] = c if isinstance(c, np.ndarray) else np.zeros(grid.shape)
        return cls(grid, comps)

    def electric(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        c = self.components
        return c["tx"], c["ty"], c["tz"]

    def magnetic(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        c = self.components
        return -c["yz"], c["xz"], -c["xy"]


def assemble_from_EB(grid: SpacetimeGrid, E: Sequence[np.ndarray], B: Sequence[np.ndarray]
                     ) -> FieldStrength2Form:
    if len(E) != 3 or len(B) != 3:
        raise ValueError("E and B need three components each")
    E = [np.broadcast_to(np.asarray(e, dtype=float), grid.shape) if np.ndim(e) == 0 else np.asarray(e, dtype=float) for e in E]
    B = [np.broadcast_to(np.asarray(b, dtype=float), grid.shape) if np.ndim(b) == 0 else np.asarray(b, dtype=float) for b in B]
    for a in (*E, *B):
        if a.shape != grid.shape:
            raise ValueError(f"field array shape {a.shape} does not match grid {grid.shape}")
    return FieldStrength2Form(grid, {
        "tx": E[0], "ty": E[1], "tz": E[2],
        "xy": -B[2], "xz": B[1], "yz": -B[0],
    })


def _central(grid: SpacetimeGrid):
    interior = (slice(1, -1),) * 4

    def partial(arr, axis):
        hi = list(interior)
        lo = list(interior)
        hi[axis] = slice(2, None)
        lo[axis] = slice(None, -2)
        return (arr[tuple(hi)] - arr[tuple(lo)]) / (2.0 * grid.spacing[axis])

    return partial


def _interior_mask(mask: np.ndarray | None, shape) -> np.ndarray:
    """Interior nodes whose whole central stencil lies inside ``mask``."""
    inner = tuple(n - 2 for n in shape)
    if mask is None:
        return np.ones(inner, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != tuple(shape):
        raise ValueError("mask shape must match the grid")
    out = mask[(slice(1, -1),) * 4].copy()
    for axis in range(4):
        for sl in (slice(2, None), slice(None, -2)):
            idx = [slice(1, -1)] * 4
            idx[axis] = sl
            out &= mask[tuple(idx)]
    return out


def exclusion_mask(grid: SpacetimeGrid, radius: float, norm: str = "inf",
                   center=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Mask removing a spatial ball of ``radius`` around ``center``.

    With ``norm="inf"`` (a cube) the mask is widened by one spatial step so
    that, after stencil erosion, the counted nodes are exactly those with
    ``max(|x|, |y|, |z|) >= radius``: the same physical region on every
    grid, which keeps convergence ratios clean. ``norm="2"`` keeps nodes
    with Euclidean distance ``>= radius`` before erosion.
    """
    m = grid.mesh()
    d = [m[a] - c for a, c in zip(("x", "y", "z"), center)]
    if norm == "inf":
        dist = np.maximum(np.maximum(np.abs(d[0]), np.abs(d[1])), np.abs(d[2]))
        h = max(grid.spacing[1:])
        return dist >= radius - h - 1e-9 * h
    if norm == "2":
        return np.sqrt(d[0] ** 2 + d[1] ** 2 + d[2] ** 2) >= radius
    raise ValueError(f"norm must be 'inf' or '2', got {norm!r}")


def _max_abs(form: DifferentialForm, keep: np.ndarray) -> tuple[float, tuple | None]:
    worst, where = 0.0, None
    for c in form.coefficients.values():
        if not isinstance(c, np.ndarray):
            continue
        a = np.where(keep, np.abs(c), 0.0)
        if a.size == 0 or not keep.any():
            continue
        k = np.unravel_index(int(np.argmax(a)), a.shape)
        if where is None or a[k] > worst:
            worst, where = float(a[k]), tuple(int(i) + 1 for i in k)
    return worst, where


class ClosureResiduals(NamedTuple):
    closed: float
    dual: float


def _residuals(f: FieldStrength2Form, mask=None):
    partial = _central(f.grid)
    theta = f.as_form()
    keep = _interior_mask(mask, f.grid.shape)
    d_theta = _derivative(theta, partial)
    d_star = _derivative(hodge_star(theta), partial)
    return _max_abs(d_theta, keep), _max_abs(d_star, keep)


def closure_residuals(f: FieldStrength2Form, mask: np.ndarray = None) -> ClosureResiduals:
    """``(max|d theta|, max|d *theta|)`` over interior nodes.

    ``mask`` (boolean, grid-shaped) marks retained nodes; an interior node
    counts only if its full stencil is retained.
    """
    (a, _), (b, _) = _residuals(f, mask)
    return ClosureResiduals(a, b)


@dataclass
class PhysicalStructureReport:
    ok: bool
    closed_residual: float
    dual_residual: float
    closed_worst_node: dict[str, float] | None
    dual_worst_node: dict[str, float] | None
    tolerance: float

    def __bool__(self):
        return self.ok


def certify_physical_structure(f: FieldStrength2Form, tol: float, mask=None) -> PhysicalStructureReport:
    """Both closure residuals within ``tol``."""
    (a, ia), (b, ib) = _residuals(f, mask)
    node = lambda i: None if i is None else f.grid.node(i)
    return PhysicalStructureReport(a <= tol and b <= tol, a, b, node(ia), node(ib), tol)


def sample_expressions(grid: SpacetimeGrid, E: Sequence, B: Sequence) -> FieldStrength2Form:
    """Sample E and B given as expressions in ``t, x, y, z``."""
    mesh = grid.mesh()
    def sample(e):
        e = as_expression(e)
        extra = set(e.free_variables) - set(AXES)
        if extra:
            raise ValueError(f"field expression uses non-spacetime variables {sorted(extra)}")
        return evaluate_array(e, mesh)
    return assemble_from_EB(grid, [sample(e) for e in E], [sample(b) for b in B])


def _uniform_axis(values: np.ndarray, name: str) -> tuple[float, float, int]:
    vals = np.unique(values)
    if vals.size < 5:
        raise ValueError(f"axis {name} has {vals.size} distinct values, need >= 5")
    steps = np.diff(vals)
    h = float(steps.mean())
    if not np.allclose(steps, h, rtol=1e-9, atol=1e-12 * max(1.0, abs(vals).max())):
        raise ValueError(f"axis {name} is not uniformly spaced")
    return float(vals[0]), h, vals.size


def read_field_csv(path) -> FieldStrength2Form:
    """Read node-per-row CSV ``t,x,y,z,Ex,Ey,Ez,Bx,By,Bz`` (header required)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = AXES + FIELD_COLUMNS
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in cols):
            raise ValueError(f"CSV header must contain {', '.join(cols)}")
        data = np.array([[float(row[c]) for c in cols] for row in reader])
    if data.size == 0:
        raise ValueError("CSV contains no nodes")
    axes = [_uniform_axis(data[:, a], AXES[a]) for a in range(4)]
    grid = SpacetimeGrid(tuple(a[0] for a in axes), tuple(a[1] for a in axes), tuple(a[2] for a in axes))
    idx = tuple(np.rint((data[:, a] - axes[a][0]) / axes[a][1]).astype(int) for a in range(4))
    filled = np.zeros(grid.shape, dtype=int)
    np.add.at(filled, idx, 1)
    if not np.all(filled == 1):
        raise ValueError("CSV must list every grid node exactly once")
    fields = []
    for j in range(6):
        arr = np.empty(grid.shape)
        arr[idx] = data[:, 4 + j]
        fields.append(arr)
    return assemble_from_EB(grid, fields[:3], fields[3:])


def write_field_csv(path, f: FieldStrength2Form) -> None:
    mesh = f.grid.mesh()
    cols = [mesh[a].ravel() for a in AXES] + [c.ravel() for c in (*f.electric(), *f.magnetic())]
    write_csv(path, AXES + FIELD_COLUMNS, zip(*cols))

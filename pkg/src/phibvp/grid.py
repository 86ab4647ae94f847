"""Meshes, nodal grid functions, quadrature, and discrete norms on [0, T].

The quadrature rule is composite trapezoid.  Meshes may flag singular
nodes (points where an integrand such as 1/k blows up); cells belonging
to the geometrically graded block around a singular node are integrated
with the midpoint rule instead, so the integrand is never sampled at the
singular point itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidInputError, MeshMismatchError

TRAPEZOID = 0
MIDPOINT = 1

# Nodal stand-in for an unbounded envelope value; excluded from norms.
SENTINEL = 1.0e30

_SNAP = 1e-12


def _as_float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError("expected a one-dimensional array")
    return arr


@dataclass(frozen=True, eq=False)
class Mesh:
    """Partition 0 = t_0 < t_1 < ... < t_n = T with per-cell quadrature rules.

    cell_rule[j] applies to the cell [t_j, t_{j+1}]; singular_indices lists
    the nodes where an integrand is allowed to be undefined.
    """

    nodes: np.ndarray
    singular_indices: tuple[int, ...] = ()
    cell_rule: np.ndarray | None = None
    grading: str = "uniform"

    def __post_init__(self):
        nodes = _as_float_array(self.nodes)
        if nodes.size < 3:
            raise InvalidInputError("mesh needs at least 2 cells")
        if not np.all(np.isfinite(nodes)):
            raise InvalidInputError("mesh nodes must be finite")
        if nodes[0] != 0.0:
            raise InvalidInputError("mesh must start at t = 0")
        if np.any(np.diff(nodes) <= 0):
            raise InvalidInputError("mesh nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        for i in self.singular_indices:
            if not 0 <= i < nodes.size:
                raise InvalidInputError(f"singular index {i} out of range")
        if self.cell_rule is None:
            rule = np.zeros(nodes.size - 1, dtype=np.int8)
            for i in self.singular_indices:
                if i > 0:
                    rule[i - 1] = MIDPOINT
                if i < nodes.size - 1:
                    rule[i] = MIDPOINT
            object.__setattr__(self, "cell_rule", rule)
        else:
            rule = np.asarray(self.cell_rule, dtype=np.int8)
            if rule.shape != (nodes.size - 1,):
                raise InvalidInputError("cell_rule length must equal cell count")
            object.__setattr__(self, "cell_rule", rule)

    # -- construction ------------------------------------------------------

    @staticmethod
    def uniform(T: float, n: int, singular_points: Sequence[float] = ()) -> "Mesh":
        if not (T > 0 and math.isfinite(T)):
            raise InvalidInputError("T must be positive and finite")
        if n < 2:
            raise InvalidInputError("need at least 2 cells")
        nodes = np.linspace(0.0, T, n + 1)
        nodes[0], nodes[-1] = 0.0, T
        sing = _locate_singular(nodes, singular_points)
        return Mesh(nodes, singular_indices=sing, grading="uniform")

    @staticmethod
    def graded(
        T: float,
        n: int,
        singular_points: Sequence[float],
        ratio: float = 0.7,
        graded_cells: int = 32,
    ) -> "Mesh":
        """Uniform mesh with geometric grading toward each singular point.

        Each singular point gets a block of graded_cells cells on every
        adjacent side; cell widths shrink by the given ratio toward the
        point.  The block width is chosen so the largest graded cell
        matches the uniform cell width, which keeps the composite error
        balanced between the graded and uniform regions.
        """
        if not (T > 0 and math.isfinite(T)):
            raise InvalidInputError("T must be positive and finite")
        if not 0.0 < ratio < 1.0:
            raise InvalidInputError("grading ratio must lie in (0, 1)")
        if graded_cells < 2:
            raise InvalidInputError("need at least 2 graded cells")
        points = sorted(set(float(p) for p in singular_points))
        if not points:
            return Mesh.uniform(T, n)
        for p in points:
            if not 0.0 <= p <= T:
                raise InvalidInputError(f"singular point {p} outside [0, T]")

        sides = []  # (point, direction): grading extends from point toward direction
        for p in points:
            if p > 0.0:
                sides.append((p, -1))
            if p < T:
                sides.append((p, +1))
        m = graded_cells
        n_uniform = n - m * len(sides)
        if n_uniform < 2 * max(1, len(points)):
            raise InvalidInputError(
                f"mesh with {n} cells is too coarse for {len(sides)} graded blocks "
                f"of {m} cells"
            )
        # Largest graded cell has width W*(1-ratio); equate it with h.
        h = T / (n_uniform + len(sides) / (1.0 - ratio))
        W = h / (1.0 - ratio)

        windows = []
        for p, direction in sides:
            a, b = (p, p + W) if direction > 0 else (p - W, p)
            windows.append((a, b, p, direction))
        windows.sort()
        bounds = [0.0] + [w[0] for w in windows] + [w[1] for w in windows] + [T]
        bounds = sorted(set(bounds))
        for (a1, b1, _, _), (a2, b2, _, _) in zip(windows, windows[1:]):
            if b1 > a2:
                raise InvalidInputError("graded blocks overlap; refine the mesh")
        for a, b, _, _ in windows:
            if a < -_SNAP or b > T + _SNAP:
                raise InvalidInputError("graded block leaves [0, T]; refine the mesh")

        # Complement segments get the uniform cells, largest-remainder rounding.
        segments = []
        cursor = 0.0
        for a, b, p, direction in windows:
            if a > cursor + _SNAP:
                segments.append((cursor, a))
            cursor = b
        if cursor < T - _SNAP:
            segments.append((cursor, T))
        lengths = np.array([b - a for a, b in segments])
        raw = lengths / h
        counts = np.maximum(1, np.floor(raw).astype(int))
        while counts.sum() < n_uniform:
            counts[np.argmax(raw - counts)] += 1
        while counts.sum() > n_uniform:
            adjustable = counts > 1
            idx = np.argmin(np.where(adjustable, raw - counts, np.inf))
            counts[idx] -= 1

        pieces = []  # (nodes_without_last, is_graded)
        parts = []
        for (a, b), c in zip(segments, counts):
            parts.append((a, np.linspace(a, b, c + 1), False))
        for a, b, p, direction in windows:
            offs = W * ratio ** np.arange(m - 1, 0, -1)
            if direction > 0:
                inner = p + offs
            else:
                inner = p - offs[::-1]
            win_nodes = np.concatenate([[a], inner, [b]])
            parts.append((a, win_nodes, True))
        parts.sort(key=lambda item: item[0])

        nodes = [0.0]
        rules = []
        for _, seg_nodes, graded in parts:
            seg_nodes = np.asarray(seg_nodes, dtype=float)
            rules.extend([MIDPOINT if graded else TRAPEZOID] * (seg_nodes.size - 1))
            nodes.extend(seg_nodes[1:].tolist())
        nodes = np.array(nodes)
        nodes[-1] = T
        # snap singular points onto their nodes exactly
        for p in points:
            i = int(np.argmin(np.abs(nodes - p)))
            nodes[i] = p
        sing = _locate_singular(nodes, points)
        return Mesh(
            nodes,
            singular_indices=sing,
            cell_rule=np.array(rules, dtype=np.int8),
            grading="geometric",
        )

    def refine(self, factor: int) -> "Mesh":
        """Split every cell into `factor` equal subcells, keeping rules and flags."""
        if factor < 1:
            raise InvalidInputError("refinement factor must be >= 1")
        if factor == 1:
            return self
        left = self.nodes[:-1]
        h = np.diff(self.nodes)
        sub = left[:, None] + h[:, None] * (np.arange(factor) / factor)[None, :]
        nodes = np.append(sub.reshape(-1), self.nodes[-1])
        rule = np.repeat(self.cell_rule, factor)
        sing = tuple(i * factor for i in self.singular_indices)
        return Mesh(nodes, singular_indices=sing, cell_rule=rule, grading=self.grading)

    # -- geometry ----------------------------------------------------------

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def n_cells(self) -> int:
        return self.nodes.size - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def singular_mask(self) -> np.ndarray:
        mask = np.zeros(self.nodes.size, dtype=bool)
        for i in self.singular_indices:
            mask[i] = True
        return mask


def _locate_singular(nodes: np.ndarray, points: Sequence[float]) -> tuple[int, ...]:
    out = []
    scale = max(1.0, abs(nodes[-1]))
    for p in points:
        i = int(np.argmin(np.abs(nodes - p)))
        if abs(nodes[i] - p) > _SNAP * scale:
            raise InvalidInputError(f"singular point {p} does not coincide with a node")
        out.append(i)
    return tuple(sorted(out))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values on a mesh, with an optional pointwise evaluator.

    The evaluator, when present, supplies values at cell midpoints for the
    midpoint-rule cells next to singular nodes; without it those cells fall
    back to the finite endpoint (or the endpoint mean away from flags).
    """

    mesh: Mesh
    values: np.ndarray
    evaluator: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        vals = _as_float_array(self.values)
        if vals.shape != self.mesh.nodes.shape:
            raise InvalidInputError("values length must equal node count")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("grid function values must be finite")
        object.__setattr__(self, "values", vals)

    @staticmethod
    def from_callable(
        mesh: Mesh, fn: Callable, fill: float = 0.0, keep_evaluator: bool = True
    ) -> "GridFunction":
        """Sample fn at the nodes; flagged singular nodes get `fill` instead."""
        with np.errstate(all="ignore"):
            vals = np.asarray(fn(mesh.nodes), dtype=float)
        if vals.shape == ():
            vals = np.full(mesh.nodes.shape, float(vals))
        mask = mesh.singular_mask()
        vals = np.where(mask, fill, vals)
        if not np.all(np.isfinite(vals)):
            bad = int(np.argmax(~np.isfinite(vals)))
            raise InvalidInputError(
                f"callable produced non-finite value at node {bad} (t={mesh.nodes[bad]!r})"
            )
        return GridFunction(mesh, vals, evaluator=fn if keep_evaluator else None)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.mesh, values, evaluator=self.evaluator)

    def interp(self, t) -> np.ndarray:
        """Piecewise-linear interpolation of the nodal values."""
        return np.interp(t, self.mesh.nodes, self.values)


def same_mesh(a: GridFunction, b: GridFunction) -> Mesh:
    if a.mesh is b.mesh or np.array_equal(a.mesh.nodes, b.mesh.nodes):
        return a.mesh
    raise MeshMismatchError("grid functions live on different meshes")


def _cell_contributions(g: GridFunction) -> np.ndarray:
    mesh = g.mesh
    v = g.values
    h = mesh.widths
    contrib = 0.5 * h * (v[:-1] + v[1:])
    mid_cells = np.nonzero(mesh.cell_rule == MIDPOINT)[0]
    if mid_cells.size:
        if g.evaluator is not None:
            with np.errstate(all="ignore"):
                mids = np.asarray(g.evaluator(mesh.midpoints[mid_cells]), dtype=float)
            if mids.shape == ():
                mids = np.full(mid_cells.shape, float(mids))
            if not np.all(np.isfinite(mids)):
                bad = int(np.argmax(~np.isfinite(mids)))
                raise InvalidInputError(
                    "evaluator produced non-finite midpoint value near "
                    f"t={mesh.midpoints[mid_cells[bad]]!r}"
                )
        else:
            sing = mesh.singular_mask()
            lo, hi = v[mid_cells], v[mid_cells + 1]
            lo_bad = sing[mid_cells]
            hi_bad = sing[mid_cells + 1]
            mids = 0.5 * (lo + hi)
            mids = np.where(lo_bad, hi, mids)
            mids = np.where(hi_bad, lo, mids)
        contrib[mid_cells] = h[mid_cells] * mids
    return contrib


def cumulative_integral(g: GridFunction) -> GridFunction:
    """Running integral G(t_j) = integral of g over [0, t_j], G(0) = 0."""
    contrib = _cell_contributions(g)
    out = np.empty(g.values.size)
    out[0] = 0.0
    np.cumsum(contrib, out=out[1:])
    return GridFunction(g.mesh, out)


def integrate(g: GridFunction) -> float:
    """Integral of g over [0, T]; equals the last cumulative value exactly."""
    return float(cumulative_integral(g).values[-1])


@dataclass(frozen=True)
class NormSpec:
    """Which norm to take: a finite exponent p >= 1 or math.inf for sup."""

    p: float = 1.0

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise InvalidInputError("norm exponent must satisfy p >= 1")


def norm(g: GridFunction, spec: NormSpec | float = 1.0) -> float:
    """L^p norm via the mesh quadrature, or the nodal sup for p = inf.

    Flagged singular nodes never contribute: the sup skips them and the
    quadrature cells around them use midpoint sampling.
    """
    p = spec.p if isinstance(spec, NormSpec) else float(NormSpec(spec).p)
    if math.isinf(p):
        mask = ~g.mesh.singular_mask()
        return float(np.max(np.abs(g.values[mask])))
    ev = g.evaluator
    powered = GridFunction(
        g.mesh,
        np.abs(g.values) ** p,
        evaluator=(None if ev is None else (lambda t: np.abs(ev(t)) ** p)),
    )
    total = integrate(powered)
    return float(total ** (1.0 / p))


def forward_difference_residual(u: GridFunction, rhs: GridFunction) -> float:
    """Max defect of the cell-slope of u against the midpoint average of rhs.

    Cells touching a flagged singular node are skipped (the data there is
    a placeholder by convention).
    """
    mesh = same_mesh(u, rhs)
    h = mesh.widths
    slope = np.diff(u.values) / h
    midrhs = 0.5 * (rhs.values[:-1] + rhs.values[1:])
    defect = np.abs(slope - midrhs)
    keep = np.ones(defect.size, dtype=bool)
    for i in mesh.singular_indices:
        if i > 0:
            keep[i - 1] = False
        if i < defect.size:
            keep[i] = False
    if not np.any(keep):
        raise InvalidInputError("no admissible cells for the residual")
    return float(np.max(defect[keep]))

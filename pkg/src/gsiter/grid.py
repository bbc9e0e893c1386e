"""Radial grids on [0, r_max] and panel-aware quadrature primitives.

Grids are split into panels at user-declared breakpoints (points where an
integrand may lose smoothness, e.g. a potential-step radius). Nodes are
uniform within each panel and every breakpoint is an exact node, so the
composite rules below keep their full (4th) order on each smooth piece.

All integrals are assembled from per-interval increments of a single
moving-cubic rule, so the total, the two cumulative integrals, and the
charge accumulation downstream are exactly consistent with one another.
Integrands that carry a genuine jump at a breakpoint store the one-sided
limit from the left in ``GridFunction.left_values``; quadrature uses the
value interior to each panel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "RadialGrid",
    "GridFunction",
    "build_grid",
    "integrate",
    "cumulative_from_zero",
    "cumulative_from_tail",
]


@dataclass(frozen=True)
class RadialGrid:
    """Nodes 0 = r_0 < r_1 < ... < r_M = r_max with panel breakpoints."""

    dimension: int
    nodes: np.ndarray
    breakpoints: tuple[float, ...]
    panel_edges: tuple[int, ...]  # node indices bounding each uniform panel

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        object.__setattr__(self, "nodes", nodes)
        if self.dimension < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dimension}")
        if nodes.ndim != 1 or nodes.size < 17:
            raise ValueError("grid needs at least 17 nodes")
        if nodes[0] != 0.0:
            raise ValueError("first node must be exactly 0")
        if not np.isfinite(nodes[-1]) or nodes[-1] <= 0.0:
            raise ValueError("r_max must be finite and positive")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        for b in self.breakpoints:
            if not np.any(nodes == b):
                raise ValueError(f"breakpoint {b} does not coincide with a node")
        edges = self.panel_edges
        if edges[0] != 0 or edges[-1] != nodes.size - 1 or any(
            e2 <= e1 for e1, e2 in zip(edges, edges[1:])
        ):
            raise ValueError("malformed panel edges")

    @property
    def r_max(self) -> float:
        return float(self.nodes[-1])

    @property
    def node_count(self) -> int:
        return int(self.nodes.size)

    def panels(self):
        """Yield (i0, i1) node-index bounds of each uniform panel."""
        for i0, i1 in zip(self.panel_edges, self.panel_edges[1:]):
            yield int(i0), int(i1)

    def index_of(self, r: float) -> int:
        """Index of the node equal to r (raises if r is not a node)."""
        i = int(np.searchsorted(self.nodes, r))
        if i < self.nodes.size and self.nodes[i] == r:
            return i
        raise ValueError(f"{r} is not a grid node")


@dataclass
class GridFunction:
    """Samples of a function on a RadialGrid.

    If ``log_scale`` is set the samples are the natural log of a strictly
    positive function (``-inf`` marks an exact zero of that function).
    ``left_values`` holds one-sided limits from below at jump nodes; the
    plain ``values`` entry at such a node is the limit from above.
    """

    grid: RadialGrid
    values: np.ndarray
    log_scale: bool = False
    left_values: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.node_count,):
            raise ValueError("values length must equal node count")

    def linear_values(self) -> np.ndarray:
        """Samples of the represented function on a linear scale."""
        return np.exp(self.values) if self.log_scale else self.values

    def panel_values(self, i0: int, i1: int) -> np.ndarray:
        """Values on nodes [i0, i1] with the right end taken from the left."""
        v = self.values[i0 : i1 + 1].copy()
        if i1 in self.left_values:
            v[-1] = self.left_values[i1]
        return v


def build_grid(dimension, r_max, node_count, breakpoints=()) -> RadialGrid:
    """Uniform-per-panel grid on [0, r_max] with breakpoints as exact nodes.

    The actual node count may exceed the request slightly: every panel gets
    an even, >= 2 number of intervals so the composite Simpson rule never
    straddles a breakpoint.
    """
    if not np.isfinite(r_max) or r_max <= 0.0:
        raise ValueError(f"r_max must be positive and finite, got {r_max}")
    if node_count < 17:
        raise ValueError(f"node_count must be at least 17, got {node_count}")
    bps = sorted(set(float(b) for b in breakpoints))
    for b in bps:
        if not (0.0 < b < r_max):
            raise ValueError(f"breakpoint {b} outside (0, {r_max})")
    edges = np.array([0.0] + bps + [float(r_max)])
    lengths = np.diff(edges)
    total_intervals = node_count - 1
    per_panel = []
    for L in lengths:
        n = int(round(total_intervals * L / r_max))
        n = max(n, 2)
        if n % 2:
            n += 1
        per_panel.append(n)

    nodes = [np.array([0.0])]
    panel_edge_idx = [0]
    for (a, b), n in zip(zip(edges, edges[1:]), per_panel):
        seg = np.linspace(a, b, n + 1)[1:]
        seg[-1] = b  # breakpoints and r_max exact
        nodes.append(seg)
        panel_edge_idx.append(panel_edge_idx[-1] + n)
    all_nodes = np.concatenate(nodes)
    return RadialGrid(
        dimension=int(dimension),
        nodes=all_nodes,
        breakpoints=tuple(bps),
        panel_edges=tuple(panel_edge_idx),
    )


# integral of the cubic through a 4-node uniform window over its 1st, 2nd,
# 3rd interval (units of the spacing); shared by every quadrature in the
# package so that energy averages, displacement accumulation and cumulative
# integrals are built from identical per-interval increments
CUBIC_INTERVAL_W = np.array(
    [
        [9.0, 19.0, -5.0, 1.0],
        [-1.0, 13.0, 13.0, -1.0],
        [1.0, -5.0, 19.0, 9.0],
    ]
) / 24.0


def _panel_increments(h: float, v: np.ndarray) -> np.ndarray:
    """Per-interval integrals on a uniform panel, 4th order for >= 3 intervals.

    Interval k integrates the cubic through the 4-node window around it
    (one-sided at the panel edges). Two-interval panels fall back to the
    parabola split of a Simpson pair, single intervals to the trapezoid.
    """
    n = v.size - 1
    inc = np.empty(n)
    if n == 1:
        inc[0] = 0.5 * h * (v[0] + v[1])
        return inc
    if n == 2:
        inc[0] = h / 12.0 * (5.0 * v[0] + 8.0 * v[1] - v[2])
        inc[1] = h / 12.0 * (-v[0] + 8.0 * v[1] + 5.0 * v[2])
        return inc
    k = np.arange(n)
    j0 = np.clip(k - 1, 0, n - 3)
    windows = v[j0[:, None] + np.arange(4)]
    inc[:] = h * np.einsum("ij,ij->i", CUBIC_INTERVAL_W[k - j0], windows)
    return inc


def interval_increments(f: GridFunction) -> np.ndarray:
    """Integral of f over every grid interval (panel-aware, jump-aware)."""
    vals = f.linear_values() if f.log_scale else f.values
    inc = np.empty(f.grid.node_count - 1)
    for i0, i1 in f.grid.panels():
        v = vals[i0 : i1 + 1].copy()
        if (not f.log_scale) and i1 in f.left_values:
            v[-1] = f.left_values[i1]
        h = (f.grid.nodes[i1] - f.grid.nodes[i0]) / (i1 - i0)
        inc[i0:i1] = _panel_increments(h, v)
    return inc


def _kahan_cumsum(inc: np.ndarray) -> np.ndarray:
    """Compensated running sum; deterministic left-to-right order."""
    out = np.empty(inc.size)
    s = 0.0
    c = 0.0
    for i in range(inc.size):
        y = inc[i] - c
        t = s + y
        c = (t - s) - y
        s = t
        out[i] = s
    return out


def integrate(f: GridFunction) -> float:
    """Integral of f over [0, r_max]; composite Simpson within panels."""
    return math.fsum(interval_increments(f))


def cumulative_from_zero(f: GridFunction) -> GridFunction:
    """F with F(r_i) = integral of f over [0, r_i]; F(0) = 0 exactly."""
    inc = interval_increments(f)
    out = np.empty(f.grid.node_count)
    out[0] = 0.0
    out[1:] = _kahan_cumsum(inc)
    return GridFunction(f.grid, out)


def cumulative_from_tail(f: GridFunction) -> GridFunction:
    """F with F(r_i) = integral of f over [r_i, r_max]; F(r_max) = 0 exactly."""
    inc = interval_increments(f)
    out = np.empty(f.grid.node_count)
    out[-1] = 0.0
    out[:-1] = _kahan_cumsum(inc[::-1])[::-1]
    return GridFunction(f.grid, out)

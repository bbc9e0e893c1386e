"""Trial-function construction.

A trial is the pair (phi, h): a strictly positive reference state phi,
stored in log-space, whose induced potential differs from the physical one
by the perturbation h(r) >= 0, together with the reference energy E0 that
makes (T + V + h - E0) phi = 0.

The quartic double-well trial glues the two large-coupling branches so the
result is even with a flat derivative at the origin; its h is positive,
piecewise decreasing, with a single downward jump at the matching radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import GridFunction, RadialGrid, cumulative_from_zero

__all__ = [
    "ProblemSpec",
    "TrialFunction",
    "DefectReport",
    "quartic_problem",
    "harmonic_problem",
    "quartic_S0",
    "quartic_log_branch",
    "quartic_h_extra",
    "quartic_trial",
    "harmonic_trial",
    "hj_expansion_1d",
    "perturbative_energy_quartic",
    "QUARTIC_SERIES_COEFFS",
    "verify_trial",
]

# Asymptotic ground-energy series of the symmetric quartic double well:
# E ~ g*a - 1/(4 a^2) - (9/64)/(g a^5) - (89/512)/(g^2 a^8) - ...
QUARTIC_SERIES_COEFFS = (1.0, -1.0 / 4.0, -9.0 / 64.0, -89.0 / 512.0)


@dataclass(frozen=True)
class ProblemSpec:
    """A radially symmetric problem: dimension, potential, parameter record."""

    dimension: int
    potential: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)


def quartic_problem(g: float, a: float = 1.0) -> ProblemSpec:
    """Double well V(x) = (1/2) g^2 (x^2 - a^2)^2 in one dimension."""
    g, a = float(g), float(a)
    return ProblemSpec(1, lambda x: 0.5 * g**2 * (np.asarray(x) ** 2 - a**2) ** 2, {"g": g, "a": a})


def harmonic_problem(g: float, dimension: int = 1) -> ProblemSpec:
    """Isotropic oscillator V(r) = (1/2) g^2 r^2."""
    g = float(g)
    return ProblemSpec(int(dimension), lambda r: 0.5 * g**2 * np.asarray(r) ** 2, {"g": g})


@dataclass
class TrialFunction:
    """The pair (phi, h) with reference energy E0; phi is log-scale."""

    phi: GridFunction
    h: GridFunction
    E0: float
    h_breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        if not self.phi.log_scale:
            raise ValueError("phi must be stored in log-space")
        if self.phi.grid is not self.h.grid:
            raise ValueError("phi and h must share a grid")

    @property
    def h0(self) -> float:
        return float(self.h.values[0])


def quartic_S0(x, a: float = 1.0):
    """Leading action of the quartic well: (1/3)(x - a)^2 (x + 2a)."""
    x = np.asarray(x, dtype=float)
    return (x - a) ** 2 * (x + 2.0 * a) / 3.0


def quartic_log_branch(x, g: float, branch: str):
    """log of one analytic branch of the glued quartic trial.

    "inner" is the symmetrized two-term combination used on [0, 1];
    "outer" the rescaled decaying branch used beyond 1. Both are smooth
    functions of x wherever evaluated, which makes one-sided derivative
    checks at the matching point exact.
    """
    x = np.asarray(x, dtype=float)
    g = float(g)
    c = (g - 1.0) / (g + 1.0)
    S0 = quartic_S0(x)
    log_plus = math.log(2.0) - np.log1p(x) - g * S0
    if branch == "inner":
        return log_plus + np.log1p(c * np.exp(2.0 * g * S0 - 4.0 * g / 3.0))
    if branch == "outer":
        return log_plus + math.log1p(c * math.exp(-4.0 * g / 3.0))
    raise ValueError("branch must be 'inner' or 'outer'")


def quartic_h_extra(x, g: float):
    """The positive part of the quartic h above 1/(1+x)^2, for x < 1."""
    x = np.asarray(x, dtype=float)
    g = float(g)
    e = np.exp(2.0 * g * quartic_S0(x) - 4.0 * g / 3.0)
    return 2.0 * g * (g - 1.0) * e / ((g + 1.0) + (g - 1.0) * e)


def quartic_trial(g: float, grid: RadialGrid) -> TrialFunction:
    """Glued two-branch trial for the symmetric quartic well (a = 1).

    phi is continuous with continuous derivative at the matching point x=1
    and flat at the origin; h = 1/(1+x)^2 plus a positive piece that drops
    to zero across x=1. Requires g > 1 (the positive piece changes sign
    otherwise) and a grid node exactly at 1.
    """
    g = float(g)
    if g <= 1.0:
        raise ValueError(f"quartic trial needs g > 1, got {g}")
    j = grid.index_of(1.0)
    if 1.0 not in grid.breakpoints:
        raise ValueError("grid must carry a breakpoint at x = 1")
    x = grid.nodes
    inner = x <= 1.0
    log_phi = np.empty_like(x)
    log_phi[inner] = quartic_log_branch(x[inner], g, "inner")
    log_phi[~inner] = quartic_log_branch(x[~inner], g, "outer")
    phi = GridFunction(grid, log_phi, log_scale=True)

    u = 1.0 / (1.0 + x) ** 2
    h_vals = u.copy()
    lo = x < 1.0
    h_vals[lo] += quartic_h_extra(x[lo], g)
    h_left = float(u[j] + quartic_h_extra(1.0, g))
    h = GridFunction(grid, h_vals, left_values={j: h_left})
    return TrialFunction(phi, h, E0=g, h_breakpoints=(1.0,))


def harmonic_trial(g: float, grid: RadialGrid, dimension: int = 1) -> TrialFunction:
    """Exact oscillator ground state as a trial: h vanishes identically."""
    g = float(g)
    if g <= 0.0:
        raise ValueError("harmonic trial needs g > 0")
    log_phi = -0.5 * g * grid.nodes**2
    phi = GridFunction(grid, log_phi, log_scale=True)
    h = GridFunction(grid, np.zeros_like(grid.nodes))
    return TrialFunction(phi, h, E0=0.5 * dimension * g)


def _quadratic_minimum_coeffs(v, t_fit: float):
    """Fit v(t)/t^2 near 0; returns (omega, beta, gamma) of sqrt(2v) = t(omega + beta t + gamma t^2 + ...)."""
    ts = np.linspace(t_fit / 80.0, t_fit, 80)
    q = np.asarray(v(ts), dtype=float) / ts**2
    coef = np.polynomial.polynomial.polyfit(ts, q, 6)
    v2, v3, v4 = 2.0 * coef[0], 6.0 * coef[1], 24.0 * coef[2]
    if v2 <= 1e-10:
        raise ValueError("degenerate minimum: v''(0) vanishes")
    omega = math.sqrt(v2)
    beta = v3 / (6.0 * omega)
    gamma = (v4 / 12.0 - beta**2) / (2.0 * omega)
    return omega, beta, gamma


def hj_expansion_1d(v, grid: RadialGrid, order: int = 1):
    """Large-coupling expansion on the half line for v >= 0 with v(0) = 0.

    Returns (S0, S1, E0, E1) where S0(x) is the zero-energy action integral
    of sqrt(2v) from the origin, E0 = half the curvature of S0 there, and
    (for order 1) S1 solves the transport equation along the axis with E1
    fixed by analyticity at the origin. order=0 returns (S0, None, E0, None).
    """
    if order not in (0, 1):
        raise ValueError("order must be 0 or 1")
    x = grid.nodes
    vx = np.asarray(v(x), dtype=float)
    if np.min(vx) < -1e-12 * max(1.0, float(np.max(np.abs(vx)))):
        raise ValueError("v must be non-negative on the grid")
    if abs(vx[0]) > 1e-12:
        raise ValueError("v(0) must vanish")

    t_fit = min(0.25, grid.r_max / 4.0)
    omega, beta, gamma = _quadratic_minimum_coeffs(v, t_fit)
    E0 = 0.5 * omega

    w = np.sqrt(2.0 * np.clip(vx, 0.0, None))
    S0 = cumulative_from_zero(GridFunction(grid, w))
    if order == 0:
        return S0, None, E0, None

    E1 = 0.75 * gamma / omega - beta**2 / omega**2

    # transport integrand (w'/2 - E0)/w; series near the origin, smooth finite
    # differences of the callable elsewhere
    integrand = np.empty_like(x)
    small = x < t_fit
    ts = x[small]
    p = np.array([omega, beta, gamma])
    pt = p[0] + p[1] * ts + p[2] * ts**2
    dpt = p[1] + 2.0 * p[2] * ts
    with np.errstate(invalid="ignore", divide="ignore"):
        integrand[small] = np.where(
            ts > 0.0, (0.5 * (pt + ts * dpt) - E0) / (ts * pt), beta / omega
        )
    xb = x[~small]
    d = 1e-4
    wfun = lambda t: np.sqrt(2.0 * np.asarray(v(t), dtype=float))
    wprime = (8.0 * (wfun(xb + d) - wfun(xb - d)) - (wfun(xb + 2 * d) - wfun(xb - 2 * d))) / (12.0 * d)
    integrand[~small] = (0.5 * wprime - E0) / w[~small]
    S1 = cumulative_from_zero(GridFunction(grid, integrand))
    return S0, S1, E0, E1


def perturbative_energy_quartic(g: float, a: float, order: int = 4) -> list[float]:
    """Partial sums of the asymptotic quartic series (guidance, not ground truth)."""
    if not 1 <= order <= 4:
        raise ValueError("order must be in 1..4")
    if g <= 0.0 or a <= 0.0:
        raise ValueError("g and a must be positive")
    terms = [
        QUARTIC_SERIES_COEFFS[0] * g * a,
        QUARTIC_SERIES_COEFFS[1] / a**2,
        QUARTIC_SERIES_COEFFS[2] / (g * a**5),
        QUARTIC_SERIES_COEFFS[3] / (g**2 * a**8),
    ]
    sums = np.cumsum(terms[:order])
    return [float(s) for s in sums]


@dataclass
class DefectReport:
    """Max-norm of the discrete eigen-defect away from breakpoints."""

    max_defect: float
    panel_defects: list[tuple[int, int, float]]  # (i0, i1, max over panel interior)


def verify_trial(trial: TrialFunction, problem: ProblemSpec, grid: RadialGrid) -> DefectReport:
    """Second-order finite-difference check that (T + V + h - E0) phi is small."""
    if trial.phi.grid is not grid:
        raise ValueError("trial and grid must match")
    phi = trial.phi.linear_values()
    V = np.asarray(problem.potential(grid.nodes), dtype=float)
    W = V + trial.h.values - trial.E0
    panel_defects = []
    worst = 0.0
    for i0, i1 in grid.panels():
        if i1 - i0 < 2:
            continue
        h_step = (grid.nodes[i1] - grid.nodes[i0]) / (i1 - i0)
        s = slice(i0 + 1, i1)
        lap = (phi[s.start - 1 : s.stop - 1] - 2.0 * phi[s] + phi[s.start + 1 : s.stop + 1]) / h_step**2
        defect = -0.5 * lap + W[s] * phi[s]
        m = float(np.max(np.abs(defect)))
        panel_defects.append((i0, i1, m))
        worst = max(worst, m)
    return DefectReport(worst, panel_defects)

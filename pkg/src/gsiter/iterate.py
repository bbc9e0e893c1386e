"""The core iteration: energy averages, displacement field, ratio updates.

Each step maps the previous ratio f_{n-1} to an energy shift calE_n (a
weighted average of h), a displacement field D_n (the cumulative signed
charge), and a new ratio f_n whose slope is -2 D_n / chi^2 with the
additive constant fixed by the boundary case:

    Case A:  f_n(r_max) = 1   (monotone ascending calE_n, upper bounds)
    Case B:  f_n(0) = 1       (odd/even interleaving, two-sided bounds)

All weights chi^2 = r^{N-1} phi^2 are handled in log-space: for the hard
benchmark potentials phi^2 underflows double precision long before the
grid ends, while the ratio D/chi^2 that drives f stays O(1/r^2). The
displacement is therefore accumulated in the scaled variable
t = 2 D / chi^2 with per-interval increments anchored at the local weight,
and D itself is returned as a log-scale GridFunction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .grid import (
    CUBIC_INTERVAL_W,
    GridFunction,
    RadialGrid,
    cumulative_from_tail,
    cumulative_from_zero,
    integrate,
)
from .trial import TrialFunction

__all__ = [
    "CaseBViolation",
    "IterationState",
    "RunReport",
    "chi",
    "weighted_moment",
    "energy_step",
    "displacement",
    "f_step",
    "crossing_point",
    "iterate_ground",
    "action_functional",
    "fixed_point_residual",
    "rho_field",
]

LN2 = math.log(2.0)
# per-interval drop of log(chi^2) beyond which the exponentially fitted
# rule replaces the polynomial stencil
EXP_SWITCH = -0.5


class CaseBViolation(RuntimeError):
    """Case-B positivity violation: f_n dropped to zero or below."""

    def __init__(self, n: int | None = None, fmin: float = math.nan):
        self.n = n
        self.fmin = fmin
        at = f" at n={n}" if n is not None else ""
        super().__init__(f"Case-B positivity violation{at}: min f = {fmin:g}")


@dataclass
class IterationState:
    n: int
    f: GridFunction
    calE: float
    D: GridFunction  # log-scale
    r_n: float
    case: str
    charge_residual: float
    split_mismatch: float  # relative disagreement of the two D forms at r_n


@dataclass
class RunReport:
    case: str
    E0: float
    tol: float
    states: list[IterationState]
    converged: bool
    violations: list[str] = field(default_factory=list)

    @property
    def final_calE(self) -> float:
        return self.states[-1].calE if self.states else math.nan

    @property
    def final_E(self) -> float:
        return self.E0 - self.final_calE

    def energies(self) -> list[float]:
        return [s.calE for s in self.states]

    def records(self) -> list[dict]:
        out = []
        for s in self.states:
            out.append(
                {
                    "n": s.n,
                    "calE": s.calE,
                    "E": self.E0 - s.calE,
                    "charge_residual": s.charge_residual,
                    "f_min": float(np.min(s.f.values)),
                    "f_max": float(np.max(s.f.values)),
                    "r_n": s.r_n,
                }
            )
        return out


def chi(trial: TrialFunction, grid: RadialGrid) -> GridFunction:
    """log of chi = r^{(N-1)/2} phi; chi(0) = 0 for dimension > 1."""
    logphi = trial.phi.values
    if grid.dimension == 1:
        return GridFunction(grid, logphi.copy(), log_scale=True)
    with np.errstate(divide="ignore"):
        logr = np.log(grid.nodes)
    return GridFunction(grid, 0.5 * (grid.dimension - 1) * logr + logphi, log_scale=True)


def _weight(chi_gf: GridFunction) -> np.ndarray:
    return np.exp(2.0 * chi_gf.values)


def weighted_moment(F: GridFunction, chi_gf: GridFunction) -> float:
    """[F] = integral of chi^2 F dr, expanding the log weight per node."""
    w = _weight(chi_gf)
    lefts = {i: w[i] * v for i, v in F.left_values.items()}
    return integrate(GridFunction(F.grid, w * F.values, left_values=lefts))


def rho_field(f_prev: GridFunction, h: GridFunction, calE: float, chi_gf: GridFunction) -> GridFunction:
    """Charge density rho = (h - calE) chi^2 f_{n-1} (jump-aware)."""
    w = _weight(chi_gf)
    vals = (h.values - calE) * w * f_prev.values
    lefts = {i: (v - calE) * w[i] * f_prev.values[i] for i, v in h.left_values.items()}
    return GridFunction(h.grid, vals, left_values=lefts)


def energy_step(f_prev: GridFunction, h: GridFunction, chi_gf: GridFunction) -> float:
    """calE_n = [h f_{n-1}] / [f_{n-1}]; makes the total charge vanish."""
    w = _weight(chi_gf) * f_prev.values
    den = integrate(GridFunction(h.grid, w))
    if not np.isfinite(den) or den <= 0.0:
        raise ValueError(f"degenerate weight [f] = {den:g}; cannot form the energy average")
    lefts = {i: w[i] * v for i, v in h.left_values.items()}
    num = integrate(GridFunction(h.grid, w * h.values, left_values=lefts))
    return num / den


def _panel_arrays(grid: RadialGrid, c: np.ndarray, c_left: dict[int, float], i0: int, i1: int):
    cp = c[i0 : i1 + 1].copy()
    if i1 in c_left:
        cp[-1] = c_left[i1]
    h_step = (grid.nodes[i1] - grid.nodes[i0]) / (i1 - i0)
    return cp, h_step


def _anchored_increments(
    grid: RadialGrid,
    G: np.ndarray,
    c: np.ndarray,
    c_left: dict[int, float],
    lo: int,
    hi: int,
    side: str,
) -> np.ndarray:
    """Per-interval integrals of c(z) e^{G(z)}, divided by the anchor weight.

    For interval k (nodes k..k+1) the anchor is e^{G_k} (side="left") or
    e^{G_{k+1}} (side="right"). Intervals with a strong log-weight drop use
    the exponentially fitted trapezoid (exact for linear c under exponential
    weight); the rest use a cubic stencil on locally rescaled values, so no
    intermediate ever under- or overflows. Near an exact zero of the weight
    (log-weight -inf, a power-law zero rather than an exponential tail) the
    polynomial stencil is always used. Only intervals [lo, hi) are computed.
    """
    out = np.zeros(hi - lo)
    for i0, i1 in grid.panels():
        k0, k1 = max(lo, i0), min(hi, i1)
        if k0 >= k1:
            continue
        cp, h_step = _panel_arrays(grid, c, c_left, i0, i1)
        Gp = G[i0 : i1 + 1]
        inf_idx = np.nonzero(~np.isfinite(Gp))[0]
        for k in range(k0, k1):
            a = k - i0  # local interval index
            s = Gp[a + 1] - Gp[a]
            near_zero = inf_idx.size > 0 and np.min(np.abs(inf_idx - a)) <= 12
            if np.isfinite(s) and s <= EXP_SWITCH and not near_zero:
                if side == "left":
                    A = np.expm1(s) / s
                    B = ((s - 1.0) * math.exp(s) + 1.0) / s**2
                else:
                    A = -np.expm1(-s) / s
                    B = ((s - 1.0) + math.exp(-s)) / s**2
                val = h_step * (cp[a] * A + (cp[a + 1] - cp[a]) * B)
            else:
                if i1 - i0 >= 3:
                    j0 = min(max(a - 1, 0), i1 - i0 - 3)
                    w4 = _CUBIC_W[a - j0]
                    win = slice(j0, j0 + 4)
                else:
                    j0 = 0
                    win = slice(0, i1 - i0 + 1)
                    if i1 - i0 == 2:
                        w4 = (
                            np.array([5.0, 8.0, -1.0]) / 12.0
                            if a == 0
                            else np.array([-1.0, 8.0, 5.0]) / 12.0
                        )
                    else:
                        w4 = np.array([0.5, 0.5])
                Gw = Gp[win]
                m = float(np.max(Gw))
                anchor = Gp[a] if side == "left" else Gp[a + 1]
                vals = cp[win] * np.exp(Gw - m)
                val = h_step * float(np.dot(w4, vals)) * math.exp(min(m - anchor, 700.0))
            out[k - lo] = val
    return out


def _crossing_index(h: GridFunction, calE: float) -> int:
    """First node where h (approached from above) is at or below calE."""
    neg = np.nonzero(h.values - calE <= 0.0)[0]
    return int(neg[0]) if neg.size else h.grid.node_count - 1


def _slope_field(
    f_prev: GridFunction, h: GridFunction, calE: float, chi_gf: GridFunction
) -> tuple[np.ndarray, int, float]:
    """Scaled slope t = 2 D / chi^2 at every node, plus split diagnostics.

    D is accumulated from r=0 below the crossing radius and from r_max
    above it, so each side adds only same-sign charge; the two forms are
    compared where they meet.
    """
    grid = h.grid
    G = 2.0 * chi_gf.values
    c = (h.values - calE) * f_prev.values
    c_left = {i: (v - calE) * f_prev.values[i] for i, v in h.left_values.items()}
    M = grid.node_count - 1
    i_n = _crossing_index(h, calE)

    t = np.zeros(grid.node_count)

    up_val = 0.0
    if i_n > 0:
        b = _anchored_increments(grid, G, c, c_left, 0, i_n, "right")
        for i in range(1, i_n + 1):
            r = math.exp(min(G[i - 1] - G[i], 700.0)) if np.isfinite(G[i]) else 0.0
            up_val = up_val * r + 2.0 * b[i - 1]
            if i < i_n:
                t[i] = up_val

    dn_val = 0.0
    a = _anchored_increments(grid, G, c, c_left, i_n, M, "left")
    for i in range(M - 1, i_n - 1, -1):
        r = math.exp(min(G[i + 1] - G[i], 700.0)) if np.isfinite(G[i]) else 0.0
        dn_val = dn_val * r - 2.0 * a[i - i_n]
        t[i] = dn_val

    scale = float(np.max(np.abs(t))) if t.size else 0.0
    mismatch = abs(up_val - t[i_n]) / scale if (i_n > 0 and scale > 0.0) else 0.0
    tmin = float(np.min(t))
    if tmin < -1e-12 * max(scale, 1e-300):
        raise ValueError(
            f"negative displacement field (min scaled slope {tmin:g}); "
            "the previous ratio has lost positivity"
        )
    np.clip(t, 0.0, None, out=t)
    return t, i_n, mismatch


def displacement(
    f_prev: GridFunction, h: GridFunction, calE: float, chi_gf: GridFunction
) -> GridFunction:
    """Displacement field D_n >= 0 as a log-scale GridFunction.

    Endpoint values are exact zeros (log -inf); interior positivity follows
    from f_{n-1} > 0 and the single sign change of h - calE.
    """
    t, _, mismatch = _slope_field(f_prev, h, calE, chi_gf)
    if mismatch > 1e-6:
        raise RuntimeError(
            f"the two cumulative forms of D disagree by {mismatch:.3e} at the crossing; "
            "calE is inconsistent with the zero-total-charge condition"
        )
    G = 2.0 * chi_gf.values
    with np.errstate(divide="ignore"):
        logD = np.where(t > 0.0, np.log(np.maximum(t, 1e-300)) - LN2 + G, -np.inf)
    return GridFunction(h.grid, logD, log_scale=True)


def f_step(D: GridFunction, chi_gf: GridFunction, case: str) -> GridFunction:
    """Integrate f' = -2 D / chi^2 with the boundary constant of the case.

    The slope is evaluated as exp(log(2 D) - 2 log chi), which stays finite
    where chi^2 underflows.
    """
    case = case.upper()
    if case not in ("A", "B"):
        raise ValueError(f"case must be 'A' or 'B', got {case!r}")
    if not D.log_scale:
        raise ValueError("D must be a log-scale GridFunction")
    expo = np.full(D.values.size, -np.inf)
    live = ~np.isneginf(D.values)
    expo[live] = D.values[live] + LN2 - 2.0 * chi_gf.values[live]
    t = np.exp(np.minimum(expo, 700.0))
    tf = GridFunction(D.grid, t)
    if case == "A":
        vals = 1.0 + cumulative_from_tail(tf).values
    else:
        vals = 1.0 - cumulative_from_zero(tf).values
        if np.min(vals) <= 0.0:
            raise CaseBViolation(fmin=float(np.min(vals)))
    return GridFunction(D.grid, vals)


def crossing_point(h: GridFunction, calE: float) -> float:
    """The unique radius where h - calE changes sign.

    A sign change across a stored jump returns the jump node itself;
    otherwise the crossing is located on a local cubic interpolant of the
    panel the bracketing interval belongs to.
    """
    grid = h.grid
    d = h.values - calE
    if d[0] <= 0.0 or d[-1] >= 0.0:
        raise ValueError(f"no sign change: h(0)-calE={d[0]:g}, h(r_max)-calE={d[-1]:g}")
    i = _crossing_index(h, calE)
    if i in h.left_values and h.left_values[i] - calE >= 0.0 >= d[i]:
        return float(grid.nodes[i])
    if d[i] == 0.0:
        return float(grid.nodes[i])
    for i0, i1 in grid.panels():
        if i0 < i <= i1:
            break
    lo, hi = grid.nodes[i - 1], grid.nodes[i]
    if i1 - i0 < 3:
        return float(lo + (hi - lo) * d[i - 1] / (d[i - 1] - d[i]))  # secant fallback
    j0 = min(max(i - 2, i0), i1 - 3)
    xs = grid.nodes[j0 : j0 + 4]
    ys = h.panel_values(i0, i1)[j0 - i0 : j0 - i0 + 4] - calE
    coeffs = np.polyfit(xs - lo, ys, 3)
    return float(lo + brentq(lambda z: np.polyval(coeffs, z), 0.0, hi - lo, xtol=1e-15))


def _validate_h(h: GridFunction):
    scale = max(float(np.max(np.abs(h.values))), 1e-300)
    if float(np.min(h.values)) < -1e-12 * scale:
        raise ValueError("h must be non-negative")
    for i0, i1 in h.grid.panels():
        v = h.panel_values(i0, i1)
        if np.max(np.diff(v)) > 1e-12 * scale:
            raise ValueError("h must be non-increasing on each smooth panel")


def iterate_ground(
    trial: TrialFunction,
    grid: RadialGrid,
    case: str = "A",
    n_max: int = 50,
    tol: float = 1e-9,
) -> RunReport:
    """Run the iteration from f_0 = 1 until the energy shift settles.

    Stops at |calE_n - calE_{n-1}| < tol (1 + |calE_n|) or after n_max
    steps. A non-monotone energy sequence in Case A is recorded as a
    violation but the run continues (diagnostic mode); a Case-B positivity
    failure aborts with the offending step attached.
    """
    case = case.upper()
    if case not in ("A", "B"):
        raise ValueError(f"case must be 'A' or 'B', got {case!r}")
    _validate_h(trial.h)
    h = trial.h
    chi_gf = chi(trial, grid)
    exact_trial = float(np.max(np.abs(h.values))) == 0.0

    f_prev = GridFunction(grid, np.ones(grid.node_count))
    states: list[IterationState] = []
    violations: list[str] = []
    calE_prev = 0.0
    converged = False
    for n in range(1, n_max + 1):
        calE = energy_step(f_prev, h, chi_gf)
        rho = rho_field(f_prev, h, calE, chi_gf)
        total = abs(integrate(rho))
        absl = {i: abs(v) for i, v in rho.left_values.items()}
        total_abs = integrate(GridFunction(grid, np.abs(rho.values), left_values=absl))
        charge_residual = total / total_abs if total_abs > 0.0 else 0.0

        if not exact_trial and not (0.0 < calE < trial.h0):
            violations.append(f"n={n}: calE={calE:g} outside (0, h(0)={trial.h0:g})")
        if case == "A" and states and calE <= states[-1].calE:
            violations.append(f"n={n}: non-monotone calE ({states[-1].calE!r} -> {calE!r})")

        if total_abs == 0.0:
            logD = np.full(grid.node_count, -np.inf)
            D = GridFunction(grid, logD, log_scale=True)
            r_n = math.nan
            mismatch = 0.0
            f_new = GridFunction(grid, f_prev.values.copy())
        else:
            t, _, mismatch = _slope_field(f_prev, h, calE, chi_gf)
            G = 2.0 * chi_gf.values
            with np.errstate(divide="ignore"):
                logD = np.where(t > 0.0, np.log(np.maximum(t, 1e-300)) - LN2 + G, -np.inf)
            D = GridFunction(grid, logD, log_scale=True)
            r_n = crossing_point(h, calE)
            try:
                f_new = f_step(D, chi_gf, case)
            except CaseBViolation as exc:
                raise CaseBViolation(n=n, fmin=exc.fmin) from None

        states.append(IterationState(n, f_new, calE, D, r_n, case, charge_residual, mismatch))
        if abs(calE - calE_prev) < tol * (1.0 + abs(calE)):
            converged = True
            break
        calE_prev = calE
        f_prev = f_new

    return RunReport(case, trial.E0, tol, states, converged, violations)


def action_functional(f: GridFunction, chi_gf: GridFunction, rho: GridFunction) -> float:
    """I(f) = integral of (1/4) chi^2 f'^2 - rho f; minimized by the solution."""
    grid = f.grid
    fp = np.empty(grid.node_count)
    for i0, i1 in grid.panels():
        hs = (grid.nodes[i1] - grid.nodes[i0]) / (i1 - i0)
        v = f.values[i0 : i1 + 1]
        fp[i0 + 1 : i1] = (v[2:] - v[:-2]) / (2.0 * hs)
        fp[i0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * hs)
        fp[i1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * hs)
    kinetic = integrate(GridFunction(grid, 0.25 * _weight(chi_gf) * fp**2))
    lefts = {i: v * f.values[i] for i, v in rho.left_values.items()}
    source = integrate(GridFunction(grid, rho.values * f.values, left_values=lefts))
    return kinetic - source


def fixed_point_residual(
    f: GridFunction, calE: float, chi_gf: GridFunction, h: GridFunction, case: str
) -> float:
    """Max-norm of f minus one application of the fixed-point map at (f, calE).

    Case A recomputes the tail form, Case B the origin form, each as a
    single-sided cumulative (no crossing split), exactly as the fixed-point
    equations are written.
    """
    case = case.upper()
    grid = f.grid
    G = 2.0 * chi_gf.values
    c = (h.values - calE) * f.values
    c_left = {i: (v - calE) * f.values[i] for i, v in h.left_values.items()}
    M = grid.node_count - 1
    t = np.zeros(grid.node_count)
    if case == "A":
        a = _anchored_increments(grid, G, c, c_left, 0, M, "left")
        acc = 0.0
        for i in range(M - 1, -1, -1):
            r = math.exp(min(G[i + 1] - G[i], 700.0)) if np.isfinite(G[i]) else 0.0
            acc = acc * r - 2.0 * a[i]
            t[i] = acc
        if not np.isfinite(G[0]):
            t[0] = 0.0
        f_rhs = 1.0 + cumulative_from_tail(GridFunction(grid, t)).values
    elif case == "B":
        b = _anchored_increments(grid, G, c, c_left, 0, M, "right")
        acc = 0.0
        for i in range(1, M + 1):
            r = math.exp(min(G[i - 1] - G[i], 700.0)) if np.isfinite(G[i]) else 0.0
            acc = acc * r + 2.0 * b[i - 1]
            t[i] = acc
        f_rhs = 1.0 - cumulative_from_zero(GridFunction(grid, t)).values
    else:
        raise ValueError(f"case must be 'A' or 'B', got {case!r}")
    return float(np.max(np.abs(f.values - f_rhs)))

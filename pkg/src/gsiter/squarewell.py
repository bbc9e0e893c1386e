"""The exactly solvable square-well benchmark.

Geometry (even in x, hard walls at |x| = L + l): the physical potential is
-g^2/2 inside |x| < l and 0 on l < |x| < L + l; the reference state is
cos(p x) with p (L + l) = pi/2, so the perturbation h is the constant
g^2/2 inside the well and zero outside, with a single downward jump at l.

Everything about this model is available in closed form: the exact ground
energy from transcendental matching, the first iterate, a polynomial
family generating every iterate, and the singularities of E(g^2) that fix
the convergence radius of the plain power series in g^2.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as npoly

from .grid import GridFunction, RadialGrid, build_grid
from .iterate import RunReport, iterate_ground
from .oracle import root_bracket
from .trial import TrialFunction

__all__ = [
    "SquareWellModel",
    "PolyIterate",
    "PerturbativeRadius",
    "critical_depth",
    "exact_ground",
    "exact_ground_detail",
    "first_iterate_closed_form",
    "r_poly",
    "poly_family_R",
    "assemble_iterate_polys",
    "squarewell_grid",
    "squarewell_trial",
    "iterate_squarewell",
    "singularity_locator",
    "perturbative_radius",
]


@dataclass(frozen=True)
class SquareWellModel:
    """Well of half-width l and depth g2/2 inside a box of half-width L + l."""

    L: float
    l: float
    g2: float

    def __post_init__(self):
        if self.l <= 0.0:
            raise ValueError("well half-width l must be positive")
        if self.L <= 0.0:
            raise ValueError("outer width L must be positive (use math.inf for no wall)")
        if self.g2 < 0.0:
            raise ValueError("g2 must be non-negative")

    @property
    def finite(self) -> bool:
        return math.isfinite(self.L)

    @property
    def R(self) -> float:
        return self.L + self.l

    @property
    def p(self) -> float:
        if not self.finite:
            raise ValueError("p is defined only for finite L")
        return math.pi / (2.0 * self.R)

    @property
    def E0(self) -> float:
        return 0.5 * self.p**2


def _scan_bracket(fn, lo, hi, samples=512):
    xs = np.linspace(lo, hi, samples)
    vals = np.array([fn(x) for x in xs])
    sign = np.sign(vals)
    flips = np.nonzero(sign[:-1] * sign[1:] < 0.0)[0]
    if flips.size == 0:
        raise RuntimeError(
            f"root bracketing failure on [{lo:g}, {hi:g}]: "
            f"f ranges over [{vals.min():g}, {vals.max():g}] with no sign change"
        )
    k = int(flips[0])
    return float(xs[k]), float(xs[k + 1])


def critical_depth(model: SquareWellModel) -> float:
    """g0^2 where the exact ground energy crosses zero (finite L only)."""
    if not model.finite:
        return 0.0
    l, L = model.l, model.L
    fn = lambda q: q * math.tan(q * l) - 1.0 / L
    eps = 1e-9 * math.pi / (2.0 * l)
    q0 = root_bracket(fn, eps, math.pi / (2.0 * l) - eps, tol=1e-10)
    return q0 * q0


def exact_ground_detail(model: SquareWellModel) -> dict:
    """Exact ground energy with the matched wave numbers and branch tag."""
    l, L, g2 = model.l, model.L, model.g2
    g = math.sqrt(g2)
    q_max = math.pi / (2.0 * l)
    if not model.finite:
        if g2 == 0.0:
            return {"E": 0.0, "branch": "threshold", "q": 0.0, "kappa": 0.0}
        hi = min(g, q_max)
        fn = lambda q: q * math.tan(q * l) - math.sqrt(max(g2 - q * q, 0.0))
        lo, hi = _scan_bracket(fn, 1e-12 * hi, hi * (1.0 - 1e-12))
        q = root_bracket(fn, lo, hi, tol=1e-9)
        kappa2 = g2 - q * q
        return {"E": -0.5 * kappa2, "branch": "binding", "q": q, "kappa": math.sqrt(kappa2)}

    g02 = critical_depth(model)
    if abs(g2 - g02) <= 1e-12 * max(1.0, g02):
        return {"E": 0.0, "branch": "critical", "q": math.sqrt(g02), "kappa": 0.0}
    if g2 < g02:
        # E > 0: q tan(q l) = k cot(k L), q^2 = g^2 + k^2
        k_hi = min(math.pi / L, math.sqrt(max(q_max**2 - g2, 0.0)))
        fn = lambda k: math.sqrt(g2 + k * k) * math.tan(math.sqrt(g2 + k * k) * l) - k / math.tan(k * L)
        lo, hi = _scan_bracket(fn, 1e-10 * k_hi, k_hi * (1.0 - 1e-10))
        k = root_bracket(fn, lo, hi, tol=1e-9)
        return {"E": 0.5 * k * k, "branch": "positive", "q": math.sqrt(g2 + k * k), "k": k}
    # E < 0: q tan(q l) = kappa coth(kappa L), kappa^2 = g^2 - q^2
    hi = min(g, q_max)

    def fn(q):
        kappa = math.sqrt(max(g2 - q * q, 0.0))
        rhs = kappa / math.tanh(kappa * L) if kappa > 0.0 else 1.0 / L
        return q * math.tan(q * l) - rhs

    lo, hi = _scan_bracket(fn, 1e-10 * hi, hi * (1.0 - 1e-10))
    q = root_bracket(fn, lo, hi, tol=1e-9)
    kappa2 = g2 - q * q
    return {"E": -0.5 * kappa2, "branch": "negative", "q": q, "kappa": math.sqrt(kappa2)}


def exact_ground(model: SquareWellModel) -> float:
    return exact_ground_detail(model)["E"]


def first_iterate_closed_form(model: SquareWellModel):
    """(calE_1, D_1 evaluator, f_1 evaluator) for the first step, f_1(R) = 1."""
    if not model.finite:
        raise ValueError("closed-form first iterate needs finite L")
    l, L, g2 = model.l, model.L, model.g2
    R, p = model.R, model.p
    sin2pl = math.sin(2.0 * p * l)
    calE1 = g2 / (2.0 * R) * (l + sin2pl / (2.0 * p))

    def D1(x):
        x = np.asarray(x, dtype=float)
        outer = (l + sin2pl / (2.0 * p)) * (R - x - np.sin(2.0 * p * x) / (2.0 * p))
        inner = (x + np.sin(2.0 * p * x) / (2.0 * p)) * (L - sin2pl / (2.0 * p))
        return g2 / (4.0 * R) * np.where(x > l, outer, inner)

    def _wall_tan(x):
        # (R - x) tan(p x) = tau cot(p tau), stable through the wall
        tau = R - np.asarray(x, dtype=float)
        ptau = p * tau
        small = ptau < 1e-6
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = tau / np.tan(ptau)
        series = (1.0 / p) * (1.0 - ptau**2 / 3.0)
        return np.where(small, series, direct)

    f1_at_l_outer = 1.0 + (calE1 / p**2) * (1.0 - p * _wall_tan(l))
    f1_at_0 = f1_at_l_outer + (1.0 / p) * (0.5 * g2 - calE1) * l * math.tan(p * l)

    def f1(x):
        x = np.asarray(x, dtype=float)
        outer = 1.0 + (calE1 / p**2) * (1.0 - p * _wall_tan(x))
        inner = f1_at_0 - (1.0 / p) * (0.5 * g2 - calE1) * x * np.tan(p * x)
        return np.where(x > l, outer, inner)

    return calE1, D1, f1


def r_poly(n: int) -> list[Fraction]:
    """Ascending exact coefficients of the scale-free polynomial r_n(u).

    r_0 = 1 and r_n' - r_n'' = r_{n-1} with r_n(0) = 0 for n > 0.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    coeffs = [Fraction(1)]
    for _ in range(n):
        b = coeffs
        deg = len(b) - 1
        a = [Fraction(0)] * (deg + 3)  # indices 0..deg+2, a[deg+2] stays 0
        for j in range(deg, -1, -1):
            a[j + 1] = (b[j] + (j + 2) * (j + 1) * a[j + 2]) / (j + 1)
        coeffs = a[: deg + 2]
        coeffs[0] = Fraction(0)
    return coeffs


def poly_family_R(n: int, q: complex) -> np.ndarray:
    """Ascending complex coefficients of R_n(x|q) = q^{2n} r_n(x/q)."""
    r = r_poly(n)
    return np.array([complex(q) ** (2 * n - k) * float(r[k]) for k in range(len(r))])


@dataclass
class PolyIterate:
    """One region of the polynomial iterate f_n = P_n(x) + tan(p x) Q_n(x)."""

    region: str  # "inner" | "outer"
    delta: float
    P: np.ndarray
    Q: np.ndarray
    p: float
    x_lo: float
    x_hi: float
    wall: float | None = None  # R for the outer region; Q(R) = 0 there

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.wall is None:
            return npoly.polyval(x, self.P) + np.tan(self.p * x) * npoly.polyval(x, self.Q)
        quo, rem = npoly.polydiv(self.Q, np.array([-self.wall, 1.0]))
        # rem is the (machine-zero) value of Q at the wall; tan(p x) Q(x) is
        # evaluated through the stable factor (x - R) tan(p x)
        tau = self.wall - x
        ptau = self.p * tau
        small = np.abs(ptau) < 1e-6
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(small, -(1.0 / self.p) * (1.0 - ptau**2 / 3.0), -tau / np.tan(ptau))
        return npoly.polyval(x, self.P) + w * npoly.polyval(x, quo)


def _particular(prev: np.ndarray, delta: float, two_ip: complex) -> np.ndarray:
    """Polynomial y with y'' + two_ip y' = -delta * prev and y(0) = 0."""
    deg = len(prev) - 1
    a = np.zeros(deg + 3, dtype=complex)
    for j in range(deg, -1, -1):
        a[j + 1] = (-delta * prev[j] - (j + 2) * (j + 1) * a[j + 2]) / (two_ip * (j + 1))
    return a[: deg + 2]


def assemble_iterate_polys(n: int, model: SquareWellModel, calE_list) -> tuple[PolyIterate, PolyIterate]:
    """Region polynomials of f_n from the energy shifts calE_1..calE_n.

    The conjugate pair of first-order recursions is carried explicitly; the
    assembled P, Q must come out real (asserted), and the four per-step
    constants are fixed by wall regularity, the boundary value f_n(R) = 1,
    continuity of f and f' at the well edge, and evenness at the origin.
    """
    if not model.finite:
        raise ValueError("polynomial iterates need finite L")
    if n < 1 or len(calE_list) < n:
        raise ValueError("need calE_1..calE_n")
    p, R, l, g2 = model.p, model.R, model.l, model.g2
    tl = math.tan(p * l)
    sec2 = 1.0 / math.cos(p * l) ** 2

    plus = {"inner": np.array([0.5 + 0.0j]), "outer": np.array([0.5 + 0.0j])}
    minus = {"inner": np.array([0.5 + 0.0j]), "outer": np.array([0.5 + 0.0j])}
    result = None
    for k in range(1, n + 1):
        calE = float(calE_list[k - 1])
        deltas = {"inner": g2 - 2.0 * calE, "outer": -2.0 * calE}
        P = {}
        Q = {}
        for reg in ("inner", "outer"):
            plus[reg] = _particular(plus[reg], deltas[reg], 2j * p)
            minus[reg] = _particular(minus[reg], deltas[reg], -2j * p)
            Pc = plus[reg] + minus[reg]
            Qc = 1j * (plus[reg] - minus[reg])
            scale = max(np.max(np.abs(Pc)), np.max(np.abs(Qc)), 1.0)
            if max(np.max(np.abs(Pc.imag)), np.max(np.abs(Qc.imag))) > 1e-13 * scale:
                raise RuntimeError("assembled polynomials are not real to tolerance")
            P[reg], Q[reg] = Pc.real.copy(), Qc.real.copy()

        def val(c, x):
            return float(npoly.polyval(x, c))

        def dval(c, x):
            return float(npoly.polyval(x, npoly.polyder(c)))

        # unknowns [gamma_in, delta_in, gamma_out, delta_out]
        A = np.zeros((5, 4))
        rhs = np.zeros(5)
        A[0, 3] = 1.0
        rhs[0] = -val(Q["outer"], R)
        A[1, 2] = 1.0
        rhs[1] = 1.0 - val(P["outer"], R) + dval(Q["outer"], R) / p
        A[2] = [1.0, tl, -1.0, -tl]
        rhs[2] = (val(P["outer"], l) + tl * val(Q["outer"], l)) - (
            val(P["inner"], l) + tl * val(Q["inner"], l)
        )
        A[3] = [0.0, p * sec2, 0.0, -p * sec2]
        rhs[3] = (
            dval(P["outer"], l) + p * sec2 * val(Q["outer"], l) + tl * dval(Q["outer"], l)
        ) - (dval(P["inner"], l) + p * sec2 * val(Q["inner"], l) + tl * dval(Q["inner"], l))
        A[4, 1] = p
        rhs[4] = -dval(P["inner"], 0.0) - p * val(Q["inner"], 0.0)

        sol, *_ = np.linalg.lstsq(A, rhs, rcond=None)
        resid = np.max(np.abs(A @ sol - rhs))
        scale = max(1.0, float(np.max(np.abs(rhs))))
        if resid > 1e-8 * scale:
            raise RuntimeError(f"junction system inconsistent: residual {resid:g}")
        gam = {"inner": sol[0], "outer": sol[2]}
        dlt = {"inner": sol[1], "outer": sol[3]}
        for reg in ("inner", "outer"):
            plus[reg][0] += 0.5 * (gam[reg] - 1j * dlt[reg])
            minus[reg][0] += 0.5 * (gam[reg] + 1j * dlt[reg])
            P[reg][0] += gam[reg]
            Q[reg][0] += dlt[reg]
        if k == n:
            inner = PolyIterate("inner", deltas["inner"], P["inner"], Q["inner"], p, 0.0, l)
            outer = PolyIterate("outer", deltas["outer"], P["outer"], Q["outer"], p, l, R, wall=R)
            result = (inner, outer)
    return result


def squarewell_grid(model: SquareWellModel, node_count: int = 2001) -> RadialGrid:
    if not model.finite:
        raise ValueError("grid construction needs finite L")
    return build_grid(1, model.R, node_count, (model.l,))


def squarewell_trial(model: SquareWellModel, grid: RadialGrid) -> TrialFunction:
    """cos(p x) reference state and the step perturbation, jump stored at l."""
    x = grid.nodes
    p = model.p
    log_phi = np.log(np.cos(np.minimum(p * x, math.pi / 2 * (1 - 1e-16))))
    log_phi[-1] = -np.inf  # the wall zero is exact
    phi = GridFunction(grid, log_phi, log_scale=True)
    j = grid.index_of(model.l)
    h_vals = np.where(x < model.l, 0.5 * model.g2, 0.0)
    lefts = {j: 0.5 * model.g2} if model.g2 > 0.0 else {}
    h = GridFunction(grid, h_vals, left_values=lefts)
    return TrialFunction(phi, h, E0=model.E0, h_breakpoints=(model.l,))


def iterate_squarewell(
    model: SquareWellModel,
    n_max: int = 50,
    node_count: int = 2001,
    tol: float = 1e-10,
    case: str = "A",
) -> RunReport:
    """Case-A (default) run of the iteration specialized to the square well."""
    grid = squarewell_grid(model, node_count)
    trial = squarewell_trial(model, grid)
    return iterate_ground(trial, grid, case=case, n_max=n_max, tol=tol)


def singularity_locator(branch: str) -> tuple[complex, float]:
    """Nearest zeros of z tan z + 1 = 0 and the matching g^2 l^2 = 1 + z^2.

    branch="imaginary": z = i y with y tanh y = 1 (the singularity nearest
    the origin); branch="real": the smallest real zero.
    """
    if branch == "imaginary":
        y = root_bracket(lambda t: t * math.tanh(t) - 1.0, 0.5, 2.0, tol=1e-13)
        z = 1j * y
    elif branch == "real":
        zr = root_bracket(lambda t: t * math.tan(t) + 1.0, 2.0, 3.0, tol=1e-12)
        z = complex(zr)
    else:
        raise ValueError("branch must be 'imaginary' or 'real'")
    g2l2 = (1.0 + z * z).real
    return z, float(g2l2)


@dataclass(frozen=True)
class PerturbativeRadius:
    """Convergence disk |g^2 l^2| < radius of the power series in g^2."""

    radius: float
    boundary_band: float = 0.01  # relative width treated as "boundary"

    def classify(self, g2l2: float) -> str:
        if abs(abs(g2l2) - self.radius) <= self.boundary_band * self.radius:
            return "boundary"
        return "inside" if abs(g2l2) < self.radius else "outside"


def perturbative_radius(model: SquareWellModel) -> PerturbativeRadius:
    if model.finite:
        raise ValueError("the analyticity study is for the L = inf model")
    _, g2l2 = singularity_locator("imaginary")
    return PerturbativeRadius(radius=abs(g2l2))


def residual_z_tan(z: complex) -> float:
    """|z tan z + 1| at a located root (root-quality contract)."""
    return abs(z * cmath.tan(z) + 1.0)

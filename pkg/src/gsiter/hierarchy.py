"""Runtime checks of the monotone-bound structure of an iteration run.

Case A runs must produce a strictly ascending energy-shift sequence and
pointwise-ascending ratios whose successive quotients decrease in r; Case B
runs interleave: odd shifts ascend, even shifts descend, every even shift
sits above every odd one, and the quotient monotonicity alternates with
parity. Each check returns a verdict with the worst margin and the first
offending index, never an exception.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction
from .iterate import RunReport, crossing_point  # noqa: F401  (crossing_point re-exported here)

__all__ = [
    "CheckRecord",
    "HierarchyVerdict",
    "check_energy_monotone",
    "check_ratio_monotone",
    "check_bounds",
    "check_displacement_ratio",
    "crossing_point",
]

# discrete strict inequalities get this much slack (10x quadrature tolerance)
DEFAULT_FLOOR = 1e-11


@dataclass
class CheckRecord:
    name: str
    passed: bool
    margin: float
    index: object = None
    detail: str = ""


@dataclass
class HierarchyVerdict:
    checks: list[CheckRecord] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, passed, margin, index=None, detail=""):
        self.checks.append(CheckRecord(name, bool(passed), float(margin), index, detail))

    def failures(self) -> list[CheckRecord]:
        return [c for c in self.checks if not c.passed]


def _first_bad(diffs, want_positive: bool):
    arr = np.asarray(diffs)
    bad = np.nonzero(arr <= 0.0 if want_positive else arr >= 0.0)[0]
    return (int(bad[0]) if bad.size else None), float(np.min(arr) if want_positive else -np.max(arr))


def check_energy_monotone(report: RunReport) -> HierarchyVerdict:
    """Strict monotonicity of {calE_n}: ascending (A) or parity-interleaved (B)."""
    if len(report.states) < 3:
        raise ValueError("need at least 3 iterations to check monotonicity")
    cal = np.array(report.energies())
    v = HierarchyVerdict()
    if report.case == "A":
        idx, margin = _first_bad(np.diff(cal), True)
        v.add("calE ascending", idx is None, margin, None if idx is None else idx + 2)
        return v
    odd = cal[0::2]  # n = 1, 3, 5, ...
    even = cal[1::2]  # n = 2, 4, 6, ...
    idx, margin = _first_bad(np.diff(odd), True)
    v.add("odd calE ascending", idx is None, margin, None if idx is None else 2 * idx + 3)
    if even.size >= 2:
        idx, margin = _first_bad(-np.diff(even), True)
        v.add("even calE descending", idx is None, margin, None if idx is None else 2 * idx + 4)
    if even.size and odd.size:
        margin = float(np.min(even) - np.max(odd))
        v.add("every even calE above every odd", margin > 0.0, margin)
    return v


def _ratio_direction(num: GridFunction, denom: GridFunction, floor: float):
    r = num.values / denom.values
    interior = r[2:-2]  # boundary nodes are pinned by the normalization
    d = np.diff(interior)
    return d, float(np.max(np.abs(r)))


def check_ratio_monotone(f_list, case: str, floor: float = DEFAULT_FLOOR) -> HierarchyVerdict:
    """Sign of d/dr (f_{k+1}/f_k) at interior nodes, per case and parity.

    f_list starts at f_0 (identically 1). Case A: every quotient decreases.
    Case B: quotients decrease when the lower index is even, increase when
    it is odd.
    """
    case = case.upper()
    v = HierarchyVerdict()
    for k in range(len(f_list) - 1):
        d, scale = _ratio_direction(f_list[k + 1], f_list[k], floor)
        tol = floor * max(scale, 1.0)
        decreasing = case == "A" or k % 2 == 0
        if decreasing:
            worst = float(np.max(d))
            ok = worst <= tol
            name = f"(f_{k + 1}/f_{k})' <= 0"
        else:
            worst = float(-np.min(d))
            ok = worst <= tol
            name = f"(f_{k + 1}/f_{k})' >= 0"
        v.add(name, ok, -worst, k, f"worst discrete slope magnitude {worst:g}")
    return v


def check_bounds(report: RunReport, E_oracle: float) -> HierarchyVerdict:
    """Upper bounds (A) or the odd-above / even-below sandwich (B) vs an oracle."""
    E = np.array([report.E0 - c for c in report.energies()])
    v = HierarchyVerdict()
    if report.case == "A":
        margin = float(np.min(E - E_oracle))
        bad = np.nonzero(E - E_oracle <= 0.0)[0]
        v.add("E_n above oracle", bad.size == 0, margin, int(bad[0] + 1) if bad.size else None)
        return v
    odd = E[0::2]
    even = E[1::2]
    margin = float(np.min(odd - E_oracle))
    bad = np.nonzero(odd - E_oracle <= 0.0)[0]
    v.add("odd E_n above oracle", bad.size == 0, margin, int(2 * bad[0] + 1) if bad.size else None)
    if even.size:
        margin = float(np.min(E_oracle - even))
        bad = np.nonzero(E_oracle - even <= 0.0)[0]
        v.add("even E_n below oracle", bad.size == 0, margin, int(2 * bad[0] + 2) if bad.size else None)
    return v


def check_displacement_ratio(D_list, case: str = "A", floor: float = 1e-13) -> HierarchyVerdict:
    """Sign of d/dr (D_{k+1}/D_k) where both fields are resolved.

    D fields are log-scale; nodes where either is below floor x max are
    excluded (the quotient is 0/0 at both endpoints). Case A: decreasing
    for every consecutive pair; Case B alternates with the parity of the
    lower index (matching the quotient behavior of the ratios one step
    earlier).
    """
    case = case.upper()
    v = HierarchyVerdict()
    for k in range(len(D_list) - 1):
        la, lb = D_list[k + 1].values, D_list[k].values
        lim_a = np.max(la[np.isfinite(la)]) + np.log(floor)
        lim_b = np.max(lb[np.isfinite(lb)]) + np.log(floor)
        mask = (la > lim_a) & (lb > lim_b)
        if np.count_nonzero(mask) < 4:
            v.add(f"(D_{k + 2}/D_{k + 1})' sign", True, 0.0, k, "insufficient resolved nodes")
            continue
        q = np.exp(la[mask] - lb[mask])
        d = np.diff(q)
        if np.allclose(q, q[0], rtol=1e-12, atol=0.0):
            v.add(f"(D_{k + 2}/D_{k + 1})' sign", True, 0.0, k, "constant quotient (boundary case)")
            continue
        tol = DEFAULT_FLOOR * max(float(np.max(q)), 1.0)
        decreasing = case == "A" or k % 2 == 0
        worst = float(np.max(d)) if decreasing else float(-np.min(d))
        name = f"(D_{k + 2}/D_{k + 1})' {'<=' if decreasing else '>='} 0"
        v.add(name, worst <= tol, -worst, k)
    return v

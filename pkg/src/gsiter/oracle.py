"""Independent ground-truth computations used to validate everything else.

The eigensolver discretizes the radial Hamiltonian in the similarity-
transformed form (the r^{(N-1)/2} substitution) so the matrix is symmetric
tridiagonal, then takes the lowest eigenpair by bisection on the
characteristic sequence plus inverse iteration (LAPACK, via scipy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .grid import GridFunction, RadialGrid, integrate

__all__ = ["EigenResult", "fd_ground_state", "refinement_study", "root_bracket", "orthonormal_check"]


@dataclass
class EigenResult:
    energy: float
    psi: GridFunction
    residual: float


def _uniform_spacing(grid: RadialGrid) -> float:
    d = np.diff(grid.nodes)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0.0):
        raise ValueError("fd_ground_state needs a uniform grid")
    return float(d[0])


def fd_ground_state(V, dimension: int, grid: RadialGrid, bc0: str = "neumann") -> EigenResult:
    """Lowest eigenpair of the discrete radial Hamiltonian.

    bc0 selects the boundary condition at r=0: "neumann" (even reflection,
    dimension 1 only) or "dirichlet". The outer boundary is always a hard
    wall at r_max.
    """
    if bc0 not in ("neumann", "dirichlet"):
        raise ValueError(f"bc0 must be 'neumann' or 'dirichlet', got {bc0}")
    if bc0 == "neumann" and dimension != 1:
        raise ValueError("neumann at the origin is only meaningful for dimension 1")
    dx = _uniform_spacing(grid)
    r = grid.nodes
    v = np.asarray(V(r), dtype=float)
    cent = np.zeros_like(r)
    cN = (dimension - 1) * (dimension - 3) / 8.0
    if cN != 0.0:
        with np.errstate(divide="ignore"):
            cent = np.where(r > 0.0, cN / np.maximum(r, 1e-300) ** 2, np.inf)

    if bc0 == "neumann":
        keep = slice(0, r.size - 1)
    else:
        keep = slice(1, r.size - 1)
    d = 1.0 / dx**2 + v[keep] + cent[keep]
    e = np.full(d.size - 1, -0.5 / dx**2)
    if bc0 == "neumann":
        e[0] = -1.0 / (math.sqrt(2.0) * dx**2)  # similarity transform of the reflection row

    try:
        w, vec = eigh_tridiagonal(d, e, select="i", select_range=(0, 0))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise RuntimeError(f"tridiagonal eigensolve failed to converge: {exc}") from exc
    E = float(w[0])
    y = vec[:, 0]

    # residual against the same discrete operator, before any rescaling
    Hy = d * y
    Hy[:-1] += e * y[1:]
    Hy[1:] += e * y[:-1]
    residual = float(np.linalg.norm(Hy - E * y) / np.linalg.norm(y))

    psi = np.zeros(r.size)
    if bc0 == "neumann":
        psi[:-1] = y
        psi[0] *= math.sqrt(2.0)
    else:
        psi[1:-1] = y
    if psi.sum() < 0.0:
        psi = -psi
    # inverse iteration resolves components down to ~eps * max only; below
    # that the entries are sign-noise, not nodes
    floor = 32.0 * np.finfo(float).eps * float(np.max(np.abs(psi)))
    interior = psi[1:-1] if bc0 == "dirichlet" else psi[:-1]
    resolved = interior[np.abs(interior) > floor]
    if np.any(resolved <= 0.0):
        raise RuntimeError("computed ground state has a node; not a valid ground state")
    np.abs(psi, out=psi)
    norm = integrate(GridFunction(grid, psi**2))
    psi /= math.sqrt(norm)
    return EigenResult(E, GridFunction(grid, psi), residual)


def refinement_study(V, dimension, r_max, node_counts, bc0="neumann", builder=None):
    """Energies across grid refinements plus a Richardson h^2 extrapolation."""
    from .grid import build_grid

    if builder is None:
        builder = lambda n: build_grid(dimension, r_max, n, ())
    energies = []
    spacings = []
    for n in node_counts:
        g = builder(n)
        energies.append(fd_ground_state(V, dimension, g, bc0).energy)
        spacings.append(g.nodes[1] - g.nodes[0])
    h1, h2 = spacings[-2], spacings[-1]
    E1, E2 = energies[-2], energies[-1]
    rich = E2 + (E2 - E1) / ((h1 / h2) ** 2 - 1.0)
    return energies, rich


def root_bracket(fn, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Bracketed root solve; verifies both the residual and the bracket width."""
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if flo * fhi > 0.0:
        raise ValueError(f"no sign change on [{lo}, {hi}]: f(lo)={flo:g}, f(hi)={fhi:g}")
    root = brentq(fn, lo, hi, xtol=max(min(tol, 1e-14), 1e-15), rtol=8.9e-16)
    res = abs(fn(root))
    if res > tol:
        raise RuntimeError(f"root residual {res:g} exceeds tol {tol:g} at {root!r}")
    return float(root)


def orthonormal_check(basis, grid: RadialGrid, modes: int = 20) -> float:
    """Max deviation of the Gram matrix of the first box modes from identity."""
    m = min(modes, basis.mode_count)
    u = [basis.mode(n, grid.nodes) for n in range(m)]
    dev = 0.0
    for i in range(m):
        for j in range(i, m):
            g = integrate(GridFunction(grid, u[i] * u[j]))
            dev = max(dev, abs(g - (1.0 if i == j else 0.0)))
    return dev

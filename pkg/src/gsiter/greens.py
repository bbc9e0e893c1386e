"""Box-potential Green's functions and their defining defect equations.

Three kernels on [0, R] with hard walls: the one-sided Sturm-Liouville
kernel used by the iteration, the symmetric resolvent at a spectral
parameter, and the reduced (ground-state-projected) kernel. The discrete
defect check applies the second-difference Hamiltonian row-wise and
compares against the discrete delta (or delta minus the rank-one ground
projector).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import RadialGrid

__all__ = [
    "BoxEigenbasis",
    "KernelSamples",
    "DefectReport",
    "green_sturm",
    "green_resolvent",
    "green_reduced",
    "mode_sum_kernel",
    "defect_check",
]


@dataclass(frozen=True)
class BoxEigenbasis:
    """Eigenmodes of the hard-wall box on [0, R]."""

    width: float
    mode_count: int = 200

    def __post_init__(self):
        if self.width <= 0.0:
            raise ValueError("box width must be positive")
        if self.mode_count < 1:
            raise ValueError("mode_count must be >= 1")

    def wavenumber(self, n: int) -> float:
        return (n + 1) * math.pi / self.width

    def energy(self, n: int) -> float:
        return 0.5 * self.wavenumber(n) ** 2

    def mode(self, n: int, x: np.ndarray) -> np.ndarray:
        return math.sqrt(2.0 / self.width) * np.sin(self.wavenumber(n) * np.asarray(x))


@dataclass
class KernelSamples:
    """Samples K(x_i, z_j) of a kernel over a shared 1D grid."""

    kind: str  # "sturm" | "resolvent" | "reduced"
    x: np.ndarray
    values: np.ndarray
    lam: float | None = None

    def __post_init__(self):
        n = self.x.size
        if self.values.shape != (n, n):
            raise ValueError("kernel sample array must be square over the grid")


def _box_phi(R: float, x: np.ndarray):
    k0 = math.pi / R
    return np.sin(k0 * x), np.cos(k0 * x)


def green_sturm(R: float, grid: RadialGrid) -> KernelSamples:
    """One-sided kernel: (2R/pi)[phi(x)phihat(z) - phi(z)phihat(x)] for x < z, else 0."""
    x = grid.nodes
    if abs(x[-1] - R) > 1e-12 * R:
        raise ValueError("grid must span [0, R]")
    phi, phih = _box_phi(R, x)
    K = (2.0 * R / math.pi) * (np.outer(phi, phih) - np.outer(phih, phi))
    K[np.tril_indices(x.size)] = 0.0  # support only on x < z; zero on and below diagonal
    return KernelSamples("sturm", x, K)


def green_resolvent(R: float, lam: float, grid: RadialGrid) -> KernelSamples:
    """Symmetric resolvent kernel at spectral parameter lam (not an eigenvalue)."""
    x = grid.nodes
    if abs(x[-1] - R) > 1e-12 * R:
        raise ValueError("grid must span [0, R]")
    basis = BoxEigenbasis(R)
    n_near = round(math.sqrt(max(2.0 * lam, 0.0)) * R / math.pi) - 1
    for n in (n_near - 1, n_near, n_near + 1):
        if n >= 0 and abs(lam - basis.energy(n)) < 1e-8:
            raise ValueError(f"lam={lam} is within 1e-8 of eigenvalue e_{n}")
    p = complex(math.sqrt(abs(2.0 * lam)))
    if lam < 0.0:
        p = 1j * p
    omega = p * np.sin(p * R)
    lower = np.minimum.outer(x, x)
    upper = np.maximum.outer(x, x)
    K = (2.0 / omega) * np.sin(p * lower) * np.sin(p * (R - upper))
    return KernelSamples("resolvent", x, np.real(K), lam=float(lam))


def green_reduced(R: float, grid: RadialGrid) -> KernelSamples:
    """Ground-state-projected kernel at the lowest box energy."""
    x = grid.nodes
    if abs(x[-1] - R) > 1e-12 * R:
        raise ValueError("grid must span [0, R]")
    phi, phih = _box_phi(R, x)
    sym = (R / math.pi**2) * np.outer(phi, phi)
    sym -= (2.0 / math.pi) * (np.outer(phi, x * phih) + np.outer(x * phih, phi))
    onesided = np.outer(phi, phih)
    upper = np.triu(onesided, k=1)  # x < z branch
    K = sym + (2.0 * R / math.pi) * (upper + upper.T)
    diag = (2.0 * R / math.pi) * phi * phih
    np.fill_diagonal(K, sym.diagonal() + diag)
    return KernelSamples("reduced", x, K)


def mode_sum_kernel(
    basis: BoxEigenbasis, grid: RadialGrid, lam: float | None = None, exclude_ground: bool = False
) -> np.ndarray:
    """Truncated eigenmode sum sum_n u_n(x)u_n(z)/(e_n - lam)."""
    x = grid.nodes
    if lam is None:
        lam = basis.energy(0)
    K = np.zeros((x.size, x.size))
    for n in range(basis.mode_count):
        if exclude_ground and n == 0:
            continue
        u = basis.mode(n, x)
        K += np.outer(u, u) / (basis.energy(n) - lam)
    return K


@dataclass
class DefectReport:
    kind: str
    dx: float
    offdiag_max: float
    diag_weight_err: float


def defect_check(kernel: KernelSamples, basis: BoxEigenbasis) -> DefectReport:
    """Apply -1/2 d^2/dx^2 - E row-wise in x and compare to the expected defect.

    Expected: discrete delta (1/dx at the matching node) for the one-sided
    and resolvent kernels; delta minus u0(x)u0(z) for the reduced kernel.
    Deviation is reported separately off the diagonal and on it.
    """
    x = kernel.x
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=1e-10):
        raise ValueError("defect check needs a uniform grid")
    E = kernel.lam if kernel.kind == "resolvent" else basis.energy(0)
    K = kernel.values
    F = -0.5 * (K[:-2, :] - 2.0 * K[1:-1, :] + K[2:, :]) / dx**2 - E * K[1:-1, :]

    expected = np.zeros_like(F)
    if kernel.kind == "reduced":
        u0 = basis.mode(0, x)
        expected -= np.outer(u0[1:-1], u0)
    ii = np.arange(1, x.size - 1)
    diag_vals = F[ii - 1, ii]
    diag_expected = expected[ii - 1, ii] + 1.0 / dx

    mask = np.ones_like(F, dtype=bool)
    mask[ii - 1, ii] = False
    mask[:, 0] = False  # wall columns carry no information
    mask[:, -1] = False
    offdiag_max = float(np.max(np.abs(F - expected)[mask]))
    diag_weight_err = float(np.max(np.abs(diag_vals - diag_expected) * dx))
    return DefectReport(kernel.kind, float(dx), offdiag_max, diag_weight_err)

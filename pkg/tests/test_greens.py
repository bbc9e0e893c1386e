import math

import numpy as np
import pytest
from scipy.integrate import quad

from gsiter.grid import GridFunction, build_grid, integrate
from gsiter.greens import (
    BoxEigenbasis,
    defect_check,
    green_reduced,
    green_resolvent,
    green_sturm,
    mode_sum_kernel,
)

R = 2.0


@pytest.fixture(scope="module")
def grid401():
    return build_grid(1, R, 401, ())


@pytest.fixture(scope="module")
def basis():
    return BoxEigenbasis(R, 200)


def test_sturm_one_sided(grid401):
    K = green_sturm(R, grid401)
    n = grid401.node_count
    assert np.all(K.values[np.tril_indices(n)] == 0.0)
    assert np.any(K.values[np.triu_indices(n, k=1)] != 0.0)


def test_sturm_wall_identity(grid401):
    # -(R/pi) phihat(x) equals phi(x) times the half-box integral of 1/phi^2
    k0 = math.pi / R
    for xv in (0.35, 0.8, 1.2, 1.6):
        val, _ = quad(lambda t: 1.0 / math.sin(k0 * t) ** 2, R / 2.0, xv)
        lhs = -(R / math.pi) * math.cos(k0 * xv)
        rhs = math.sin(k0 * xv) * val
        assert abs(lhs - rhs) < 1e-8


def test_resolvent_structure(grid401, basis):
    lam = basis.energy(0) / 2.0
    K = green_resolvent(R, lam, grid401)
    assert np.max(np.abs(K.values - K.values.T)) < 1e-12
    assert np.max(np.abs(K.values[:, 0])) == 0.0
    assert np.max(np.abs(K.values[:, -1])) == 0.0
    assert np.max(np.abs(K.values[0, :])) == 0.0


def test_resolvent_rejects_eigenvalue(grid401, basis):
    with pytest.raises(ValueError):
        green_resolvent(R, basis.energy(0), grid401)
    with pytest.raises(ValueError):
        green_resolvent(R, basis.energy(3) + 5e-9, grid401)


def test_resolvent_negative_lambda(grid401, basis):
    K = green_resolvent(R, -1.0, grid401)
    ms = mode_sum_kernel(basis, grid401, lam=-1.0)
    assert np.max(np.abs(K.values - ms)) < 5e-3
    assert np.all(np.isfinite(K.values))


def test_mode_sum_truncation_decreases(grid401):
    lam = BoxEigenbasis(R).energy(0) / 2.0
    K = green_resolvent(R, lam, grid401).values
    diffs = []
    for n_modes in (100, 200, 400):
        ms = mode_sum_kernel(BoxEigenbasis(R, n_modes), grid401, lam=lam)
        diffs.append(float(np.max(np.abs(ms - K))))
    assert diffs[0] > diffs[1] > diffs[2]


def test_mode_sum_operator_agreement(grid401, basis):
    # kernels agree as operators on a smooth wall-compatible source
    lam = basis.energy(0) / 2.0
    K = green_resolvent(R, lam, grid401).values
    ms = mode_sum_kernel(basis, grid401, lam=lam)
    x = grid401.nodes
    v = x**2 * (R - x) ** 2
    worst = 0.0
    for i in range(0, x.size, 40):
        diff = integrate(GridFunction(grid401, (ms[i] - K[i]) * v))
        worst = max(worst, abs(diff))
    assert worst < 1e-6


def test_reduced_structure(grid401, basis):
    K = green_reduced(R, grid401)
    assert np.max(np.abs(K.values - K.values.T)) < 1e-12
    u0 = basis.mode(0, grid401.nodes)
    worst = 0.0
    for j in range(0, grid401.node_count, 40):
        val = integrate(GridFunction(grid401, u0 * K.values[:, j]))
        worst = max(worst, abs(val))
    assert worst < 1e-8  # orthogonal to the ground mode
    ms = mode_sum_kernel(basis, grid401, exclude_ground=True)
    assert np.max(np.abs(K.values - ms)) < 5e-3  # truncated tail is O(1/modes)


def test_defect_checks(basis):
    for n in (2001, 4001):
        grid = build_grid(1, R, n, ())
        dx = grid.nodes[1] - grid.nodes[0]
        for maker in (green_sturm, green_reduced):
            rep = defect_check(maker(R, grid), basis)
            assert rep.offdiag_max < 1e-6 / dx
            assert rep.diag_weight_err < 1e-4
        rep = defect_check(green_resolvent(R, basis.energy(0) / 2.0, grid), basis)
        assert rep.offdiag_max < 1e-6 / dx


def test_defect_improves_under_refinement(basis):
    reps = []
    for n in (1001, 2001):
        grid = build_grid(1, R, n, ())
        reps.append(defect_check(green_sturm(R, grid), basis))
    assert reps[0].offdiag_max / reps[1].offdiag_max >= 3.5


def test_symmetric_kernels_vanish_on_walls(grid401, basis):
    for K in (
        green_reduced(R, grid401),
        green_resolvent(R, basis.energy(0) / 2.0, grid401),
    ):
        assert np.max(np.abs(K.values[:, 0])) < 1e-14
        assert np.max(np.abs(K.values[:, -1])) < 1e-14
        assert np.max(np.abs(K.values[0, :])) < 1e-14
        assert np.max(np.abs(K.values[-1, :])) < 1e-14


def test_sturm_kernel_vanishes_on_support_side_only(grid401):
    # the one-sided kernel is zero on its empty side (x >= z) but carries
    # -(2R/pi) phi(z) along x = 0: one-sidedness, not wall symmetry
    K = green_sturm(R, grid401).values
    assert np.max(np.abs(K[-1, :])) == 0.0  # x = R rows
    assert np.max(np.abs(K[:, 0])) == 0.0  # z = 0 columns
    assert np.max(np.abs(np.diag(K))) == 0.0
    phi = np.sin(math.pi * grid401.nodes / R)
    expected_row0 = -(2.0 * R / math.pi) * phi
    expected_row0[0] = 0.0
    assert np.max(np.abs(K[0, :] - expected_row0)) < 1e-14


def test_basis_accessors():
    b = BoxEigenbasis(2.0, 10)
    assert abs(b.wavenumber(0) - math.pi / 2.0) < 1e-15
    assert abs(b.energy(0) - math.pi**2 / 8.0) < 1e-15
    with pytest.raises(ValueError):
        BoxEigenbasis(-1.0)

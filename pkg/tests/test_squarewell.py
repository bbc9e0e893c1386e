import math
from fractions import Fraction

import numpy as np
import pytest

from gsiter.grid import GridFunction, build_grid
from gsiter.iterate import chi, energy_step
from gsiter.oracle import fd_ground_state
from gsiter.squarewell import (
    PerturbativeRadius,
    SquareWellModel,
    assemble_iterate_polys,
    critical_depth,
    exact_ground,
    exact_ground_detail,
    first_iterate_closed_form,
    iterate_squarewell,
    perturbative_radius,
    poly_family_R,
    r_poly,
    residual_z_tan,
    singularity_locator,
    squarewell_grid,
    squarewell_trial,
)

from conftest import bisect_root


def test_model_invariants():
    m = SquareWellModel(L=1.0, l=1.0, g2=1.0)
    assert m.p * (m.L + m.l) == math.pi / 2.0
    assert m.E0 == 0.5 * m.p**2
    with pytest.raises(ValueError):
        SquareWellModel(L=1.0, l=-1.0, g2=1.0)
    with pytest.raises(ValueError):
        SquareWellModel(L=0.0, l=1.0, g2=1.0)


def test_critical_depth():
    m = SquareWellModel(L=1.0, l=1.0, g2=1.0)
    q0 = bisect_root(lambda q: q * math.tan(q) - 1.0, 0.1, 1.5)
    assert abs(critical_depth(m) - q0 * q0) < 1e-10
    assert abs(critical_depth(m) - 0.740173884394967) < 1e-9


def test_exact_ground_branches():
    # shallow well: positive energy
    mpos = SquareWellModel(L=1.0, l=1.0, g2=0.25)
    dpos = exact_ground_detail(mpos)
    assert dpos["branch"] == "positive" and dpos["E"] > 0.0
    # verify the matching condition itself
    q, k = dpos["q"], dpos["k"]
    assert abs(q * math.tan(q * mpos.l) - k / math.tan(k * mpos.L)) < 1e-8
    assert abs(q * q - k * k - mpos.g2) < 1e-10
    # deep well: negative energy
    mneg = SquareWellModel(L=1.0, l=1.0, g2=1.0)
    dneg = exact_ground_detail(mneg)
    assert dneg["branch"] == "negative" and dneg["E"] < 0.0
    q, kap = dneg["q"], dneg["kappa"]
    assert abs(q * math.tan(q * mneg.l) - kap / math.tanh(kap * mneg.L)) < 1e-8


def test_exact_ground_continuity_at_critical_depth():
    g02 = critical_depth(SquareWellModel(L=1.0, l=1.0, g2=1.0))
    assert exact_ground(SquareWellModel(L=1.0, l=1.0, g2=g02)) == 0.0
    for eps in (-1e-6, 1e-6):
        E = exact_ground(SquareWellModel(L=1.0, l=1.0, g2=g02 + eps))
        assert abs(E) < 1e-4


def test_exact_ground_infinite_outer_region():
    m = SquareWellModel(L=math.inf, l=1.0, g2=4.0)
    det = exact_ground_detail(m)
    # frozen from a plain bisection of q tan q = sqrt(g^2 - q^2)
    assert abs(det["q"] - 1.0298665293222586) < 1e-9
    assert abs(det["E"] + 1.4696874658908623) < 1e-9
    # any depth binds when the outer region is infinite
    tiny = exact_ground(SquareWellModel(L=math.inf, l=1.0, g2=0.01))
    assert tiny < 0.0


def test_exact_ground_infinite_cross_checked_with_fd():
    m = SquareWellModel(L=math.inf, l=1.0, g2=4.0)
    og = build_grid(1, 40.0, 8001, (1.0,))

    def V(x):
        x = np.asarray(x)
        return np.where(x < 1.0, -2.0, np.where(x == 1.0, -1.0, 0.0))

    E_fd = fd_ground_state(V, 1, og, "neumann").energy
    assert abs(E_fd - exact_ground(m)) < 1e-4


def test_first_iterate_closed_form_values(squarewell_runs):
    m = squarewell_runs["model"]
    calE1, D1, f1 = first_iterate_closed_form(m)
    assert abs(calE1 - 0.25 * (1.0 + 2.0 / math.pi)) < 1e-15
    # linear scaling in g2
    m2 = SquareWellModel(L=1.0, l=1.0, g2=2.5)
    calE1b, _, _ = first_iterate_closed_form(m2)
    assert abs(calE1b - 2.5 * calE1) < 1e-14
    # continuity at the well edge
    eps = 1e-9
    assert abs(f1(m.l - eps) - f1(m.l + eps)) < 1e-7
    assert abs(D1(m.l - eps) - D1(m.l + eps)) < 1e-7
    # wall values
    assert abs(f1(m.R) - 1.0) < 1e-12
    assert abs(D1(m.R)) < 1e-12


def test_closed_form_energy_matches_quadrature_randomized():
    rng = np.random.default_rng(2024)
    for _ in range(10):
        L = rng.uniform(0.5, 3.0)
        l = rng.uniform(0.5, 3.0)
        g2 = rng.uniform(0.25, 4.0)
        model = SquareWellModel(L=L, l=l, g2=g2)
        grid = squarewell_grid(model, 2001)
        trial = squarewell_trial(model, grid)
        c = chi(trial, grid)
        f0 = GridFunction(grid, np.ones(grid.node_count))
        calE1 = energy_step(f0, trial.h, c)
        calE1_cf, _, _ = first_iterate_closed_form(model)
        assert abs(calE1 - calE1_cf) < 1e-8 * calE1_cf


def test_r_poly_values():
    assert r_poly(2) == [Fraction(0), Fraction(1), Fraction(1, 2)]
    assert r_poly(3) == [Fraction(0), Fraction(2), Fraction(1), Fraction(1, 6)]
    assert r_poly(4) == [Fraction(0), Fraction(5), Fraction(5, 2), Fraction(1, 2), Fraction(1, 24)]


def test_r_poly_recursion_closes_exactly():
    # r_n' - r_n'' = r_{n-1} must hold with exact rational coefficients
    for n in range(1, 7):
        rn = r_poly(n)
        prev = r_poly(n - 1)
        deg = len(rn) - 1
        lhs = [Fraction(0)] * deg
        for j in range(deg):
            lhs[j] = (j + 1) * rn[j + 1]
            if j + 2 <= deg:
                lhs[j] -= (j + 2) * (j + 1) * rn[j + 2]
        lhs = lhs[: len(prev)] + [Fraction(0)] * max(0, len(prev) - len(lhs))
        assert lhs[: len(prev)] == list(prev)


def test_poly_family_scaled():
    p = 0.9
    q = 0.5j / p
    R1 = poly_family_R(1, q)
    assert abs(R1[0]) == 0.0
    assert abs(R1[1] - q) < 1e-15
    # scale relation R_n(x|q) = q^{2n} r_n(x/q)
    R3 = poly_family_R(3, q)
    x = 0.73
    direct = sum(R3[k] * x**k for k in range(len(R3)))
    r3 = r_poly(3)
    scaled = q**6 * sum(float(r3[k]) * (x / q) ** k for k in range(len(r3)))
    assert abs(direct - scaled) < 1e-14 * max(1.0, abs(direct))


def test_assemble_first_iterate_slopes(squarewell_runs):
    m = squarewell_runs["model"]
    rep = squarewell_runs["A"]
    calE1 = rep.states[0].calE
    inner, outer = assemble_iterate_polys(1, m, [calE1])
    assert abs(inner.Q[1] + (0.5 * m.g2 - calE1) / m.p) < 1e-12
    assert abs(outer.Q[1] - calE1 / m.p) < 1e-12
    assert inner.P.size == 2 and abs(inner.P[1]) < 1e-12  # P_1 constant per region


def test_assembled_iterates_match_quadrature(squarewell_runs):
    m = squarewell_runs["model"]
    rep = squarewell_runs["A"]
    grid = rep.states[0].f.grid
    x = grid.nodes
    for n in (1, 2, 3, 4):
        inner, outer = assemble_iterate_polys(n, m, rep.energies()[:n])
        fpoly = np.where(x <= m.l, inner(x), outer(x))
        assert np.max(np.abs(fpoly - rep.states[n - 1].f.values)) < 1e-7


def test_iterate_squarewell_converges(squarewell_runs):
    m = squarewell_runs["model"]
    rep = squarewell_runs["A"]
    E = exact_ground(m)
    assert rep.converged
    assert np.all(np.diff(rep.energies()) > 0.0)
    assert abs(rep.final_E - E) < 1e-6 * abs(E)


def test_iterate_squarewell_beyond_perturbative_radius():
    m = SquareWellModel(L=1.0, l=1.0, g2=4.0)
    rep = iterate_squarewell(m, n_max=50, node_count=2001)
    E = exact_ground(m)
    assert rep.converged and len(rep.states) <= 50
    assert abs(rep.final_E - E) < 1e-6 * abs(E)


def test_iterate_squarewell_zero_depth():
    m = SquareWellModel(L=1.0, l=1.0, g2=0.0)
    rep = iterate_squarewell(m, n_max=4, node_count=801, tol=1e-14)
    assert all(s.calE == 0.0 for s in rep.states)


def test_singularity_locator_imaginary():
    z, g2l2 = singularity_locator("imaginary")
    y = bisect_root(lambda t: t * math.tanh(t) - 1.0, 0.5, 2.0)
    assert abs(z.imag - y) < 1e-10
    assert abs(g2l2 - (1.0 - y * y)) < 1e-10
    assert round(g2l2, 2) == -0.44
    assert residual_z_tan(z) < 1e-12


def test_singularity_locator_real():
    z, g2l2 = singularity_locator("real")
    zr = bisect_root(lambda t: t * math.tan(t) + 1.0, 2.0, 3.0)
    assert abs(z.real - zr) < 1e-10
    assert abs(g2l2 - (1.0 + zr * zr)) < 1e-10
    assert round(g2l2, 1) == 8.8
    assert residual_z_tan(z) < 1e-12


def test_real_root_is_smallest_within_scan():
    # every real zero of z tan z + 1 below 10 sits between consecutive poles
    roots = []
    for k in range(6):
        lo, hi = k * math.pi + math.pi / 2 + 1e-6, (k + 1) * math.pi + math.pi / 2 - 1e-6
        if lo >= 10.0:
            break
        zs = np.linspace(lo, min(hi, 10.0), 400)
        vals = zs * np.tan(zs) + 1.0
        flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        for i in flips:
            roots.append(bisect_root(lambda t: t * math.tan(t) + 1.0, zs[i], zs[i + 1]))
    z, _ = singularity_locator("real")
    assert roots and abs(min(roots) - z.real) < 1e-9
    zi, _ = singularity_locator("imaginary")
    assert abs(zi) < min(roots)  # the imaginary-branch root is nearest among located


def test_perturbative_radius_classification():
    m = SquareWellModel(L=math.inf, l=1.0, g2=1.0)
    rad = perturbative_radius(m)
    assert abs(rad.radius - 0.439228839890645) < 1e-9
    assert rad.classify(0.1) == "inside"
    assert rad.classify(0.44) == "boundary"
    assert rad.classify(1.0) == "outside"
    assert rad.classify(4.0) == "outside"
    with pytest.raises(ValueError):
        perturbative_radius(SquareWellModel(L=1.0, l=1.0, g2=1.0))

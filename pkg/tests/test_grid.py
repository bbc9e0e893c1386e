import math

import numpy as np
import pytest

from gsiter.grid import (
    GridFunction,
    build_grid,
    cumulative_from_tail,
    cumulative_from_zero,
    integrate,
)


def test_breakpoint_becomes_exact_node():
    g = build_grid(1, 10.0, 1001, (1.0,))
    assert 1.0 in g.nodes
    assert g.index_of(1.0) > 0
    assert g.breakpoints == (1.0,)


def test_uniform_grid_three_dimensional():
    g = build_grid(3, 20.0, 2001, ())
    assert g.nodes[0] == 0.0
    assert g.nodes[-1] == 20.0
    assert g.dimension == 3
    assert np.all(np.diff(g.nodes) > 0)


def test_build_grid_preconditions():
    with pytest.raises(ValueError):
        build_grid(1, -1.0, 1001, ())
    with pytest.raises(ValueError):
        build_grid(1, 10.0, 16, ())
    with pytest.raises(ValueError):
        build_grid(1, 10.0, 1001, (12.0,))
    with pytest.raises(ValueError):
        build_grid(1, 10.0, 1001, (0.0,))


def test_integrate_constant():
    g = build_grid(1, 2.0, 101, ())
    assert abs(integrate(GridFunction(g, np.ones(g.node_count))) - 2.0) < 1e-12


def test_integrate_gaussian():
    g = build_grid(1, 10.0, 1001, ())
    val = integrate(GridFunction(g, np.exp(-g.nodes**2)))
    assert abs(val - math.sqrt(math.pi) / 2.0) < 1e-10


def test_integrate_gamma():
    g = build_grid(1, 40.0, 8001, ())
    val = integrate(GridFunction(g, g.nodes**2 * np.exp(-2.0 * g.nodes)))
    assert abs(val - 0.25) < 1e-10


def test_cumulative_from_tail_constant():
    g = build_grid(1, 2.0, 101, ())
    F = cumulative_from_tail(GridFunction(g, np.ones(g.node_count)))
    assert F.values[-1] == 0.0
    assert abs(F.values[0] - 2.0) < 1e-12


def test_cumulative_from_tail_exponential():
    g = build_grid(1, 30.0, 6001, ())
    F = cumulative_from_tail(GridFunction(g, np.exp(-g.nodes)))
    exact = np.exp(-g.nodes) - math.exp(-30.0)
    assert np.max(np.abs(F.values - exact)) < 1e-10


def test_cumulative_from_zero_identity():
    g = build_grid(1, 2.0, 101, ())
    F = cumulative_from_zero(GridFunction(g, np.ones(g.node_count)))
    assert F.values[0] == 0.0
    assert np.max(np.abs(F.values - g.nodes)) < 1e-12
    Fr = cumulative_from_zero(GridFunction(g, g.nodes.copy()))
    assert abs(Fr.values[-1] - 2.0) < 1e-12
    Fz = cumulative_from_zero(GridFunction(g, np.zeros(g.node_count)))
    assert np.all(Fz.values == 0.0)


def test_additivity_of_cumulatives():
    g = build_grid(1, 12.0, 901, (3.0,))
    f = GridFunction(g, np.cos(g.nodes) * np.exp(-0.3 * g.nodes))
    total = integrate(f)
    both = cumulative_from_zero(f).values + cumulative_from_tail(f).values
    assert np.max(np.abs(both - total)) < 1e-12 * (1.0 + abs(total))


def test_integrate_linearity():
    g = build_grid(1, 5.0, 501, ())
    rng = np.random.default_rng(42)
    f = GridFunction(g, rng.standard_normal(g.node_count))
    h = GridFunction(g, rng.standard_normal(g.node_count))
    a, b = 1.7, -2.3
    lin = integrate(GridFunction(g, a * f.values + b * h.values))
    sep = a * integrate(f) + b * integrate(h)
    scale = abs(lin) + abs(sep) + 1.0
    assert abs(lin - sep) < 1e-12 * scale


def test_refinement_reduces_error_by_8x():
    exact = math.log(3.0)
    errs = []
    for n in (101, 201):
        g = build_grid(1, 2.0, n, ())
        errs.append(abs(integrate(GridFunction(g, 1.0 / (1.0 + g.nodes))) - exact))
    assert errs[0] / errs[1] >= 8.0


def test_jump_aware_integration():
    # piecewise constant: 1 below the breakpoint, 0 above, left limit stored
    g = build_grid(1, 2.0, 201, (1.0,))
    j = g.index_of(1.0)
    vals = np.where(g.nodes < 1.0, 1.0, 0.0)
    f = GridFunction(g, vals, left_values={j: 1.0})
    assert abs(integrate(f) - 1.0) < 1e-14
    F = cumulative_from_zero(f)
    assert abs(F.values[j] - 1.0) < 1e-14
    assert abs(F.values[-1] - 1.0) < 1e-14


def test_log_scale_integration():
    g = build_grid(1, 10.0, 1001, ())
    f = GridFunction(g, -g.nodes.copy(), log_scale=True)  # e^{-r}
    assert abs(integrate(f) - (1.0 - math.exp(-10.0))) < 1e-10


def test_grid_function_length_checked():
    g = build_grid(1, 1.0, 101, ())
    with pytest.raises(ValueError):
        GridFunction(g, np.ones(7))

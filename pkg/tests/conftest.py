import math

import numpy as np
import pytest

import gsiter as gs
from gsiter.iterate import iterate_ground
from gsiter.oracle import fd_ground_state
from gsiter.squarewell import SquareWellModel, iterate_squarewell
from gsiter.trial import quartic_problem, quartic_trial


def bisect_root(f, a, b, iters=200):
    """Plain bisection; the independent root oracle used to freeze constants."""
    fa = f(a)
    if fa == 0.0:
        return a
    if fa * f(b) > 0.0:
        raise ValueError("no sign change")
    for _ in range(iters):
        m = 0.5 * (a + b)
        fm = f(m)
        if fa * fm <= 0.0:
            b = m
        else:
            a, fa = m, fm
    return 0.5 * (a + b)


@pytest.fixture(scope="session")
def quartic_run():
    """Case-A run of the g=4 double well, 8 steps, with its grid and trial."""
    grid = gs.build_grid(1, 30.0, 3001, (1.0,))
    trial = quartic_trial(4.0, grid)
    report = iterate_ground(trial, grid, "A", n_max=8, tol=0.0)
    return {"grid": grid, "trial": trial, "report": report}


@pytest.fixture(scope="session")
def quartic_oracle_E():
    """Finite-difference ground energy of the g=4 double well."""
    og = gs.build_grid(1, 6.0, 6001, ())
    return fd_ground_state(quartic_problem(4.0).potential, 1, og, "neumann").energy


@pytest.fixture(scope="session")
def squarewell_runs():
    """Case A and Case B runs of the L = l = 1, g^2 = 1 square well."""
    model = SquareWellModel(L=1.0, l=1.0, g2=1.0)
    rep_a = iterate_squarewell(model, n_max=20, node_count=2001, tol=1e-12)
    rep_b = iterate_squarewell(model, n_max=8, node_count=2001, tol=0.0, case="B")
    return {"model": model, "A": rep_a, "B": rep_b}


def ones_like_run(report):
    grid = report.states[0].f.grid
    return gs.GridFunction(grid, np.ones(grid.node_count))

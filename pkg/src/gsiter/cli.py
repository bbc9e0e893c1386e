"""Command-line orchestration: solve / verify / compare / oracle / greens.

Reports are deterministic machine-readable JSON (or CSV for the iteration
table): no timestamps, keys sorted, the fully resolved configuration and
tolerances embedded. Exit codes: 0 ok, 1 invariant violation, 2
convergence failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import asdict, dataclass

import numpy as np

from . import hierarchy as hch
from .grid import GridFunction, build_grid
from .greens import BoxEigenbasis, defect_check, green_reduced, green_resolvent, green_sturm, mode_sum_kernel
from .iterate import CaseBViolation, RunReport, chi, fixed_point_residual, iterate_ground
from .oracle import fd_ground_state, orthonormal_check
from .squarewell import (
    SquareWellModel,
    exact_ground,
    first_iterate_closed_form,
    iterate_squarewell,
    perturbative_radius,
    squarewell_grid,
    squarewell_trial,
)
from .trial import (
    harmonic_problem,
    harmonic_trial,
    perturbative_energy_quartic,
    quartic_problem,
    quartic_trial,
    verify_trial,
)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONVERGENCE = 2
EXIT_CONFIG = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "quartic"
    g: float | None = None
    a: float = 1.0
    big_l: float | None = None
    l: float | None = None
    g2: float | None = None
    dim: int = 1
    rmax: float | None = None
    nodes: int = 2001
    case: str = "A"
    nmax: int = 50
    tol: float = 1e-9
    fmt: str = "json"
    out: str | None = None
    seed: int = 0
    sweep: str | None = None
    trial_file: str | None = None
    inject_corruption: bool = False

    def validate(self):
        if self.problem not in ("quartic", "squarewell", "harmonic", "custom"):
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.case.upper() not in ("A", "B"):
            raise ConfigError(f"case must be A or B, got {self.case!r}")
        if self.fmt not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.fmt!r}")
        for name in ("g", "a", "big_l", "l", "g2", "rmax", "tol"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(float(v)):
                if name == "big_l" and float(v) == math.inf:
                    continue
                raise ConfigError(f"{name} must be finite, got {v}")
        if self.problem == "quartic" and self.g is None:
            raise ConfigError("quartic problem needs --g")
        if self.problem == "harmonic" and self.g is None:
            raise ConfigError("harmonic problem needs --g")
        if self.problem == "squarewell" and (self.l is None or self.g2 is None):
            raise ConfigError("squarewell problem needs --l and --g2")
        if self.problem == "custom" and not self.trial_file:
            raise ConfigError("custom problem needs --trial-file")
        if self.nodes < 17:
            raise ConfigError("need at least 17 nodes")
        if self.nmax < 1:
            raise ConfigError("nmax must be >= 1")


def _resolved(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["case"] = cfg.case.upper()
    d.pop("out", None)  # transport detail; reports stay byte-identical across paths
    return d


def _build_run_inputs(cfg: RunConfig):
    """(trial, grid, oracle energy or None) for the configured problem."""
    if cfg.problem == "quartic":
        rmax = cfg.rmax if cfg.rmax is not None else 30.0
        grid = build_grid(1, rmax, cfg.nodes, (1.0 * cfg.a,))
        if cfg.a != 1.0:
            raise ConfigError("the quartic trial is built at a = 1 (rescale the coupling instead)")
        trial = quartic_trial(cfg.g, grid)
        og = build_grid(1, min(rmax, 6.0), max(cfg.nodes, 4001), ())
        E_ref = fd_ground_state(quartic_problem(cfg.g).potential, 1, og, "neumann").energy
        return trial, grid, E_ref
    if cfg.problem == "harmonic":
        rmax = cfg.rmax if cfg.rmax is not None else 12.0
        grid = build_grid(cfg.dim, rmax, cfg.nodes, ())
        trial = harmonic_trial(cfg.g, grid, cfg.dim)
        return trial, grid, 0.5 * cfg.dim * cfg.g
    if cfg.problem == "squarewell":
        L = cfg.big_l if cfg.big_l is not None else 1.0
        model = SquareWellModel(L=L, l=cfg.l, g2=cfg.g2)
        grid = squarewell_grid(model, cfg.nodes)
        trial = squarewell_trial(model, grid)
        return trial, grid, exact_ground(model)
    # custom tabulated trial: JSON with nodes, log_phi, h, E0, dim, breakpoints
    with open(cfg.trial_file) as fh:
        data = json.load(fh)
    from .grid import RadialGrid
    from .trial import TrialFunction

    nodes = np.asarray(data["nodes"], dtype=float)
    bps = tuple(data.get("breakpoints", ()))
    edges = [0] + [int(np.argmin(np.abs(nodes - b))) for b in bps] + [nodes.size - 1]
    grid = RadialGrid(int(data.get("dim", 1)), nodes, bps, tuple(sorted(set(edges))))
    phi = GridFunction(grid, np.asarray(data["log_phi"], dtype=float), log_scale=True)
    h = GridFunction(grid, np.asarray(data["h"], dtype=float))
    trial = TrialFunction(phi, h, E0=float(data["E0"]), h_breakpoints=bps)
    return trial, grid, data.get("E_ref")


def _write_report(payload: dict, cfg: RunConfig):
    text: str
    if cfg.fmt == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    else:
        rows = payload.get("iterations", [])
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "calE", "E", "charge_residual", "f_min", "f_max"])
        for r in rows:
            writer.writerow([r["n"], repr(r["calE"]), repr(r["E"]), repr(r["charge_residual"]), repr(r["f_min"]), repr(r["f_max"])])
        text = buf.getvalue()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_payload(cfg: RunConfig, report: RunReport, checks: list[dict], E_ref) -> dict:
    return {
        "config": _resolved(cfg),
        "iterations": report.records(),
        "checks": checks,
        "converged": report.converged,
        "final_E": report.final_E,
        "E0": report.E0,
        "oracle_E": E_ref,
        "violations": report.violations,
    }


def run_solve(cfg: RunConfig) -> int:
    cfg.validate()
    trial, grid, E_ref = _build_run_inputs(cfg)
    report = iterate_ground(trial, grid, cfg.case, n_max=cfg.nmax, tol=cfg.tol)
    checks = []
    ok = True
    if len(report.states) >= 3:
        v = hch.check_energy_monotone(report)
        for c in v.checks:
            checks.append({"name": c.name, "pass": c.passed, "margin": c.margin})
        ok &= v.passed
        if E_ref is not None:
            vb = hch.check_bounds(report, float(E_ref))
            for c in vb.checks:
                checks.append({"name": c.name, "pass": c.passed, "margin": c.margin})
            ok &= vb.passed
    ok &= not report.violations
    _write_report(_report_payload(cfg, report, checks, E_ref), cfg)
    if not report.converged:
        return EXIT_CONVERGENCE
    return EXIT_OK if ok else EXIT_INVARIANT


def run_verify(cfg: RunConfig) -> int:
    cfg.validate()
    trial, grid, E_ref = _build_run_inputs(cfg)
    if cfg.inject_corruption:
        trial.h.values = trial.h.values + 0.1 * (grid.nodes / grid.r_max)  # breaks monotone decrease
    checks = []

    def record(name, passed, margin):
        checks.append({"name": name, "pass": bool(passed), "margin": float(margin)})

    try:
        report = iterate_ground(trial, grid, cfg.case, n_max=max(cfg.nmax, 8), tol=0.0)
    except (ValueError, CaseBViolation) as exc:
        record(f"iteration admissible ({exc})", False, math.nan)
        payload = {"config": _resolved(cfg), "checks": checks, "pass": False}
        _write_report(payload, cfg)
        return EXIT_INVARIANT

    exact = float(np.max(np.abs(trial.h.values))) == 0.0
    res = max(s.charge_residual for s in report.states)
    record("zero total charge after every energy step", res < 1e-10, 1e-10 - res)
    if not exact:
        inb = all(0.0 < s.calE < trial.h0 for s in report.states)
        record("calE within (0, h(0))", inb, min((trial.h0 - s.calE) * (s.calE) for s in report.states))
    if len(report.states) >= 3:
        v = hch.check_energy_monotone(report)
        record("energy monotonicity pattern", v.passed, min(c.margin for c in v.checks))
        f_list = [GridFunction(grid, np.ones(grid.node_count))] + [s.f for s in report.states]
        v2 = hch.check_ratio_monotone(f_list, cfg.case)
        record("ratio monotonicity pattern", v2.passed, min(c.margin for c in v2.checks))
        if E_ref is not None:
            vb = hch.check_bounds(report, float(E_ref))
            record("bound structure vs oracle", vb.passed, min(c.margin for c in vb.checks))
    if not exact:
        ch = chi(trial, grid)
        last = report.states[-1]
        fres = fixed_point_residual(last.f, last.calE, ch, trial.h, cfg.case)
        gap = abs(last.calE - report.states[-2].calE) if len(report.states) >= 2 else cfg.tol
        record("fixed-point residual at final iterate", fres < max(50.0 * gap, 1e-8), fres)

    passed = all(c["pass"] for c in checks)
    payload = {"config": _resolved(cfg), "checks": checks, "pass": passed}
    _write_report(payload, cfg)
    return EXIT_OK if passed else EXIT_INVARIANT


def run_greens(cfg: RunConfig) -> int:
    if cfg.nodes < 17:
        raise ConfigError("need at least 17 nodes")
    if cfg.fmt not in ("json", "csv"):
        raise ConfigError(f"format must be json or csv, got {cfg.fmt!r}")
    R = cfg.rmax if cfg.rmax is not None else 2.0
    grid = build_grid(1, R, cfg.nodes, ())
    basis = BoxEigenbasis(R, 200)
    checks = []
    for maker, name in ((green_sturm, "sturm"), (green_reduced, "reduced")):
        rep = defect_check(maker(R, grid), basis)
        bound = 1e-6 / rep.dx
        checks.append({"name": f"{name} kernel defect", "pass": rep.offdiag_max < bound, "margin": bound - rep.offdiag_max})
    lam = basis.energy(0) / 2.0
    rep = defect_check(green_resolvent(R, lam, grid), basis)
    checks.append({"name": "resolvent kernel defect", "pass": rep.offdiag_max < 1e-6 / rep.dx, "margin": 1e-6 / rep.dx - rep.offdiag_max})
    dev = orthonormal_check(basis, grid)
    checks.append({"name": "mode orthonormality", "pass": dev < 1e-6, "margin": 1e-6 - dev})
    passed = all(c["pass"] for c in checks)
    _write_report({"config": _resolved(cfg), "checks": checks, "pass": passed}, cfg)
    return EXIT_OK if passed else EXIT_INVARIANT


def run_oracle(cfg: RunConfig) -> int:
    cfg.validate()
    trial, grid, E_ref = _build_run_inputs(cfg)
    payload = {"config": _resolved(cfg), "oracle_E": E_ref}
    _write_report(payload, cfg)
    return EXIT_OK


def run_compare(cfg: RunConfig) -> int:
    if cfg.problem == "squarewell":
        cfg.l = cfg.l if cfg.l is not None else 1.0
        cfg.g2 = cfg.g2 if cfg.g2 is not None else 0.0  # per-row depth comes from the sweep
    cfg.validate()
    rows = []
    if cfg.problem == "quartic":
        trial, grid, E_ref = _build_run_inputs(cfg)
        report = iterate_ground(trial, grid, "A", n_max=cfg.nmax, tol=cfg.tol)
        sums = perturbative_energy_quartic(cfg.g, cfg.a, 4)
        for rec in report.records():
            rows.append(
                {
                    "n": rec["n"],
                    "E_n": rec["E"],
                    "oracle_E": E_ref,
                    "series_order2": sums[1],
                    "series_order4": sums[3],
                }
            )
    else:
        if not cfg.sweep:
            raise ConfigError("compare needs --sweep with a non-empty list of g2*l^2 values")
        vals = [float(s) for s in cfg.sweep.split(",") if s.strip()]
        if not vals:
            raise ConfigError("empty sweep list")
        l = cfg.l if cfg.l is not None else 1.0
        L = cfg.big_l if cfg.big_l is not None else 1.0
        radius = perturbative_radius(SquareWellModel(L=math.inf, l=l, g2=1.0))
        for g2l2 in vals:
            g2 = g2l2 / l**2
            model = SquareWellModel(L=L, l=l, g2=g2)
            rep = iterate_squarewell(model, n_max=cfg.nmax, node_count=cfg.nodes, tol=cfg.tol)
            E_inf = exact_ground(SquareWellModel(L=math.inf, l=l, g2=g2)) if g2 > 0 else 0.0
            rows.append(
                {
                    "g2l2": g2l2,
                    "radius_verdict": radius.classify(g2l2),
                    "iter_converged": rep.converged,
                    "iter_calE_trajectory": [round(c, 12) for c in rep.energies()[:10]],
                    "E_finite_L": exact_ground(model),
                    "E_iter": rep.final_E,
                    "E_infinite_L": E_inf,
                }
            )
    payload = {"config": _resolved(cfg), "rows": rows, "perturbative_radius": None}
    if cfg.problem != "quartic":
        payload["perturbative_radius"] = radius.radius
    if cfg.fmt == "csv":
        import io

        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        writer.writeheader()
        for r in rows:
            writer.writerow(r)
        text = buf.getvalue()
        if cfg.out:
            with open(cfg.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    else:
        _write_report(payload, cfg)
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gsiter", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "verify", "compare", "oracle", "greens"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--problem", choices=["quartic", "squarewell", "harmonic", "custom"])
        p.add_argument("--g", type=float)
        p.add_argument("--a", type=float)
        p.add_argument("--big-l", dest="big_l", type=float)
        p.add_argument("--l", type=float)
        p.add_argument("--g2", type=float)
        p.add_argument("--dim", type=int)
        p.add_argument("--rmax", type=float)
        p.add_argument("--nodes", type=int)
        p.add_argument("--case", choices=["a", "b", "A", "B"])
        p.add_argument("--nmax", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--format", dest="fmt", choices=["json", "csv"])
        p.add_argument("--out")
        p.add_argument("--seed", type=int)
        p.add_argument("--sweep", help="comma-separated g2*l^2 values (compare)")
        p.add_argument("--trial-file", dest="trial_file")
        p.add_argument("--inject-corruption", dest="inject_corruption", action="store_true", default=None)
    return ap


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        with open(args.config) as fh:
            file_vals = json.load(fh)
        for k, v in file_vals.items():
            key = {"format": "fmt", "big-l": "big_l", "trial-file": "trial_file"}.get(k, k)
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config key {k!r}")
            setattr(cfg, key, v)
    for key in vars(cfg):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    cfg.case = cfg.case.upper()
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    dispatch = {
        "solve": run_solve,
        "verify": run_verify,
        "compare": run_compare,
        "oracle": run_oracle,
        "greens": run_greens,
    }
    try:
        cfg = _config_from_args(args)
        return dispatch[args.command](cfg)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CaseBViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front door: selftest | simulate | verify <name> | growth.

Every run is a deterministic function of (config, seed, code version):
no timestamps or environment lookups enter the outputs, numeric CSV
fields use shortest round-trip decimals, and JSON is key-sorted, so
repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import importlib.resources
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import PhnlsError, ResolutionError
from . import estlab, growth, io as pio
from .evolve import DEFOCUSING, InitialData, SimConfig, linear_propagate, simulate
from .spectral import (
    BasisSpec,
    Multiplier,
    SpectralField,
    apply_multiplier,
    lp_project,
    make_spec,
    to_physical,
    to_spectral,
)

VERIFY_NAMES = (
    "strichartz",
    "bernstein",
    "bilinear-h1",
    "bilinear-l2",
    "bilinear-bourgain",
    "almost-orth",
    "trilinear",
)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _schema():
    with importlib.resources.files("phnls").joinpath("config_schema.json").open() as fh:
        return json.load(fh)


def load_config(path: str) -> dict:
    """Read and schema-validate a run configuration file."""
    import jsonschema

    with open(path) as fh:
        cfg = json.load(fh)
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise PhnlsError(f"config error at {where}: {err.message}")
    return cfg


def _spec_from(cfg: dict) -> BasisSpec:
    b = cfg.get("basis", {})
    return make_spec(
        Lx=b.get("Lx", 16.0),
        Nx=b.get("Nx", 256),
        K=b.get("K", 128),
        quad_nodes=b.get("quad_nodes"),
    )


def _sim_from(cfg: dict, spec: BasisSpec, seed_override=None) -> SimConfig:
    s = cfg.get("sim", {})
    init = dict(s.get("initial", {}))
    if "coefficients_file" in init:
        init["coefficients"] = pio.read_field(init.pop("coefficients_file")).c
        init.setdefault("kind", "explicit")
    seed = seed_override if seed_override is not None else s.get("seed", 0)
    return SimConfig(
        spec=spec,
        sign=s.get("sign", DEFOCUSING),
        coupling=s.get("coupling", 1.0),
        dt=s.get("dt", 1e-3),
        t_end=s.get("t_end", 1.0),
        stride=s.get("stride", 10),
        initial=InitialData(**init),
        seed=seed,
    )


def _plan_from(cfg: dict, seed_override=None, threads=1) -> estlab.SweepPlan:
    s = dict(cfg.get("sweep", {}))
    s.pop("q", None), s.pop("r", None), s.pop("p", None), s.pop("s", None)
    if "N_values" in s:
        s["N_values"] = tuple(s["N_values"])
    if "lambda0_values" in s:
        s["lambda0_values"] = tuple(s["lambda0_values"])
    if seed_override is not None:
        s["seed"] = seed_override
    s["threads"] = threads
    return estlab.SweepPlan(**s)


# ---------------------------------------------------------------------------
# selftest
# ---------------------------------------------------------------------------


def run_selftest(spec: BasisSpec | None = None) -> list:
    """Fast invariant suite; returns [(name, passed, detail), ...].

    ``spec`` is injectable so corrupted fixtures can be exercised.
    """
    checks = []
    sp = spec if spec is not None else make_spec(Lx=8.0, Nx=64, K=32)

    G = sp.basis.table @ sp.basis.analysis
    err = float(np.abs(G - np.eye(sp.K)).max())
    checks.append(("discrete-orthonormality", err <= 1e-9, f"max deviation {err:.3e}"))

    rng = np.random.default_rng(0)
    c = rng.normal(size=(sp.Nx, sp.K)) + 1j * rng.normal(size=(sp.Nx, sp.K))
    c *= sp.lam ** (-1.5)
    f = SpectralField(sp, c / np.linalg.norm(c))
    back = to_spectral(to_physical(f), sp)
    err = float(np.abs(back.c - f.c).max())
    checks.append(("transform-roundtrip", err <= 1e-10, f"max deviation {err:.3e}"))

    n_max = 1
    while n_max**2 < 2 * sp.lam_max:
        n_max *= 2
    total = lp_project(f, 1, "S").c.copy()
    N = 2
    while N <= n_max:
        total += lp_project(f, N, "delta").c
        N *= 2
    err = float(np.abs(total - f.c).max())
    checks.append(("projector-telescoping", err <= 1e-12, f"max deviation {err:.3e}"))

    g = lp_project(lp_project(f, 16, "delta"), 4, "delta")
    err = float(np.abs(g.c).max())
    checks.append(("projector-disjoint-blocks", err <= 1e-14, f"max leak {err:.3e}"))

    m1 = Multiplier.a_power(0.6)
    m2 = Multiplier.heat(0.25)
    once = apply_multiplier(f, m1 * m2)
    twice = apply_multiplier(apply_multiplier(f, m2), m1)
    err = float(np.abs(once.c - twice.c).max())
    checks.append(("multiplier-functoriality", err <= 1e-15, f"max deviation {err:.3e}"))

    prop = linear_propagate(f, 0.37)
    err = abs(prop.norm() - f.norm())
    checks.append(("linear-isometry", err <= 1e-13, f"norm drift {err:.3e}"))

    cfg = SimConfig(sp, dt=1e-3, t_end=1.0, stride=100)
    res = simulate(cfg)
    mass = res.observables["mass"]
    drift = float(np.abs(mass - mass[0]).max() / mass[0])
    checks.append(("mass-conservation-1s", drift <= 1e-10, f"relative drift {drift:.3e}"))

    return checks


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_selftest(args) -> int:
    checks = run_selftest()
    if args.json:
        payload = {
            "version": __version__,
            "checks": [
                {"name": n, "passed": bool(p), "detail": d} for n, p, d in checks
            ],
            "passed": all(p for _, p, _ in checks),
        }
        print(json.dumps(payload, sort_keys=True))
    else:
        for name, passed, detail in checks:
            print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    failed = [n for n, p, _ in checks if not p]
    if failed:
        if not args.json:
            print("failed checks: " + ", ".join(failed))
        return 1
    return 0


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    spec = _spec_from(cfg)
    sim = _sim_from(cfg, spec, args.seed)
    try:
        res = simulate(sim)
    except ResolutionError as exc:
        bound = math.pi / spec.lam_max
        print(
            f"error: {exc}\nhint: with this basis, dt must be <= {bound:.4g} "
            "(reduce sim.dt or the basis size)",
            file=sys.stderr,
        )
        return 2
    out = args.out or cfg.get("out_dir", ".")
    os.makedirs(out, exist_ok=True)
    echo = {"config": cfg, "seed": sim.seed, "version": __version__}
    pio.write_trajectory(os.path.join(out, "trajectory"), res.trajectory, echo)
    pio.write_csv(os.path.join(out, "observables.csv"), res.observables)
    print(os.path.join(out, "observables.csv"))
    return 0


def _write_report(report, out_dir, stem, formats):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    if "json" in formats:
        p = os.path.join(out_dir, stem + ".json")
        pio.write_json(p, report.to_json_dict())
        paths.append(p)
    if "csv" in formats:
        p = os.path.join(out_dir, stem + ".csv")
        pio.write_csv(p, report.csv_columns())
        paths.append(p)
    return paths


def _cmd_verify(args) -> int:
    if args.estimate not in VERIFY_NAMES:
        print(
            f"unknown estimate {args.estimate!r}; valid names: "
            + " ".join(VERIFY_NAMES),
            file=sys.stderr,
        )
        return 2
    cfg = load_config(args.config) if args.config else {}
    plan = _plan_from(cfg, args.seed, args.threads)
    sweep = cfg.get("sweep", {})
    spec = _spec_from(cfg) if "basis" in cfg else None
    name = args.estimate
    if name == "strichartz":
        q = sweep.get("q", 4.0)
        q = math.inf if q in ("inf", "Infinity") else float(q)
        report = estlab.verify_strichartz(spec, q, float(sweep.get("r", 4.0)), plan)
    elif name == "bernstein":
        report = estlab.verify_bernstein(
            spec, float(sweep.get("p", 2.0)), float(sweep.get("r", sweep.get("q", 4.0))),
            float(sweep.get("s", 0.0)), plan
        )
    elif name == "bilinear-h1":
        report = estlab.verify_bilinear_h1(spec, plan)
    elif name == "bilinear-l2":
        report = estlab.verify_bilinear_l2(spec, plan)
    elif name == "bilinear-bourgain":
        report = estlab.verify_bilinear_bourgain(spec, plan)
    elif name == "almost-orth":
        report = estlab.verify_almost_orthogonality(spec, plan, diagnostic=True)
    else:
        report = estlab.verify_trilinear(spec, plan)
    report.plan["config"] = cfg
    out = args.out or cfg.get("out_dir", ".")
    formats = cfg.get("formats", ["json", "csv"])
    paths = _write_report(report, out, f"estimate_{name}_seed{plan.seed}", formats)
    summary = {"experiment": name, "verdict": report.verdict, "files": paths}
    if args.json:
        print(json.dumps(summary, sort_keys=True))
    else:
        print(f"{name}: {report.verdict}")
        for p in paths:
            print(p)
    return 0 if report.verdict in ("PASS", "INCONCLUSIVE") else 1


def _cmd_growth(args) -> int:
    cfg = load_config(args.config) if args.config else {}
    gcfg = cfg.get("growth", {})
    basis = cfg.get("basis")
    spec = _spec_from(cfg) if basis is not None else make_spec(Lx=16.0, Nx=128, K=64)
    sim = _sim_from(cfg, spec, args.seed)
    report = growth.track_growth(
        sim,
        k=gcfg.get("k", 1),
        horizon=gcfg.get("horizon", 100.0),
        stride=gcfg.get("stride", 100),
    )
    out = args.out or cfg.get("out_dir", ".")
    os.makedirs(out, exist_ok=True)
    stem = report.file_stem()
    formats = cfg.get("formats", ["json", "csv"])
    paths = []
    if "json" in formats:
        p = os.path.join(out, stem + ".json")
        payload = report.to_json_dict()
        payload["config"] = cfg
        pio.write_json(p, payload)
        paths.append(p)
    if "csv" in formats:
        p = os.path.join(out, stem + ".csv")
        pio.write_csv(p, report.series)
        paths.append(p)
    if args.json:
        print(json.dumps({"verdict": report.verdict, "alpha": report.alpha, "files": paths}, sort_keys=True))
    else:
        print(f"growth k={report.k}: alpha = {report.alpha:.4f} "
              f"(bound {report.bound:.4f}) -> {report.verdict}")
        for p in paths:
            print(p)
    return 0 if report.verdict == "PASS" else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="phnls",
        description="Pseudospectral lab for the 2D cubic NLS with partial harmonic potential",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="seed override")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--json", action="store_true", help="machine-readable summary")

    p = sub.add_parser("selftest", parents=[common], help="fast invariant suite")
    p.set_defaults(fn=_cmd_selftest)
    p = sub.add_parser("simulate", parents=[common], help="split-step run")
    p.set_defaults(fn=_cmd_simulate)
    p = sub.add_parser("verify", parents=[common], help="estimate experiment")
    p.add_argument("estimate", help="one of: " + " ".join(VERIFY_NAMES))
    p.set_defaults(fn=_cmd_verify)
    p = sub.add_parser("growth", parents=[common], help="Sobolev growth run")
    p.set_defaults(fn=_cmd_growth)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PhnlsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

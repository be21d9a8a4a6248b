"""Command-line entry point.

    dislab <energy|forces|flow|verify|dump-config> --config PATH [--out DIR] [--threads N]

Exit status: 0 success, 1 usage or config error, 2 a numerical check failed,
3 a solver failed.  ``DISLAB_SEED`` overrides the seed of randomized suites.
"""

import argparse
import csv
import os
import sys
from pathlib import Path

import numpy as np

from . import kernels
from .config import RunConfig, dump_config, load_config, with_overrides
from .dynamics import evolve
from .energy import regularized_energy
from .errors import (ConfigError, DislabError, MeshFailure, QuadratureFailure, SolverFailure,
                     StepCollapse)
from .problem import Problem
from .verify import SUITES, run_suites

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_SOLVER = 0, 1, 2, 3

ENERGY_COLUMNS = ["system_id", "param", "param_value", "core_coefficient", "U_S", "U_I", "U_E",
                  "U_total", "J_eps", "residual"]
FORCE_COLUMNS = ["system_id", "index", "route", "f_x", "f_y", "R", "discrepancy"]
VERIFY_COLUMNS = ["check", "value_lhs", "value_rhs", "abs_diff", "tolerance", "passed"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser():
    p = _Parser(prog="dislab", description="Screw-dislocation energies, forces and dynamics.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in (("energy", "renormalized energy and optional eps ladder"),
                       ("forces", "Peach-Koehler forces by both routes"),
                       ("flow", "gradient-flow trajectory"),
                       ("verify", "run verification suites"),
                       ("dump-config", "print the effective configuration")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=name not in ("verify", "dump-config"),
                       help="TOML run configuration")
        s.add_argument("--out", help="output directory (overrides output.dir)")
        s.add_argument("--threads", type=int, help="worker threads (default 1)")
        if name == "verify":
            s.add_argument("--suite", action="append",
                           help=f"suite name, repeatable ({', '.join(SUITES)}, all)")
    return p


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _problem(cfg):
    return Problem(cfg.material, cfg.geom, cfg.backend, cfg.resolution)


def cmd_energy(cfg, out):
    prob = _problem(cfg)
    sys_ = cfg.system
    resp = prob.solve(sys_)
    bd = prob.energy(sys_, R=cfg.energy.R or None, response=resp)
    base = [cfg.system_id]
    rows = [base + ["R", bd.R_used, bd.core_coefficient, bd.U_S, bd.U_I, bd.U_E, bd.U_total,
                    "", ""]]
    for eps in cfg.energy.eps_ladder:
        j = regularized_energy(prob.material, sys_, prob.geom, resp, eps)
        res = j - bd.core_coefficient * np.log(1.0 / eps) - bd.U_total
        rows.append(base + ["eps", eps, bd.core_coefficient, bd.U_S, bd.U_I, bd.U_E, bd.U_total,
                            j, res])
    path = write_csv(out / "energy.csv", ENERGY_COLUMNS, rows)
    print(f"U_total = {bd.U_total:.12g}  (core coefficient {bd.core_coefficient:.12g}); "
          f"wrote {path}")
    return EXIT_OK


def cmd_forces(cfg, out):
    prob = _problem(cfg)
    sys_ = cfg.system
    rep = prob.forces(sys_, R=cfg.forces.R or None)
    rows = []
    for i in range(len(sys_)):
        d = rep.discrepancy[i]
        rows.append([cfg.system_id, i, "contour", *rep.contour[i], rep.R[i], d])
        rows.append([cfg.system_id, i, "explicit", *rep.explicit[i], "", d])
    path = write_csv(out / "forces.csv", FORCE_COLUMNS, rows)
    worst = float(np.max(rep.relative_discrepancy, initial=0.0))
    print(f"max relative route discrepancy {worst:.3e}; wrote {path}")
    if worst > cfg.forces.max_discrepancy:
        print(f"check failed: route discrepancy {worst:.3e} exceeds forces.max_discrepancy "
              f"{cfg.forces.max_discrepancy:g}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_flow(cfg, out):
    prob = _problem(cfg)
    fl = cfg.flow
    traj = evolve(prob, cfg.system, fl.dt, fl.max_steps, fl.force_tol, fl.margin,
                  list(fl.mobility) or None)
    rows = traj.rows()
    path = write_csv(out / "trajectory.csv", rows[0], rows[1:])
    print(f"{len(traj) - 1} step(s), stopped by {traj.reason}; wrote {path}")
    return EXIT_OK


def seed_from_env(default):
    raw = os.environ.get("DISLAB_SEED")
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"DISLAB_SEED must be an integer, got {raw!r}") from None


def cmd_verify(cfg, out, suites=None):
    names = suites or list(cfg.verify.suites)
    unknown = [n for n in names if n not in SUITES and n != "all"]
    if unknown:
        print(f"unknown suite(s): {', '.join(unknown)}; available: {', '.join(SUITES)}, all",
              file=sys.stderr)
        return EXIT_CONFIG
    rng = np.random.default_rng(seed_from_env(cfg.verify.seed))
    results = run_suites(names, rng)
    rows = [[r.check, r.value_lhs, r.value_rhs, r.abs_diff, r.tolerance, r.passed]
            for r in results]
    path = write_csv(out / "verify.csv", VERIFY_COLUMNS, rows)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed; wrote {path}")
    for r in failed:
        print(f"check failed: {r.check}: |{r.value_lhs:.6g} - {r.value_rhs:.6g}| = "
              f"{r.abs_diff:.3e} > {r.tolerance:.3e}", file=sys.stderr)
    return EXIT_CHECK if failed else EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config, check_admissible=args.command not in ("verify",))
        else:
            cfg = RunConfig()
        cfg = with_overrides(cfg, out_dir=args.out, threads=args.threads)
        if cfg.threads < 1:
            raise ConfigError("--threads must be >= 1")
        kernels.set_threads(cfg.threads)
        out = Path(cfg.out_dir)
        if args.command == "dump-config":
            text = dump_config(cfg)
            if args.out:
                out.mkdir(parents=True, exist_ok=True)
                (out / "config.toml").write_text(text)
            else:
                sys.stdout.write(text)
            return EXIT_OK
        if args.command == "verify":
            return cmd_verify(cfg, out, args.suite)
        return {"energy": cmd_energy, "forces": cmd_forces, "flow": cmd_flow}[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, QuadratureFailure, MeshFailure, StepCollapse) as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except DislabError as exc:
        print(f"check failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line front end: ``cavity-cz <subcommand> [--config FILE] [--out DIR]``.

Exit codes: 0 success, 2 invalid configuration or arguments, 3 a check failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import CavityError, InfeasibleControlError, InvalidArgumentError
from .experiments import (ABSORB_CASES, SweepConfig, absorb_traces, f1_sweep, gate_sweep,
                          load_config, oracle_suite, write_manifest, write_materials)
from .materials import MaterialSpec

log = logging.getLogger("cavity_cz")

EXIT_OK, EXIT_INVALID, EXIT_CHECK = 0, 2, 3

F1_DEFAULTS = {"T_over_tau": [14.4],
               "gamma_over_omega": [2, 3, 4, 6, 10, 15, 20, 30, 50],
               "gamma_L_over_omega": [0.0, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2]}
GATE_DEFAULTS = {
    3: {"gamma_over_omega": [30.0],
        "T_over_tau": [8, 10, 12, 14, 17, 20, 24, 29, 35, 42, 50, 60, 80],
        "gamma_L_over_omega": [0.0, 1e-5, 3.16e-5, 1e-4, 3.16e-4, 1e-3]},
    2: {"gamma_over_omega": [6.0],
        "T_over_tau": [5, 6, 7, 8, 9, 10, 12, 14, 17, 20, 24, 29, 35, 42, 50, 60, 80],
        "gamma_L_over_omega": [0.0, 1e-5, 3.16e-5, 1e-4, 3.16e-4, 1e-3]},
}


def _sweep_config(args, defaults: dict) -> SweepConfig:
    data = dict(defaults)
    if args.config:
        data.update(load_config(args.config))
    return SweepConfig.from_mapping(data, out=args.out, workers=args.workers,
                                    dt_over_tau=args.dt_over_tau, kappa_xpm=args.kappa_xpm,
                                    k=getattr(args, "k", None))


def cmd_absorb(args) -> int:
    data = load_config(args.config) if args.config else {}
    cases = [tuple(c) for c in data.get("cases", ABSORB_CASES)]
    dt = args.dt_over_tau or data.get("dt_over_tau", 0.01)
    kappa = args.kappa_xpm if args.kappa_xpm is not None else data.get("kappa_xpm", 2.0)
    summary = absorb_traces(args.out, cases, dt, kappa)
    for s in summary:
        print(f"k={s['k']} gamma/Omega_G={s['gamma_over_omega']:g}: "
              f"P01={s['P01_final']:.8f} centroid={s['spectral_centroid']:+.4f} "
              f"rms width={s['spectral_rms_width']:.4f}")
    write_manifest(args.out, "absorb", {"cases": cases, "dt_over_tau": dt, "kappa_xpm": kappa},
                   {"summary": summary})
    return EXIT_OK


def cmd_f1_sweep(args) -> int:
    cfg = _sweep_config(args, F1_DEFAULTS)
    rows = f1_sweep(cfg)
    bad = sum(r["status"] != "ok" for r in rows)
    print(f"{len(rows)} rows written to {cfg.out} ({bad} infeasible)")
    write_manifest(cfg.out, f"f1_sweep_k{cfg.k}", cfg.to_dict())
    return EXIT_OK


def cmd_gate_sweep(args) -> int:
    k = args.k if args.k is not None else (load_config(args.config).get("k", 3)
                                           if args.config else 3)
    cfg = _sweep_config(args, dict(GATE_DEFAULTS[k], k=k))
    rows, summaries = gate_sweep(cfg)
    for s in summaries:
        print(json.dumps(s.to_dict(), indent=1, default=float))
    write_manifest(cfg.out, f"gate_sweep_k{cfg.k}", cfg.to_dict(),
                   {"summaries": [s.to_dict() for s in summaries]})
    return EXIT_OK


def cmd_materials(args) -> int:
    data = load_config(args.config) if args.config else {}
    extra = [(MaterialSpec.from_dict(m["spec"]), int(m["k"]))
             for m in data.get("materials", [])]
    volumes = tuple(data.get("volumes", (1e-3, 0.5)))
    target = float(data.get("target_error", 0.01))
    rows = write_materials(args.out, volumes, target, extra)
    print(f"{'material':8s} {'k':>2s} {'script_C':>10s} {'V':>7s} {'Q_L':>10s}")
    for r in rows:
        print(f"{r['material']:8s} {r['k']:2d} {r['script_C']:10.3e} {r['v_norm']:7.3g} "
              f"{r['Q_L']:10.3e}")
    write_manifest(args.out, "materials", {"volumes": volumes, "target_error": target})
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    data = load_config(args.config) if args.config else {}
    n_bins = int(data.get("n_bins", 48))
    if n_bins > 48:
        raise InvalidArgumentError("the oracle check runs at N <= 48")
    cases = oracle_suite(n_bins)
    for c in cases:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status} {c.name:16s} N={c.n_bins:3d} max diff {c.max_diff:.3e} "
              f"(bound {c.bound:.0e}) {c.seconds:.2f}s")
    ok = all(c.passed for c in cases)
    write_manifest(args.out, "oracle_check", {"n_bins": n_bins},
                   {"cases": [dict(vars(c), passed=c.passed) for c in cases]})
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {"absorb": cmd_absorb, "f1-sweep": cmd_f1_sweep, "gate-sweep": cmd_gate_sweep,
            "materials": cmd_materials, "oracle-check": cmd_oracle_check}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavity-cz", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="YAML or JSON key-value file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--workers", type=int, default=None, help="worker processes")
        p.add_argument("--dt-over-tau", type=float, default=None)
        p.add_argument("--kappa-xpm", type=float, default=None)
        if name in ("f1-sweep", "gate-sweep"):
            p.add_argument("--k", type=int, choices=(2, 3), default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InvalidArgumentError, InfeasibleControlError, FileNotFoundError) as exc:
        log.error("%s", exc)
        if isinstance(exc, InfeasibleControlError) and exc.diagnostics:
            log.error("diagnostics: %s", exc.diagnostics)
        return EXIT_INVALID
    except CavityError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())

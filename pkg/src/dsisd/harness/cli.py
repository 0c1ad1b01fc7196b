"""Command-line entry point.

Subcommands write CSV files into ``--out``:

* ``run``          trace.csv (one solve)
* ``ber``          ber_<scheme>.csv
* ``psf``          psf_<scheme>.csv and psf_<scheme>_widths.csv
* ``complexity``   complexity.csv
* ``convergence``  convergence.csv (DSISD residuals and Q per SNR)

On failure a single JSON line ``{"error": ..., "message": ...}`` goes to
stderr and the exit status is nonzero (2 for configuration errors).
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .complexity import complexity_report
from .config import ConfigError, ExperimentConfig, default_config_path, load_config, parse_float_list
from .csvout import fmt, provenance, write_csv
from .experiments import SCHEMES, ber_sweep, build_graph, convergence, psf, run_single

TRACE_COLUMNS = ("iter", "objective", "aug_lagrangian", "consensus_f", "consensus_x", "Q",
                 "wall_ms")


def _resolve_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return load_config(default_config_path())
    p = Path(path)
    if not p.exists():
        bundled = default_config_path().parent / p.name
        if p.parent == Path(".") and bundled.is_file():
            p = bundled
    return load_config(p)


def _snr_list(args) -> Optional[tuple]:
    if args.snr_db is None:
        return None
    vals = parse_float_list(args.snr_db, "--snr-db")
    if not vals:
        raise ConfigError("--snr-db", "empty list")
    return vals


def _schemes(args, default=SCHEMES):
    return default if args.scheme is None else (args.scheme,)


def _snr_text(vals) -> str:
    return ";".join(fmt(v) for v in vals)


def cmd_run(cfg: ExperimentConfig, args) -> int:
    snrs = _snr_list(args)
    snr = cfg.run_snr_db if snrs is None else snrs[0]
    scheme = args.scheme or "dsisd"
    inst, res = run_single(cfg, scheme, snr)
    rows = []
    for r in res.trace.records:
        wall = r.wall_ms if args.timing else math.nan
        rows.append((r.iter, r.objective, r.aug_lagrangian, r.consensus_f, r.consensus_x,
                     r.q, wall))
    header = provenance("run", cfg.config_hash(), cfg.seed, scheme=scheme,
                        snr_db=fmt(snr), timing=int(args.timing))
    out = write_csv(Path(args.out) / "trace.csv", header, TRACE_COLUMNS, rows)
    errs = int(np.count_nonzero(res.x_hat != inst.frame.data))
    ferr = float(np.linalg.norm(res.f_hat - inst.scene.reflectivity)
                 / np.linalg.norm(inst.scene.reflectivity))
    print(f"{out}: scheme={scheme} snr_db={fmt(snr)} symbol_errors={errs} "
          f"f_rel_error={ferr:.3e}")
    return 0


def cmd_ber(cfg: ExperimentConfig, args) -> int:
    snrs = _snr_list(args) or cfg.sweep.snr_db
    for scheme in _schemes(args):
        pts = ber_sweep(cfg, scheme, snrs)
        header = provenance("ber", cfg.config_hash(), cfg.seed, scheme=scheme,
                            snr_db=_snr_text(snrs), trials=cfg.sweep.trials)
        rows = [(p.snr_db, p.trials, p.bits_total, p.bit_errors, p.ber) for p in pts]
        out = write_csv(Path(args.out) / f"ber_{scheme}.csv", header,
                        ("snr_db", "trials", "bits", "bit_errors", "ber"), rows)
        print(f"{out}: " + " ".join(f"{fmt(p.snr_db)}dB={p.ber:.3e}" for p in pts))
    return 0


def cmd_psf(cfg: ExperimentConfig, args) -> int:
    lam = cfg.geometry.wavelength_m
    n_rx = cfg.n_base
    local = [psf(cfg, "local", node=k) for k in range(n_rx)]
    for scheme in _schemes(args):
        grid = psf(cfg, scheme)
        header = provenance("psf", cfg.config_hash(), cfg.seed, scheme=scheme)
        rows = [(x, y, grid.grid[i, j]) for i, x in enumerate(grid.x_axis)
                for j, y in enumerate(grid.y_axis)]
        out = write_csv(Path(args.out) / f"psf_{scheme}.csv", header,
                        ("x_m", "y_m", "magnitude"), rows)
        wrows = [(g.label, g.mainlobe_3db[0], g.mainlobe_3db[1], g.mainlobe_3db[0] / lam,
                  g.mainlobe_3db[1] / lam) for g in [grid] + local]
        write_csv(Path(args.out) / f"psf_{scheme}_widths.csv", header,
                  ("label", "range_width_m", "crossrange_width_m", "range_width_wavelengths",
                   "crossrange_width_wavelengths"), wrows)
        print(f"{out}: range={grid.mainlobe_3db[0] / lam:.3f} lambda "
              f"crossrange={grid.mainlobe_3db[1] / lam:.3f} lambda")
    return 0


def cmd_complexity(cfg: ExperimentConfig, args) -> int:
    reports = [complexity_report(cfg, s) for s in _schemes(args)]
    header = provenance("complexity", cfg.config_hash(), cfg.seed)
    out = write_csv(Path(args.out) / "complexity.csv", header, ("scheme", "flops", "comm_reals"),
                    [(r.scheme, r.flops, r.comm_reals) for r in reports])
    print(f"{out}: " + " ".join(f"{r.scheme}={r.flops:.3e}flops" for r in reports))
    return 0


def cmd_convergence(cfg: ExperimentConfig, args) -> int:
    snrs = _snr_list(args) or cfg.convergence_snr_db
    rows = []
    for snr, trace in convergence(cfg, snrs):
        ravg = trace.running_average_q()
        for r, a in zip(trace.records, ravg):
            rows.append((snr, r.iter, r.consensus_f, r.consensus_x, r.q, a))
    header = provenance("convergence", cfg.config_hash(), cfg.seed, snr_db=_snr_text(snrs))
    out = write_csv(Path(args.out) / "convergence.csv", header,
                    ("snr_db", "iter", "consensus_f", "consensus_x", "Q", "running_avg_Q"), rows)
    print(f"{out}: {len(rows)} rows")
    return 0


COMMANDS = {"run": cmd_run, "ber": cmd_ber, "psf": cmd_psf, "complexity": cmd_complexity,
            "convergence": cmd_convergence}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsisd-cli",
                                     description="Distributed imaging and symbol detection "
                                                 "experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI config path (default: bundled star3.cfg)")
        p.add_argument("--seed", type=int, help="override [experiment] seed")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--scheme", choices=SCHEMES)
        p.add_argument("--snr-db", help="comma-separated SNR list in dB; 'inf' = noiseless")
        p.add_argument("--timing", action="store_true",
                       help="record wall-clock times (output no longer reproducible)")
    return parser


def _fail(kind: str, message: str, code: int, **extra) -> int:
    print(json.dumps({"error": kind, "message": message, **extra}), file=sys.stderr)
    return code


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args.config)
        if args.seed is not None:
            if args.seed < 0 or args.seed >= 2 ** 64:
                raise ConfigError("--seed", "must be an unsigned 64-bit integer")
            cfg = cfg.with_seed(args.seed)
        build_graph(cfg)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        return _fail("ConfigError", exc.message, 2, field=exc.path)
    except Exception as exc:  # reported as one machine-readable line
        return _fail(type(exc).__name__, str(exc), 1)


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()

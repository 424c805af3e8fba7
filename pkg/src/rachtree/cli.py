"""Command-line front end: ``rachtree --scheme tree --q 6 --n 1000:30000:1000``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from rachtree.config import Scheme, SchemeConfig, SystemConfig, load_config, validate_config
from rachtree.errors import ConfigError
from rachtree.sweep import (SweepSpec, analytic_rows, level_rows, run_sweep, write_csv,
                            write_gnuplot, write_levels_csv)

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2

PRESET_N = tuple(range(1000, 30001, 1000))
PRESET_Q = (2, 3, 6, 9)

FIGURE_OUTPUTS = {4: "outage", 5: "transmissions", 6: "delay", 7: "traos", 8: "resources"}


def parse_n(text: str) -> tuple:
    """``"100,1000"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            if len(parts) == 2:
                parts.append(1)
            start, stop, step = parts
            if step <= 0:
                raise ValueError
            return tuple(range(start, stop + 1, step))
        return tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad device list {text!r}; use 'a,b,c' or 'start:stop:step'")


def preset_schemes(fig: int, overrides: dict) -> list:
    overrides = {k: v for k, v in overrides.items() if k not in ("scheme", "split_factor")}
    trees = [SchemeConfig.tree(q, **overrides) for q in PRESET_Q]
    if fig == 7:
        return trees
    return [SchemeConfig.baseline(**overrides), SchemeConfig.dynamic(**overrides)] + trees


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rachtree", description=__doc__)
    p.add_argument("--config", type=Path, help="key = value file overriding the defaults")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=None)
    p.add_argument("--q", type=int, action="append", help="split factor; repeat for several")
    p.add_argument("--n", type=parse_n, default=None, help="device counts: list or start:stop:step")
    p.add_argument("--runs", type=int, default=100)
    p.add_argument("--seed", type=int, default=1, help="base seed; run i uses seed + i")
    p.add_argument("--out", type=Path, default=Path("sweep.csv"))
    p.add_argument("--analytic-only", action="store_true", help="closed-form tables only, no simulation")
    p.add_argument("--fig", type=int, choices=sorted(FIGURE_OUTPUTS), help="preset sweep for one figure")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    return p


def _schemes_from_args(args, overrides: dict) -> list:
    if args.fig is not None and args.scheme is None:
        schemes = preset_schemes(args.fig, overrides)
        if args.q:
            schemes = [s for s in schemes if not s.is_tree or s.split_factor in args.q]
        return schemes
    kind = Scheme.parse(args.scheme or overrides.pop("scheme", Scheme.TREE))
    overrides.pop("scheme", None)
    if kind is Scheme.TREE:
        qs = args.q or [overrides.pop("split_factor", 2)]
        overrides.pop("split_factor", None)
        return [SchemeConfig.tree(q, **overrides) for q in qs]
    if kind is Scheme.DYNAMIC:
        return [SchemeConfig.dynamic(**overrides)]
    return [SchemeConfig.baseline(**overrides)]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config is not None:
            system, overrides = load_config(args.config)
        else:
            system, overrides = SystemConfig(), {}
        schemes = _schemes_from_args(args, dict(overrides))
        n_values = args.n or (PRESET_N if args.fig is not None else (1000,))
        outputs = {"analytic_overlay"}
        outputs.add(FIGURE_OUTPUTS.get(args.fig, "outage"))
        spec = SweepSpec(n_values, schemes, args.runs, args.seed, outputs)
        for scheme in schemes:
            validate_config(system, scheme)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"rachtree: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out
    out.parent.mkdir(parents=True, exist_ok=True)
    if args.analytic_only:
        write_csv(analytic_rows(system, schemes, n_values), out)
        levels = out.with_name(out.stem + "_levels.csv")
        write_levels_csv(level_rows(system, schemes, n_values), levels)
        print(f"wrote {out} and {levels}", file=sys.stderr)
        return EXIT_OK

    result = run_sweep(spec, system, jobs=max(1, args.jobs))
    write_csv(result.rows, out)
    if args.fig is not None:
        dat = out.with_suffix(".dat")
        write_gnuplot(result.rows, args.fig, dat)
        print(f"wrote {dat}", file=sys.stderr)
    print(f"wrote {out}", file=sys.stderr)
    for label, n, msg in result.failures:
        print(f"rachtree: {label} N={n} failed: {msg}", file=sys.stderr)
    return EXIT_PARTIAL if result.failures else EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())

"""Seeded parameter sweeps and their CSV / gnuplot serialisation."""

from __future__ import annotations

import csv
import math
import sys as _sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable

from rachtree import analytics
from rachtree.config import SchemeConfig, SystemConfig, validate_config
from rachtree.engine.simulator import run_scenario
from rachtree.metrics import aggregate, pool

OUTPUTS = frozenset({"outage", "transmissions", "delay", "traos", "resources", "analytic_overlay"})

CSV_HEADER = ("scheme", "q", "n_devices", "runs", "outage_mean", "outage_ci", "tx_mean", "tx_ci",
              "delay_ms_mean", "delay_ms_ci", "traos_mean", "traos_ci", "dl_fraction", "ul_fraction",
              "analytic_po", "analytic_t", "analytic_that", "analytic_r")


@dataclass(frozen=True)
class SweepSpec:
    n_values: tuple
    schemes: tuple
    runs_per_point: int = 100
    base_seed: int = 1
    outputs: frozenset = OUTPUTS

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "outputs", frozenset(self.outputs))
        if not self.n_values:
            raise ValueError("n_values must not be empty")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ValueError("n_values must be strictly ascending")
        if min(self.n_values) < 0:
            raise ValueError("device counts must be >= 0")
        if self.runs_per_point < 1:
            raise ValueError("runs_per_point must be >= 1")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        unknown = self.outputs - OUTPUTS
        if unknown:
            raise ValueError(f"unknown outputs: {sorted(unknown)}")

    def points(self):
        for sc in self.schemes:
            for n in self.n_values:
                yield sc, n


@dataclass
class SweepRow:
    scheme: str
    q: int | None
    n_devices: int
    runs: int
    outage_mean: float | None = None
    outage_ci: float | None = None
    tx_mean: float | None = None
    tx_ci: float | None = None
    delay_ms_mean: float | None = None
    delay_ms_ci: float | None = None
    traos_mean: float | None = None
    traos_ci: float | None = None
    dl_fraction: float | None = None
    ul_fraction: float | None = None
    analytic_po: float | None = None
    analytic_t: float | None = None
    analytic_that: float | None = None
    analytic_r: float | None = None


assert tuple(f.name for f in fields(SweepRow)) == CSV_HEADER


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)  # (scheme label, N, message)

    @property
    def ok(self) -> bool:
        return not self.failures


def analytic_overlay(sys: SystemConfig, scheme: SchemeConfig, n: int) -> dict:
    if not scheme.is_tree or n < 1:
        return {}
    model = analytics.TreeModel(n, sys.n_preambles, scheme.split_factor)
    s = analytics.summary(model, sys.max_transmissions)
    return {"analytic_po": s["po"], "analytic_t": s["t"], "analytic_that": s["that"], "analytic_r": s["r"]}


def _one_run(args):
    sys, scheme, n, seed = args
    return aggregate(run_scenario(sys, scheme, n, seed), sys)


def _pooled_row(sys, scheme, n, metrics, overlay) -> SweepRow:
    row = SweepRow(scheme.scheme.value, scheme.split_factor if scheme.is_tree else None, n, len(metrics))
    p = pool(metrics, min_runs=1)
    row.outage_mean, row.outage_ci = p.mean("outage_fraction"), p.ci("outage_fraction")
    row.tx_mean, row.tx_ci = p.mean("mean_tx"), p.ci("mean_tx")
    row.delay_ms_mean, row.delay_ms_ci = p.mean("mean_delay_ms"), p.ci("mean_delay_ms")
    row.traos_mean, row.traos_ci = p.mean("trao_count"), p.ci("trao_count")
    row.dl_fraction, row.ul_fraction = p.mean("dl_fraction"), p.mean("ul_fraction")
    for k, v in overlay.items():
        setattr(row, k, v)
    return row


def _progress(msg: str):
    print(msg, file=_sys.stderr, flush=True)


def run_sweep(spec: SweepSpec, sys: SystemConfig, *, jobs: int = 1,
              progress: Callable[[str], None] | None = _progress) -> SweepResult:
    """Run every (scheme, N) point with seeds ``base_seed + run index``.

    A point whose configuration or simulation fails is reported in
    ``failures`` and skipped; the remaining points still run. Rows come out
    in (scheme, N) order whatever ``jobs`` is.
    """
    result = SweepResult()
    overlay_on = "analytic_overlay" in spec.outputs
    points = []
    for scheme, n in spec.points():
        try:
            validate_config(sys, scheme)
        except Exception as exc:
            result.failures.append((scheme.label, n, str(exc)))
            continue
        points.append((scheme, n))

    executor = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    try:
        for scheme, n in points:
            tasks = [(sys, scheme, n, spec.base_seed + i) for i in range(spec.runs_per_point)]
            try:
                if executor is None:
                    metrics = [_one_run(t) for t in tasks]
                else:
                    # map preserves submission order, so output is independent of scheduling
                    metrics = list(executor.map(_one_run, tasks))
                overlay = analytic_overlay(sys, scheme, n) if overlay_on else {}
                result.rows.append(_pooled_row(sys, scheme, n, metrics, overlay))
            except Exception as exc:
                result.failures.append((scheme.label, n, f"{type(exc).__name__}: {exc}"))
                if progress:
                    progress(f"{scheme.label} N={n}: failed: {exc}")
                continue
            if progress:
                progress(f"{scheme.label} N={n}: {spec.runs_per_point} runs done")
    finally:
        if executor is not None:
            executor.shutdown()
    return result


def analytic_rows(sys: SystemConfig, schemes, n_values) -> list:
    """Rows carrying only the closed-form columns; no simulation is run."""
    rows = []
    for scheme in schemes:
        if not scheme.is_tree:
            continue
        for n in n_values:
            row = SweepRow(scheme.scheme.value, scheme.split_factor, n, 0)
            for k, v in analytic_overlay(sys, scheme, n).items():
                setattr(row, k, v)
            rows.append(row)
    return rows


def level_rows(sys: SystemConfig, schemes, n_values, levels: int | None = None) -> list:
    """Per-level P_S, P_L and C(m) for every tree scheme and N >= 2."""
    levels = levels or sys.max_transmissions
    out = []
    for scheme in schemes:
        if not scheme.is_tree:
            continue
        for n in n_values:
            if n < 2:
                continue
            model = analytics.TreeModel(n, sys.n_preambles, scheme.split_factor)
            for rec in analytics.level_table(model, levels):
                out.append({"q": scheme.split_factor, "n_devices": n, **rec})
    return out


# -- serialisation ----------------------------------------------------------

def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, int):
        return str(v)
    if math.isnan(v):
        return "nan"
    return format(v, ".12g")


def _parse_value(text: str, name: str):
    if text == "":
        return None
    if name in ("scheme",):
        return text
    if name in ("q", "n_devices", "runs"):
        return int(text)
    return float(text)


def write_csv(rows, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for row in rows:
                w.writerow([format_value(getattr(row, name)) for name in CSV_HEADER])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def read_csv(path) -> list:
    path = Path(path)
    with path.open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [SweepRow(**{k: _parse_value(v, k) for k, v in rec.items()}) for rec in reader]


def write_levels_csv(records, path) -> Path:
    path = Path(path)
    cols = ("q", "n_devices", "m", "p_s", "p_l", "c")
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for rec in records:
            w.writerow([format_value(rec[c]) for c in cols])
    return path


# columns written to the gnuplot file of each figure preset
FIGURE_COLUMNS = {
    4: ("outage_mean", "outage_ci", "analytic_po"),
    5: ("tx_mean", "tx_ci", "analytic_t", "analytic_that"),
    6: ("delay_ms_mean", "delay_ms_ci"),
    7: ("traos_mean", "traos_ci", "analytic_r"),
    8: ("dl_fraction", "ul_fraction"),
}


def write_gnuplot(rows, fig: int, path) -> Path:
    """One data block per scheme, blocks separated by two blank lines
    (address them with ``index`` in gnuplot). Missing values are ``NaN``."""
    cols = FIGURE_COLUMNS[fig]
    blocks: dict = {}
    for row in rows:
        label = row.scheme if row.q is None else f"{row.scheme}_q{row.q}"
        blocks.setdefault(label, []).append(row)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("# fractions are RBs used / RBs available from activation to the last device finishing\n")
        for i, (label, block) in enumerate(blocks.items()):
            if i:
                fh.write("\n\n")
            fh.write(f"# {label}\n# n_devices {' '.join(cols)}\n")
            for row in block:
                vals = [getattr(row, c) for c in cols]
                fh.write(" ".join([str(row.n_devices)] + ["NaN" if v is None else format_value(float(v)) for v in vals]))
                fh.write("\n")
    return path

"""Per-run aggregates and pooling across seeded repeats."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

from rachtree.config import SystemConfig
from rachtree.errors import ConfigMismatch, InsufficientRuns

Z_95 = 1.959963984540054


@dataclass(frozen=True)
class RunMetrics:
    scheme: str
    split_factor: int | None
    n_devices: int
    outage_fraction: float
    mean_tx: float
    mean_delay_ms: float  # NaN when nobody was resolved
    trao_count: int
    dl_rb_used: int
    ul_rb_used: int
    dl_fraction: float
    ul_fraction: float
    busy_subframes: int

    @property
    def key(self):
        return (self.scheme, self.split_factor, self.n_devices)


NUMERIC_FIELDS = ("outage_fraction", "mean_tx", "mean_delay_ms", "trao_count", "dl_rb_used",
                  "ul_rb_used", "dl_fraction", "ul_fraction", "busy_subframes")


def downlink_rbs(dl_bits: dict, rb_bits: int) -> int:
    """Messages sent in one subframe share one bundle; round up once per subframe."""
    return sum(-(-bits // rb_bits) for bits in dl_bits.values() if bits > 0)


def aggregate(trace, sys: SystemConfig) -> RunMetrics:
    n = trace.n_devices
    if n == 0 or not trace.devices:
        return RunMetrics(trace.scheme, trace.split_factor, n, 0.0, 0.0, 0.0, 0, 0, 0, 0.0, 0.0, 0)
    devs = trace.devices
    resolved = [d for d in devs if d.resolved]
    delays = [(d.resolution_subframe - d.activation_subframe) * sys.subframe_ms for d in resolved]
    mean_delay = math.fsum(delays) / len(delays) if delays else math.nan
    start = min(d.activation_subframe for d in devs)
    busy = trace.end_subframe - start + 1
    dl = downlink_rbs(trace.dl_bits, sys.rb_bits)
    ul = sum(trace.ul_rbs.values())
    capacity = sys.bandwidth_rbs * busy
    return RunMetrics(
        scheme=trace.scheme,
        split_factor=trace.split_factor,
        n_devices=n,
        outage_fraction=(n - len(resolved)) / n,
        mean_tx=sum(d.tx_count for d in devs) / n,
        mean_delay_ms=mean_delay,
        trao_count=trace.trao_count,
        dl_rb_used=dl,
        ul_rb_used=ul,
        dl_fraction=dl / capacity,
        ul_fraction=ul / capacity,
        busy_subframes=busy,
    )


@dataclass(frozen=True)
class FieldSummary:
    mean: float
    std: float
    ci: float  # half-width of the normal-approximation 95% interval
    n: int


@dataclass(frozen=True)
class PooledMetrics:
    scheme: str
    split_factor: int | None
    n_devices: int
    runs: int
    fields: dict

    def __getitem__(self, name) -> FieldSummary:
        return self.fields[name]

    def mean(self, name) -> float:
        return self.fields[name].mean

    def ci(self, name) -> float:
        return self.fields[name].ci


def _summarise(values) -> FieldSummary:
    vals = [v for v in values if not math.isnan(v)]
    n = len(vals)
    if n == 0:
        return FieldSummary(math.nan, math.nan, math.nan, 0)
    mean = math.fsum(vals) / n
    if n < 2:
        return FieldSummary(mean, math.nan, math.nan, n)
    var = math.fsum((v - mean) ** 2 for v in vals) / (n - 1)
    std = math.sqrt(var)
    return FieldSummary(mean, std, Z_95 * std / math.sqrt(n), n)


def pool(metrics: list, min_runs: int = 2) -> PooledMetrics:
    """Mean, sample standard deviation and 95% CI per field.

    Runs must share scheme, q and N. Delay is pooled over runs that resolved
    at least one device.
    """
    if len(metrics) < min_runs:
        raise InsufficientRuns(f"need at least {min_runs} runs, got {len(metrics)}")
    keys = {m.key for m in metrics}
    if len(keys) > 1:
        raise ConfigMismatch(f"cannot pool runs of different scenarios: {sorted(map(str, keys))}")
    first = metrics[0]
    summary = {name: _summarise([float(getattr(m, name)) for m in metrics]) for name in NUMERIC_FIELDS}
    return PooledMetrics(first.scheme, first.split_factor, first.n_devices, len(metrics), summary)


assert set(NUMERIC_FIELDS) < {f.name for f in fields(RunMetrics)}

"""End-to-end acceptance checks, one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the lines are printed
even when output capture is on.
"""

import functools
import math
import random

import pytest

from rachtree import analytics
from rachtree.config import SchemeConfig, SystemConfig
from rachtree.engine.simulator import run_scenario
from rachtree.metrics import aggregate, pool
from rachtree.sweep import SweepSpec, run_sweep, write_csv

from conftest import run_split_example

BASE_SEED = 1000


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")
        assert ok, detail
    return emit


def _scheme(kind, q=None):
    if kind == "tree":
        return SchemeConfig.tree(q)
    return getattr(SchemeConfig, kind)()


@functools.lru_cache(maxsize=None)
def pooled(kind, q, n, runs, p_error):
    sys = SystemConfig(p_error=p_error)
    scheme = _scheme(kind, q)
    metrics = [aggregate(run_scenario(sys, scheme, n, BASE_SEED + i), sys) for i in range(runs)]
    return pool(metrics)


def test_headline_reproduction(report):
    p = pooled("tree", 6, 30000, 20, 0.01)
    tx, delay_s, out = p.mean("mean_tx"), p.mean("mean_delay_ms") / 1000, p.mean("outage_fraction")
    that = analytics.approx_transmissions(analytics.TreeModel(30000, 54, 6))
    ok = 4.5 <= tx <= 5.5 and 0.95 <= delay_s <= 1.45 and out <= 0.01
    report(1, ok, f"q=6 (approx T={that:.2f}), 20 runs: mean_tx={tx:.3f} in [4.5,5.5], "
                  f"delay={delay_s:.3f}s in [0.95,1.45], outage={out:.2e} <= 0.01")


def test_analytics_simulation_agreement(report):
    lines, ok = [], True
    for n in (100, 1000):
        for q in (2, 3, 6):
            p = pooled("tree", q, n, 100, 0.0)
            model = analytics.TreeModel(n, 54, q)
            t = analytics.expected_transmissions(model)
            po = analytics.outage_prob(model, 10)
            r = analytics.expected_traos(model)
            tx = p.mean("mean_tx")
            out = p["outage_fraction"]
            # sample spread, floored by the binomial spread of N independent devices per run
            sigma = max(out.std / math.sqrt(out.n), math.sqrt(po * (1 - po) / (n * out.n)))
            # R counts the root contention as its leading 1
            traos = p.mean("trao_count") + 1
            tx_ok = abs(tx - t) <= 0.02 * t
            po_ok = abs(out.mean - po) <= 3 * sigma
            r_ok = abs(traos - r) <= 0.10 * r
            ok &= tx_ok and po_ok and r_ok
            lines.append(f"N={n} q={q}: tx {tx:.3f}/{t:.3f} ({100 * (tx / t - 1):+.2f}%{'' if tx_ok else ' X'}), "
                         f"outage {out.mean:.4f}/{po:.4f} ({(out.mean - po) / sigma if sigma else 0:+.1f}sd"
                         f"{'' if po_ok else ' X'}), traos+1 {traos:.2f}/{r} ({100 * (traos / r - 1):+.1f}%"
                         f"{'' if r_ok else ' X'})")
    report(2, ok, "; ".join(lines))


def test_telescoping_identity(report):
    rng = random.Random(2024)
    worst_po = worst_sum = 0.0
    for _ in range(1000):
        n, g, q, big_m = rng.randint(2, 50000), rng.randint(1, 32), rng.randint(2, 9), rng.randint(1, 30)
        m = analytics.TreeModel.from_groups(n, g, q)
        ps = analytics.slot_success_prob(m, big_m)
        worst_po = max(worst_po, abs(analytics.outage_prob(m, big_m) - (1 - ps)))
        worst_sum = max(worst_sum, abs(math.fsum(analytics.level_resolution_prob(m, k)
                                                 for k in range(1, big_m + 1)) - ps))
    ok = worst_po <= 1e-12 and worst_sum <= 1e-12
    report(3, ok, f"1000 tuples: max |P_O - (1 - P_S(M))| = {worst_po:.1e}, "
                  f"max |sum P_L - P_S| = {worst_sum:.1e}")


def test_baseline_collapse(report):
    base = pooled("baseline", None, 10000, 20, 0.01).mean("outage_fraction")
    dyn = pooled("dynamic", None, 10000, 20, 0.01).mean("outage_fraction")
    tree = pooled("tree", 6, 10000, 20, 0.01).mean("outage_fraction")
    ok = base >= 0.5 and tree < dyn < base
    report(4, ok, f"N=10000, 20 runs: outage baseline={base:.4f} (>= 0.5), dynamic={dyn:.4f}, "
                  f"tree q=6={tree:.4f}")


def test_resource_advantage(report):
    tree = pooled("tree", 6, 30000, 20, 0.01)
    dyn = pooled("dynamic", None, 30000, 10, 0.01)
    dl = tree.mean("dl_fraction") / dyn.mean("dl_fraction")
    ul = tree.mean("ul_fraction") / dyn.mean("ul_fraction")
    ok = dl <= 0.65 and ul <= 0.65
    report(5, ok, f"N=30000: tree/dynamic dl {tree.mean('dl_fraction'):.4f}/{dyn.mean('dl_fraction'):.4f}"
                  f" = {dl:.3f}, ul {tree.mean('ul_fraction'):.4f}/{dyn.mean('ul_fraction'):.4f}"
                  f" = {ul:.3f} (each <= 0.65)")


def test_monotonicity(report):
    qs = (2, 3, 6, 9)
    models = [analytics.TreeModel(10000, 54, q) for q in qs]
    t = [analytics.expected_transmissions(m) for m in models]
    r = [analytics.expected_traos(m) for m in models]
    pools = [pooled("tree", q, 10000, 20, 0.01) for q in qs]
    d = [p.mean("mean_delay_ms") for p in pools]
    ci = [p.ci("mean_delay_ms") for p in pools]
    t_ok = all(b < a for a, b in zip(t, t[1:]))
    r_ok = all(b >= a for a, b in zip(r, r[1:]))
    d_ok = all(d[i + 1] >= d[i] - (ci[i] + ci[i + 1]) for i in range(len(qs) - 1))
    report(6, t_ok and r_ok and d_ok,
           f"N=10000, q={list(qs)}: T={[round(x, 3) for x in t]} decreasing={t_ok}; "
           f"R={r} nondecreasing={r_ok}; delay ms={[round(x, 1) for x in d]} "
           f"(+-{[round(x, 1) for x in ci]}) nondecreasing={d_ok}")


def test_six_device_split_example(report):
    tr = run_split_example()
    counts = [d.tx_count for d in tr.devices]
    ok = tr.trao_count == 2 and sorted(counts) == [2, 2, 2, 2, 3, 3] and counts[:2] == [3, 3]
    report(7, ok, f"TRAOs at {tr.trao_subframes} (count {tr.trao_count}), per-device transmissions {counts}")


def test_determinism(report, tmp_path):
    sys = SystemConfig()
    spec = SweepSpec([100, 500], [SchemeConfig.baseline(), SchemeConfig.tree(6)], runs_per_point=3,
                     base_seed=BASE_SEED)
    blobs = []
    for i, jobs in enumerate((1, 1, 2, 3)):
        res = run_sweep(spec, sys, jobs=jobs, progress=None)
        blobs.append(write_csv(res.rows, tmp_path / f"run{i}.csv").read_bytes())
    ok = len(set(blobs)) == 1
    report(8, ok, f"4 repeats (jobs 1, 1, 2, 3) of a 4-point sweep: {len(set(blobs))} distinct CSV outputs")

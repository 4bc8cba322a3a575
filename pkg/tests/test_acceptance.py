"""Acceptance criteria, one test each. Every test records a PASS/FAIL line
that the terminal summary prints, then asserts."""

import time
from dataclasses import replace
from importlib import resources

import numpy as np
import pytest

from conftest import record_acceptance
from hybridrelay.ba import BaWeights, ba_throughput, select_ba, train_lambda
from hybridrelay.channels import (FsoLinkParams, NetworkConfig, RfLinkParams, capacity_trace,
                                  fso_capacity)
from hybridrelay.delay import run_delay_ba
from hybridrelay.distributed import has_ties, run_distributed_ba, run_distributed_nonba
from hybridrelay.engine import Scenario, run_scenario
from hybridrelay.nonba import MODE_ORDER, Mode, select_nonba_trace
from hybridrelay.oracles import lambda_grid_search, nonba_bruteforce, nonba_grid_slack, ook_mi_grid
from hybridrelay.verify import random_capacities, within_oracle

pytestmark = pytest.mark.acceptance


def recipe(name: str) -> list[Scenario]:
    return Scenario.load_all(resources.files("hybridrelay") / "recipes" / f"{name}.yaml")


def variant(name: str, fig: str) -> Scenario:
    return next(s for s in recipe(fig) if s.name == name)


def test_criterion_1_nonba_optimality():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    bad, worst, total = 0, 0.0, 0
    for m_count in (2, 3):
        c = random_capacities(rng, m_count, 1000)
        tau = select_nonba_trace(c).tau
        for b in range(1000):
            ref, _, _ = nonba_bruteforce(c[b])
            bad += not within_oracle(tau[b], ref, nonba_grid_slack(c[b]))
            worst = max(worst, (ref - tau[b]) / ref)
            total += 1
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 60
    record_acceptance(1, ok, f"{total - bad}/{total} matrices (M=2,3) within the grid oracle; "
                             f"worst shortfall {worst:.1e} rel; {dt:.1f} s")
    assert ok


def test_criterion_2_fso_capacity():
    t0 = time.perf_counter()
    w = 1e9
    zero = fso_capacity(0.0, 1.0, w)
    top = fso_capacity(1e4, 1.0, w)
    rels = [abs(fso_capacity(r, 1.0, 1.0) / ook_mi_grid(r) - 1) for r in (0.1, 0.5, 1, 2, 5, 10)]
    dt = time.perf_counter() - t0
    ok = abs(zero) <= 1e-9 * w and top >= 0.999999 * w and max(rels) <= 1e-6 and dt < 5
    record_acceptance(2, ok, f"C(0)={zero:.1e}, C(1e4)/W={top / w:.9f}, max oracle rel err "
                             f"{max(rels):.1e}; {dt:.1f} s")
    assert ok


def random_single_relay(rng: np.random.Generator) -> NetworkConfig:
    cfg = NetworkConfig.uniform(1, d1=float(rng.uniform(600, 1000)), d2=float(rng.uniform(600, 1000)))
    cfg = cfg.map_links("fso", [(0, 0)], attenuation=float(rng.uniform(0.015, 0.04)))
    cfg = cfg.map_links("fso", [(1, 0)], attenuation=float(rng.uniform(0.015, 0.04)))
    return cfg.map_links("rf", [(0, 0), (1, 0)], tx_power=float(rng.uniform(0.05, 0.3)))


def test_criterion_3_lambda_training():
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    parts, ok = [], True
    for case in range(5):
        cfg = random_single_relay(rng)
        w = train_lambda(cfg, seed=100 + case)
        trace = capacity_trace(cfg, np.random.default_rng(200 + case), 100_000)

        def flows(lam):
            r = ba_throughput(trace, BaWeights([lam]))
            return r.arrival.sum(), r.departure.sum()

        _, best = lambda_grid_search(flows)
        rel = ba_throughput(trace, w).tau / best - 1
        ok &= rel >= -0.01
        parts.append(f"{rel:+.2%}")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    record_acceptance(3, ok, f"trained vs lambda grid (5 cases, B=1e5): {', '.join(parts)}; {dt:.1f} s")
    assert ok


def test_criterion_4_dominance_chain():
    t0 = time.perf_counter()
    s = Scenario(name="dominance", relays=3, slots=10_000, seeds=list(range(10)),
                 policies=["ba", "nonba", "nonba_maxmin_fso", "ba_best_fso", "ba_independent"])
    m = run_scenario(s)
    per = {p: m.per_seed(p) for p in s.policies}
    chain = {"ba>=nonba": per["ba"] >= per["nonba"],
             "nonba>=maxmin": per["nonba"] >= per["nonba_maxmin_fso"],
             "ba>=ba_best_fso": per["ba"] >= per["ba_best_fso"],
             "ba>=ba_independent": per["ba"] >= per["ba_independent"]}
    violations = {k: int((~v).sum()) for k, v in chain.items()}
    dt = time.perf_counter() - t0
    ok = not any(violations.values()) and dt < 300
    means = ", ".join(f"{p}={m.mean(p) / 1e6:.1f}" for p in s.policies)
    record_acceptance(4, ok, f"violations {violations}; means Mbit/s {means}; {dt:.1f} s")
    assert ok


def test_criterion_5_delay_convergence():
    t0 = time.perf_counter()
    s = replace(variant("fig7-m3", "fig7"), policies=["delay_ba", "ba"])
    m = run_scenario(s)
    medians = [float(np.median(m.per_seed("delay_ba", v))) for v in s.values]
    inversions = sum(b < a for a, b in zip(medians, medians[1:]))
    share = m.mean("delay_ba", s.values[-1]) / m.mean("ba", s.values[-1])
    dt = time.perf_counter() - t0
    ok = inversions <= 1 and share >= 0.95 and dt < 600
    record_acceptance(5, ok, f"{inversions} median inversions over {len(s.values)} Qmax values; "
                             f"largest Qmax reaches {share:.1%} of BA; {dt:.1f} s")
    assert ok


def test_criterion_6_littles_law():
    t0 = time.perf_counter()
    cfg = NetworkConfig.uniform(3)
    w = train_lambda(cfg, seed=6)
    parts, ok = [], True
    for qmax in (1e9, 5e9):
        trace = capacity_trace(cfg, np.random.default_rng(int(qmax // 1e9)), 100_000)
        r = run_delay_ba(trace, w, qmax, ledger=True)
        rel = abs(r.delay - r.fifo_delay) / r.fifo_delay
        ok &= rel <= 0.02
        parts.append(f"Qmax={qmax:.0e}: {r.delay:.3f} vs {r.fifo_delay:.3f} slots ({rel:.1e})")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    record_acceptance(6, ok, "; ".join(parts) + f"; {dt:.1f} s")
    assert ok


def test_criterion_7_distributed():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    c = random_capacities(rng, 3, 10_000)
    w = BaWeights(rng.uniform(0.2, 0.8, 3))
    cent = select_nonba_trace(c)
    tie_free = ba_bad = nonba_bad = nonba_checked = mixed = diverged = 0
    for b in range(len(c)):
        cb = c[b]
        if has_ties(cb.fso) or has_ties(cb.rf):
            continue
        tie_free += 1
        ba_bad += run_distributed_ba(cb, w).key() != select_ba(cb, w).key()
        d = run_distributed_nonba(cb)
        ref = cent.decision(b)
        same = d.mode is ref.mode and (d.fso_rx, d.fso_tx, d.rf_rx, d.rf_tx) == (
            ref.fso_rx, ref.fso_tx, ref.rf_rx, ref.rf_tx)
        if d.mode is Mode.MIXED or MODE_ORDER[cent.mode[b]] is Mode.MIXED:
            mixed += 1
            diverged += not same
        else:
            nonba_checked += 1
            nonba_bad += not same
    dt = time.perf_counter() - t0
    ok = ba_bad == 0 and nonba_bad == 0 and dt < 60
    record_acceptance(7, ok, f"BA mismatches {ba_bad}/{tie_free}; non-BA hybrid/independent mismatches "
                             f"{nonba_bad}/{nonba_checked}; mixed-mode divergence {diverged}/{mixed} "
                             f"({diverged / max(mixed, 1):.1%}); {dt:.1f} s")
    assert ok


def test_criterion_8_figure_shapes():
    t0 = time.perf_counter()
    s = Scenario(name="relays", relays=1, d1=1000, d2=800, axis="relays", values=[1, 5, 10],
                 policies=["ba"], slots=100_000, seeds=[0])
    m = run_scenario(s)
    tau = {v: m.mean("ba", v) for v in s.values}
    g5, g10 = tau[5] / tau[1] - 1, tau[10] / tau[1] - 1
    gains_ok = abs(g5 - 0.95) <= 0.20 and abs(g10 - 1.50) <= 0.20

    sat = []
    for fig, fso_only, proposed in (("fig3", "nonba_maxmin_fso", "nonba"), ("fig4", "ba_best_fso", "ba")):
        sc = variant(f"{fig}-k1all", fig)
        r = run_scenario(sc)
        k_hi, k_prev = sc.values[-1], sc.values[-2]
        peak = max(r.mean(fso_only, v) for v in sc.values)
        hi, prev = r.mean(proposed, k_hi), r.mean(proposed, k_prev)
        ok = r.mean(fso_only, k_hi) <= 1e-3 * peak and hi > 0 and abs(hi - prev) <= 0.01 * hi
        sat.append((fig, ok, r.mean(fso_only, k_hi), hi))
    dt = time.perf_counter() - t0
    ok = gains_ok and all(x[1] for x in sat) and dt < 1200
    sat_txt = "; ".join(f"{f}: FSO-only {a / 1e6:.3f}, proposed {b / 1e6:.1f} Mbit/s at k=0.1 "
                        f"({'ok' if o else 'FAIL'})" for f, o, a, b in sat)
    record_acceptance(8, ok, f"M=5 gain {g5:+.0%} (target 95+-20), M=10 gain {g10:+.0%} "
                             f"(target 150+-20), tau(M=1)={tau[1] / 1e6:.1f} Mbit/s; {sat_txt}; {dt:.0f} s")
    assert ok

"""Reduced-scale self checks against the brute-force references."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ba import BaWeights, ba_throughput, select_ba, train_lambda
from .channels import CapacityMatrix, NetworkConfig, capacity_trace
from .delay import run_delay_ba
from .distributed import run_distributed_ba, run_distributed_nonba
from .nonba import Mode, select_nonba_trace
from .oracles import lambda_grid_search, nonba_bruteforce, nonba_grid_slack


@dataclass
class SuiteResult:
    name: str
    ok: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.ok else 'FAIL'}] {self.name}: {self.detail}"


def random_capacities(rng: np.random.Generator, m_count: int, count: int) -> CapacityMatrix:
    """Exponential magnitudes on log-uniform per-link scales, so every mode wins sometimes."""
    shape = (count, 2, m_count)
    fso = rng.exponential(size=shape) * np.exp(rng.uniform(-2, 2, size=shape))
    rf = rng.exponential(size=shape) * np.exp(rng.uniform(-2, 2, size=shape))
    return CapacityMatrix(fso, rf)


def within_oracle(tau: float, ref: float, slack: float) -> bool:
    """Grid oracle value <= optimum <= oracle + slack; allow 1e-9 relative rounding below."""
    return ref * (1.0 - 1e-9) <= tau <= ref + slack + 1e-12 * ref


def nonba_oracle(matrices: int = 100, seed: int = 0, relays=(2, 3)) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = -math.inf
    bad = 0
    for m_count in relays:
        c = random_capacities(rng, m_count, matrices)
        tau = select_nonba_trace(c).tau
        for b in range(matrices):
            ref, _, _ = nonba_bruteforce(c[b])
            slack = nonba_grid_slack(c[b])
            worst = max(worst, (ref - tau[b]) / max(ref, 1e-300))
            if not within_oracle(tau[b], ref, slack):
                bad += 1
    total = matrices * len(relays)
    return SuiteResult("nonba-oracle", bad == 0,
                       f"{total - bad}/{total} matrices within grid slack (worst shortfall {worst:.2e} rel)")


def lambda_grid(slots: int = 20_000, seed: int = 0) -> SuiteResult:
    cfg = NetworkConfig.uniform(1, d1=716, d2=683)
    cfg = cfg.map_links("fso", [(0, 0)], attenuation=0.0224).map_links("fso", [(1, 0)], attenuation=0.0254)
    cfg = cfg.map_links("rf", [(0, 0), (1, 0)], tx_power=0.133)
    w = train_lambda(cfg, seed=seed)
    trace = capacity_trace(cfg, np.random.default_rng(seed + 1), slots)

    def flows(lam):
        r = ba_throughput(trace, BaWeights([lam]))
        return r.arrival.sum(), r.departure.sum()

    _, best = lambda_grid_search(flows)
    got = ba_throughput(trace, w).tau
    rel = got / best - 1.0
    return SuiteResult("lambda-grid", rel >= -0.01,
                       f"trained {got / 1e6:.3f} vs grid {best / 1e6:.3f} Mbit/s ({rel:+.3%}), B={slots}")


def lambda_residual(slots: int = 20_000, seed: int = 0, weights: BaWeights | None = None,
                    tol: float = 0.05) -> SuiteResult:
    """Balance at interior relays, plus throughput against freshly trained weights.

    Boundary weights have no balance condition, so a file of all zeros or
    all ones is caught by the throughput comparison instead.
    """
    cfg = NetworkConfig.uniform(3)
    ref = train_lambda(cfg, seed=seed)
    w = weights if weights is not None else ref
    if w.relays != cfg.relays:
        return SuiteResult("lambda-residual", False, f"{w.relays} weights for a {cfg.relays}-relay network")
    trace = capacity_trace(cfg, np.random.default_rng(seed + 7), slots)
    r = ba_throughput(trace, w)
    best = ba_throughput(trace, ref).tau if w is not ref else r.tau
    interior = (w.lam > 0) & (w.lam < 1)
    resid = np.abs(r.arrival - r.departure) / np.maximum(r.arrival, 1e-300)
    worst = float(resid[interior].max()) if interior.any() else 0.0
    share = r.tau / best if best > 0 else 0.0
    ok = worst <= tol and share >= 1.0 - tol
    return SuiteResult("lambda-residual", ok,
                       f"max |arrival - departure| / arrival = {worst:.3%} over {int(interior.sum())} "
                       f"interior relays, throughput {share:.1%} of retrained weights, B={slots}")


def littles_law(slots: int = 20_000, seed: int = 0, qmax: float = 5e9) -> SuiteResult:
    cfg = NetworkConfig.uniform(3)
    w = train_lambda(cfg, seed=seed)
    trace = capacity_trace(cfg, np.random.default_rng(seed + 3), slots)
    r = run_delay_ba(trace, w, qmax, ledger=True)
    rel = abs(r.delay - r.fifo_delay) / r.fifo_delay
    return SuiteResult("littles-law", rel <= 0.02,
                       f"queue/arrival {r.delay:.4f} vs FIFO {r.fifo_delay:.4f} slots ({rel:.2e} rel), B={slots}")


def distributed(slots: int = 2000, seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    m_count = 3
    c = random_capacities(rng, m_count, slots)
    cent = select_nonba_trace(c)
    w = BaWeights(rng.uniform(0.2, 0.8, m_count))
    ba_bad = nonba_bad = mixed = diverged = flagged = checked = 0
    loss = 0.0
    for b in range(slots):
        cb = c[b]
        if run_distributed_ba(cb, w).key() != select_ba(cb, w).key():
            ba_bad += 1
        dn = run_distributed_nonba(cb)
        ref = cent.decision(b)
        same = dn.mode is ref.mode and (dn.fso_rx, dn.fso_tx, dn.rf_rx, dn.rf_tx) == (
            ref.fso_rx, ref.fso_tx, ref.rf_rx, ref.rf_tx)
        if dn.mode is Mode.MIXED:
            mixed += 1
            diverged += int(not same)
            flagged += int(not dn.mixed_feasible)
            loss += (ref.tau - dn.tau) / ref.tau if ref.tau > 0 else 0.0
            continue
        checked += 1
        nonba_bad += int(not same)
    ok = ba_bad == 0 and nonba_bad == 0
    return SuiteResult("distributed", ok,
                       f"BA mismatches {ba_bad}/{slots}; non-BA hybrid/independent mismatches "
                       f"{nonba_bad}/{checked}; mixed winners {mixed}: {diverged} differ from the "
                       f"centralized choice, {flagged} flagged infeasible, mean loss "
                       f"{loss / max(mixed, 1):.2%}, B={slots}")


SUITES = {
    "nonba-oracle": nonba_oracle,
    "lambda-grid": lambda_grid,
    "lambda-residual": lambda_residual,
    "littles-law": littles_law,
    "distributed": distributed,
}


def run_suites(names=None, slots: int | None = None, weights: BaWeights | None = None) -> list[SuiteResult]:
    out = []
    for name in names or SUITES:
        fn = SUITES[name]
        kw = {}
        if slots is not None and name in ("lambda-grid", "lambda-residual", "littles-law", "distributed"):
            kw["slots"] = slots
        if name == "lambda-residual" and weights is not None:
            kw["weights"] = weights
        try:
            out.append(fn(**kw))
        except Exception as exc:  # a crashing suite is a failing suite
            out.append(SuiteResult(name, False, f"error: {exc}"))
    return out

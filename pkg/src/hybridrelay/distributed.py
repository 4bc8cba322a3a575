"""Timer/beacon emulation of the two selection rules using local CSI only.

Every relay arms one timer per class with expiry ``eta / metric``; the
first timer of a class to expire broadcasts a beacon and silences the rest
of that class. Afterwards every node knows the per-class maxima
``eta / expiry`` and the winning relays, which is enough to assemble the
slot's decision. The beacon medium is ideal: no delay, no collisions.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .ba import BaDecision, BaWeights, make_decision, selection_metrics
from .channels import CapacityMatrix
from .nonba import (Mode, SelectionDecision, hybrid_rate, mixed_rate_closed_form,
                    mixed_rate_exact, rf_relay_rate)

NONBA_CLASSES = ("hyb", "fso", "rf", "mix1", "mix2")
BA_CLASSES = ("fso1", "fso2", "rf")


@dataclass(order=True)
class TimerEvent:
    expiry: float
    relay: int
    klass: str = field(compare=False)
    metric: float = field(compare=False)
    payload: dict = field(default_factory=dict, compare=False)

    def log_line(self) -> str:
        extra = "".join(f" {k}={v}" for k, v in sorted(self.payload.items()))
        return f"t={self.expiry:.9g} relay={self.relay + 1} class={self.klass} metric={self.metric:.9g}{extra}"


def timer_expiry(metric: float, eta: float = 1.0) -> float:
    return eta / metric if metric > 0 else math.inf


def run_timers(metrics: dict[str, np.ndarray], eta: float = 1.0,
               payloads: dict[str, list[dict]] | None = None):
    """Fire every finite timer in time order; the first per class broadcasts.

    Returns ``(beacons, log)``: the winning event per class (absent when no
    timer of that class fires) and the log of every processed expiry.
    """
    if eta <= 0:
        raise ValueError("eta must be > 0")
    heap = []
    for klass, vals in metrics.items():
        for m, v in enumerate(np.asarray(vals, dtype=float)):
            t = timer_expiry(float(v), eta)
            if math.isfinite(t):
                payload = payloads[klass][m] if payloads and klass in payloads else {}
                heap.append(TimerEvent(t, m, klass, float(v), payload))
    heapq.heapify(heap)
    beacons: dict[str, TimerEvent] = {}
    log: list[str] = []
    while heap:
        ev = heapq.heappop(heap)
        if ev.klass in beacons:
            log.append(ev.log_line() + " silent")
            continue
        beacons[ev.klass] = ev
        log.append(ev.log_line() + " beacon")
    return beacons, log


def _recovered(beacons: dict[str, TimerEvent], klass: str, eta: float) -> tuple[float, int]:
    ev = beacons.get(klass)
    return (eta / ev.expiry, ev.relay) if ev is not None else (0.0, 0)


@dataclass
class DistributedDecision(SelectionDecision):
    claimed_tau: float = 0.0
    mixed_feasible: bool = True
    beacons: dict = field(default_factory=dict, repr=False)
    log: list = field(default_factory=list, repr=False)


def local_nonba_metrics(c: CapacityMatrix) -> dict[str, np.ndarray]:
    """The five per-relay rates each relay computes from its own links."""
    c1f, c2f = c.fso
    c1r, c2r = c.rf
    hyb, _ = hybrid_rate(c1f, c1r, c2f, c2r)
    rf, _ = rf_relay_rate(c1r, c2r)
    return {"hyb": hyb, "fso": np.minimum(c1f, c2f), "rf": rf,
            "mix1": np.minimum(c1f, c2r), "mix2": np.minimum(c1r, c2f)}


def run_distributed_nonba(c: CapacityMatrix, eta: float = 1.0) -> DistributedDecision:
    """Assemble the non-buffered decision from beacons.

    The mixed-mode value is reconstructed as max mix1 + max mix2, which can
    exceed what the two winning relays actually support together. The
    returned ``tau`` is the achievable rate of the assembled assignment;
    ``claimed_tau`` is the reconstructed value that won the mode contest.
    """
    m_count = c.relays
    beacons, log = run_timers(local_nonba_metrics(c), eta)
    hyb, h = _recovered(beacons, "hyb", eta)
    fso, f = _recovered(beacons, "fso", eta)
    rf, r = _recovered(beacons, "rf", eta)
    mix1, x1 = _recovered(beacons, "mix1", eta)
    mix2, x2 = _recovered(beacons, "mix2", eta)
    ind = fso + rf
    mix = mix1 + mix2 if m_count > 1 else -math.inf

    alpha = np.zeros((2, m_count), dtype=int)
    beta = np.zeros((2, m_count), dtype=int)
    rates = np.zeros(m_count)
    feasible = True
    if hyb >= ind and hyb >= mix:
        mode, claimed = Mode.HYBRID, hyb
        roles = (h, h, h, h)
        tau, rho1 = hybrid_rate(c.fso[0, h], c.rf[0, h], c.fso[1, h], c.rf[1, h])
        rates[h] = tau
    elif ind >= mix:
        mode, claimed = Mode.INDEPENDENT, ind
        roles = (f, f, r, r)
        rf_rate, rho1 = rf_relay_rate(c.rf[0, r], c.rf[1, r])
        rates[f] += fso
        rates[r] += rf_rate
    else:
        mode, claimed = Mode.MIXED, mix
        m, n = x1, x2
        roles = (m, n, n, m)
        if m == n:
            tau, rho1 = hybrid_rate(c.fso[0, m], c.rf[0, m], c.fso[1, m], c.rf[1, m])
            rates[m] = tau
            feasible = False
        else:
            args = (c.fso[0, m], c.rf[1, m], c.fso[1, n], c.rf[0, n])
            _, _, feasible = mixed_rate_closed_form(*args)
            _, rho1, _ = mixed_rate_exact(*args)
            rates[m] = min(c.fso[0, m], (1.0 - rho1) * c.rf[1, m])
            rates[n] = min(rho1 * c.rf[0, n], c.fso[1, n])
    alpha[0, roles[0]] = 1
    alpha[1, roles[1]] = 1
    beta[0, roles[2]] = 1
    beta[1, roles[3]] = 1
    return DistributedDecision(alpha=alpha, beta=beta, rho1=float(rho1), mode=mode,
                               rates=rates, tau=float(rates.sum()), claimed_tau=float(claimed),
                               mixed_feasible=bool(feasible), beacons=beacons, log=log)


def run_distributed_ba(c: CapacityMatrix, w: BaWeights, eta: float = 1.0,
                       return_log: bool = False):
    """Buffer-aided decision from three timer classes.

    The RF timer uses the larger of a relay's two weighted RF scores and its
    beacon names the direction; equal scores go to reception.
    """
    fm, rm = selection_metrics(c, w)
    up = rm[0] >= rm[1]
    payloads = {"rf": [{"dir": "rx" if u else "tx"} for u in up]}
    beacons, log = run_timers({"fso1": fm[0], "fso2": fm[1], "rf": np.maximum(rm[0], rm[1])},
                              eta, payloads)
    rx = beacons["fso1"].relay if "fso1" in beacons else 0
    tx = beacons["fso2"].relay if "fso2" in beacons else 0
    if "rf" in beacons:
        ev = beacons["rf"]
        hop, relay = (0 if ev.payload["dir"] == "rx" else 1), ev.relay
    else:
        hop, relay = 0, 0
    decision = make_decision(c.relays, rx, tx, hop, relay)
    return (decision, log) if return_log else decision


def has_ties(values: np.ndarray, rtol: float = 0.0) -> bool:
    """True if two positive entries are equal (within ``rtol``)."""
    v = np.sort(np.asarray(values, dtype=float).ravel())
    v = v[v > 0]
    if v.size < 2:
        return False
    return bool(np.any(np.diff(v) <= rtol * v[1:]))

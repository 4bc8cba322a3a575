"""Comparison schemes: max-min selection without buffers and greedy
single-link selection with buffers, each FSO-only or with an independent
RF layer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .channels import CapacityMatrix

# "effectively infinite" buffers, in units of the largest per-slot capacity
INFINITE_BUFFER_FACTOR = 1e9


class BenchmarkKind(str, enum.Enum):
    NONBA_MAXMIN_FSO = "nonba_maxmin_fso"
    NONBA_INDEPENDENT = "nonba_independent"
    BA_BEST_FSO = "ba_best_fso"
    BA_INDEPENDENT = "ba_independent"


def nonba_maxmin_fso(c: CapacityMatrix):
    """Best bottleneck FSO relay; per slot for traces."""
    out = np.minimum(c.fso[..., 0, :], c.fso[..., 1, :]).max(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def nonba_independent(c: CapacityMatrix):
    """Max-min FSO relay plus a max-min RF relay using half a slot per hop."""
    rf = 0.5 * np.minimum(c.rf[..., 0, :], c.rf[..., 1, :]).max(axis=-1)
    return nonba_maxmin_fso(c) + rf


@dataclass
class GreedyRun:
    """Outcome of a greedy buffer-aided benchmark over a trace."""

    throughput: float
    delivered: np.ndarray  # bits reaching the destination per slot
    arrival: np.ndarray  # mean bits into each relay buffer per slot
    final_queue: np.ndarray
    total_in: float
    total_out: float


def _default_qmax(caps: np.ndarray) -> float:
    top = float(caps.max()) if caps.size else 0.0
    return INFINITE_BUFFER_FACTOR * top if top > 0 else math.inf


def _greedy(cap1: list, cap2: list, qmax: list, q: list, delivered: list, arrived: list,
            both_dirs: bool, half: bool):
    """One pass of greedy single-link selection over a list-of-rows trace."""
    m_count = len(q)
    scale = 0.5 if half else 1.0
    for b in range(len(cap1)):
        r_row, t_row = cap1[b], cap2[b]
        if both_dirs:
            # half-slot mode: best rx link and best tx link each get half a slot
            best_rx, i_rx = -1.0, 0
            best_tx, i_tx = -1.0, 0
            for m in range(m_count):
                room = qmax[m] - q[m]
                v = scale * r_row[m]
                v = v if v < room else room
                if v > best_rx:
                    best_rx, i_rx = v, m
                v = scale * t_row[m]
                v = v if v < q[m] else q[m]
                if v > best_tx:
                    best_tx, i_tx = v, m
            q[i_tx] -= best_tx
            q[i_rx] += best_rx
            delivered[b] += best_tx
            arrived[i_rx] += best_rx
            continue
        best, idx, tx = -1.0, 0, False
        for m in range(m_count):
            room = qmax[m] - q[m]
            v = r_row[m] if r_row[m] < room else room
            if v > best:
                best, idx, tx = v, m, False
        for m in range(m_count):
            v = t_row[m] if t_row[m] < q[m] else q[m]
            if v > best:
                best, idx, tx = v, m, True
        if tx:
            q[idx] -= best
            delivered[b] += best
        else:
            q[idx] += best
            arrived[idx] += best


def _run(layers, nb: int, m_count: int) -> GreedyRun:
    delivered = [0.0] * nb
    arrived = [0.0] * m_count
    finals = np.zeros(m_count)
    for cap1, cap2, qmax, both_dirs, half in layers:
        q = [0.0] * m_count
        _greedy(cap1.tolist(), cap2.tolist(), [float(qmax)] * m_count, q, delivered, arrived,
                both_dirs, half)
        finals += np.array(q)
    delivered = np.array(delivered)
    total_out = float(delivered.sum())
    return GreedyRun(throughput=total_out / nb if nb else 0.0, delivered=delivered,
                     arrival=np.array(arrived) / nb if nb else np.zeros(m_count),
                     final_queue=finals, total_in=float(sum(arrived)), total_out=total_out)


def ba_best_fso(c: CapacityMatrix, qmax: float | None = None) -> GreedyRun:
    """Each slot activates the one FSO link (any hop, any relay) moving the most bits.

    Source->relay links are limited by free buffer space, relay->destination
    links by buffered bits. Ties go to hop 1, then the lowest relay.
    """
    nb = len(c) if c.fso.ndim == 3 else 0
    if nb == 0:
        return _run([], 0, c.relays)
    qmax = _default_qmax(c.fso) if qmax is None else qmax
    return _run([(c.fso[:, 0, :], c.fso[:, 1, :], qmax, False, False)], nb, c.relays)


def ba_independent(c: CapacityMatrix, qmax: float | None = None, rf_half_slot: bool = False) -> GreedyRun:
    """Greedy FSO layer plus a separate greedy RF layer with its own buffers.

    By default one RF link takes the whole slot. With ``rf_half_slot`` the
    best RF reception and the best RF transmission each get half a slot.
    """
    nb = len(c) if c.fso.ndim == 3 else 0
    if nb == 0:
        return _run([], 0, c.relays)
    q_fso = _default_qmax(c.fso) if qmax is None else qmax
    q_rf = _default_qmax(c.rf) if qmax is None else qmax
    return _run([(c.fso[:, 0, :], c.fso[:, 1, :], q_fso, False, False),
                 (c.rf[:, 0, :], c.rf[:, 1, :], q_rf, rf_half_slot, rf_half_slot)], nb, c.relays)


def run_benchmark(kind: BenchmarkKind | str, c: CapacityMatrix, **kw) -> float:
    """Mean delivered rate of a benchmark over a (B, 2, M) trace."""
    kind = BenchmarkKind(kind)
    if kind is BenchmarkKind.NONBA_MAXMIN_FSO:
        return float(np.mean(nonba_maxmin_fso(c))) if len(c) else 0.0
    if kind is BenchmarkKind.NONBA_INDEPENDENT:
        return float(np.mean(nonba_independent(c))) if len(c) else 0.0
    if kind is BenchmarkKind.BA_BEST_FSO:
        return ba_best_fso(c, **kw).throughput
    return ba_independent(c, **kw).throughput

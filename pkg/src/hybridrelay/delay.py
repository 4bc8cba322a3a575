"""Buffer-aided selection with finite relay buffers.

Slot duration is normalized to one second, so a capacity in bit/s is also
the number of bits a link can carry in one slot and buffer sizes are in
bits. Each relay's scores are clipped by what it can actually absorb
(free buffer space) or forward (buffered bits); the selection is then the
same weighted argmax as in :mod:`hybridrelay.ba`.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .ba import BaDecision, BaWeights, argmax_metrics, make_decision
from .channels import CapacityMatrix, NetworkConfig, capacity_trace


@dataclass
class QueueState:
    """Buffered bits per relay; ``ledger`` holds FIFO ``[bits, slot]`` entries when enabled."""

    q: np.ndarray
    qmax: np.ndarray
    ledger: list | None = None

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.qmax = np.broadcast_to(np.asarray(self.qmax, dtype=float), self.q.shape).copy()
        if np.any(self.qmax < 0):
            raise ValueError("buffer capacities must be >= 0")
        if np.any(self.q < 0) or np.any(self.q > self.qmax):
            raise ValueError(f"queue {self.q} outside [0, {self.qmax}]")

    @classmethod
    def empty(cls, qmax, relays: int | None = None, ledger: bool = False) -> "QueueState":
        qmax = np.asarray(qmax, dtype=float)
        if qmax.ndim == 0:
            if relays is None:
                raise ValueError("relays is required with a scalar qmax")
            qmax = np.full(relays, float(qmax))
        return cls(np.zeros(qmax.shape), qmax, [deque() for _ in qmax] if ledger else None)

    @property
    def headroom(self) -> np.ndarray:
        return self.qmax - self.q


def modified_metrics(c: CapacityMatrix, w: BaWeights, q: QueueState,
                     literal_rf_tx: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Queue-limited scores for a single slot, shape (2, M) each.

    ``literal_rf_tx`` scores the RF transmit side with the hop-1 RF capacity
    instead of the hop-2 one.
    """
    lam = w.lam
    room = q.headroom
    fso = np.stack([lam * np.minimum(c.fso[0], room), (1.0 - lam) * np.minimum(c.fso[1], q.q)])
    rf_out = c.rf[0] if literal_rf_tx else c.rf[1]
    rf = np.stack([lam * np.minimum(c.rf[0], room), (1.0 - lam) * np.minimum(rf_out, q.q)])
    return fso, rf


def select_delay_ba(c: CapacityMatrix, w: BaWeights, q: QueueState,
                    literal_rf_tx: bool = False) -> BaDecision:
    fm, rm = modified_metrics(c, w, q, literal_rf_tx)
    roles = (int(x[0]) for x in argmax_metrics(fm[None], rm[None]))
    return make_decision(c.relays, *roles)


def step_queue(q: QueueState, decision: BaDecision, c: CapacityMatrix,
               slot: int = 0) -> tuple[QueueState, np.ndarray, np.ndarray]:
    """Advance one slot. Both transfers are limited by the pre-slot queue."""
    inflow, outflow = decision.flows(c)
    r2 = np.minimum(outflow, q.q)
    r1 = np.minimum(inflow, q.qmax - q.q)
    new_q = np.clip(q.q - r2 + r1, 0.0, q.qmax)
    ledger = None
    if q.ledger is not None:
        ledger = [deque(list(e) for e in d) for d in q.ledger]
        for m in range(q.q.size):
            _fifo_pop(ledger[m], r2[m])
            if r1[m] > 0:
                ledger[m].append([float(r1[m]), slot])
    return QueueState(new_q, q.qmax, ledger), r1, r2


def _fifo_pop(fifo: deque, bits: float, slot: int = 0) -> float:
    """Remove ``bits`` oldest bits; return their summed (bits x age) at ``slot``."""
    age = 0.0
    while bits > 0 and fifo:
        head = fifo[0]
        take = head[0] if head[0] <= bits else bits
        age += take * (slot - head[1])
        bits -= take
        if take == head[0]:
            fifo.popleft()
        else:
            head[0] -= take
    return age


@dataclass
class DelayResult:
    throughput: float
    delay: float  # Little's-law estimate, slots
    fifo_delay: float  # NaN unless the ledger was enabled
    arrival: np.ndarray
    departure: np.ndarray
    queue_mean: np.ndarray
    final_queue: np.ndarray
    total_in: float
    total_out: float
    slots: int
    trace: dict | None = field(default=None, repr=False)

    def write_trace_csv(self, path) -> None:
        if self.trace is None:
            raise ValueError("run was made without keep_trace=True")
        q, r1, r2 = self.trace["q"], self.trace["r1"], self.trace["r2"]
        m_count = q.shape[1]
        header = (["slot"] + [f"q_{m + 1}" for m in range(m_count)]
                  + [f"r1_{m + 1}" for m in range(m_count)] + [f"r2_{m + 1}" for m in range(m_count)])
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(header)
            for b in range(q.shape[0]):
                wr.writerow([b] + [repr(float(x)) for x in (*q[b], *r1[b], *r2[b])])


def run_delay_ba(source, w: BaWeights, qmax, slots: int | None = None,
                 rng: np.random.Generator | None = None, ledger: bool = False,
                 literal_rf_tx: bool = False, keep_trace: bool = False,
                 q0=None) -> DelayResult:
    """Simulate the finite-buffer policy over a capacity trace.

    ``source`` is a (B, 2, M) :class:`CapacityMatrix` or a
    :class:`NetworkConfig` to draw ``slots`` slots from. Slot b uses row b
    of ``w.per_slot``, as in :func:`hybridrelay.ba.select_ba_trace`. Queue means are
    taken over end-of-slot states, so a bit enqueued in slot b and sent in
    slot b' is counted b' - b times, matching the FIFO delay b' - b.
    """
    if isinstance(source, NetworkConfig):
        slots = source.slots if slots is None else slots
        rng = rng if rng is not None else np.random.default_rng(source.seed)
        source = capacity_trace(source, rng, slots)
    m_count = source.relays
    qmax_v = np.broadcast_to(np.asarray(qmax, dtype=float), (m_count,)).astype(float)
    if np.any(qmax_v < 0):
        raise ValueError("qmax must be >= 0")
    nb = len(source) if source.fso.ndim == 3 else 0
    lam_rows = w.per_slot(nb).tolist()
    qmx = [float(x) for x in qmax_v]
    q = [0.0] * m_count if q0 is None else [float(x) for x in np.broadcast_to(q0, (m_count,))]
    fifos = [deque() for _ in range(m_count)] if ledger else None
    if fifos is not None:
        for m in range(m_count):
            if q[m] > 0:  # pre-loaded bits count as arriving just before the run
                fifos[m].append([q[m], -1])
    c1f, c2f = source.fso[:, 0, :].tolist(), source.fso[:, 1, :].tolist()
    c1r, c2r = source.rf[:, 0, :].tolist(), source.rf[:, 1, :].tolist()
    rf_tx_cap = c1r if literal_rf_tx else c2r
    q_sum = [0.0] * m_count
    in_sum = [0.0] * m_count
    out_sum = [0.0] * m_count
    age_sum = 0.0
    age_bits = 0.0
    tr_q = np.zeros((nb, m_count)) if keep_trace else None
    tr_r1 = np.zeros((nb, m_count)) if keep_trace else None
    tr_r2 = np.zeros((nb, m_count)) if keep_trace else None
    rng_m = range(m_count)

    for b in range(nb):
        a1, a2, b1, b2, b2x = c1f[b], c2f[b], c1r[b], c2r[b], rf_tx_cap[b]
        lam = lam_rows[b]
        # strict '>' keeps the lowest index on ties, hop 1 before hop 2 for RF
        best_rx = best_tx = best_rf = -1.0
        i_rx = i_tx = i_rf = 0
        up = True
        for m in rng_m:
            room = qmx[m] - q[m]
            v = lam[m] * (a1[m] if a1[m] < room else room)
            if v > best_rx:
                best_rx, i_rx = v, m
            v = (1.0 - lam[m]) * (a2[m] if a2[m] < q[m] else q[m])
            if v > best_tx:
                best_tx, i_tx = v, m
            v = lam[m] * (b1[m] if b1[m] < room else room)
            if v > best_rf:
                best_rf, i_rf = v, m
        for m in rng_m:
            v = (1.0 - lam[m]) * (b2x[m] if b2x[m] < q[m] else q[m])
            if v > best_rf:
                best_rf, i_rf, up = v, m, False

        arrive = [0.0] * m_count
        depart = [0.0] * m_count
        arrive[i_rx] += a1[i_rx]
        depart[i_tx] += a2[i_tx]
        if up:
            arrive[i_rf] += b1[i_rf]
        else:
            depart[i_rf] += b2[i_rf]
        for m in rng_m:
            qm = q[m]
            r2 = depart[m] if depart[m] < qm else qm
            room = qmx[m] - qm
            r1 = arrive[m] if arrive[m] < room else room
            nq = qm - r2 + r1
            q[m] = 0.0 if nq < 0.0 else (qmx[m] if nq > qmx[m] else nq)
            in_sum[m] += r1
            out_sum[m] += r2
            q_sum[m] += q[m]
            if fifos is not None:
                if r2 > 0:
                    age_sum += _fifo_pop(fifos[m], r2, b)
                    age_bits += r2
                if r1 > 0:
                    fifos[m].append([r1, b])
            if keep_trace:
                tr_q[b, m] = q[m]
                tr_r1[b, m] = r1
                tr_r2[b, m] = r2

    if nb == 0:
        zero = np.zeros(m_count)
        return DelayResult(0.0, math.nan, math.nan, zero, zero.copy(), zero.copy(),
                           np.array(q), 0.0, 0.0, 0)
    arrival = np.array(in_sum) / nb
    departure = np.array(out_sum) / nb
    queue_mean = np.array(q_sum) / nb
    total_arr = arrival.sum()
    delay = float(queue_mean.sum() / total_arr) if total_arr > 0 else math.nan
    fifo = age_sum / age_bits if (fifos is not None and age_bits > 0) else math.nan
    trace = {"q": tr_q, "r1": tr_r1, "r2": tr_r2} if keep_trace else None
    return DelayResult(throughput=float(departure.sum()), delay=delay, fifo_delay=float(fifo),
                       arrival=arrival, departure=departure, queue_mean=queue_mean,
                       final_queue=np.array(q), total_in=float(sum(in_sum)),
                       total_out=float(sum(out_sum)), slots=nb, trace=trace)

"""Buffer-aided relay selection driven by per-relay Lagrange weights.

With infinite relay buffers the long-run throughput problem decouples into
a per-slot weighted argmax: relay ``m`` is scored ``lam[m] * C`` on its
source->relay links and ``(1 - lam[m]) * C`` on its relay->destination
links. One FSO link is picked per hop, and a single RF link (either
direction) takes the whole slot. ``lam`` is trained offline by projected
subgradient steps on the arrival/departure imbalance.

A fixed ``lam`` cannot split traffic between relays whose links are
equally good (for example FSO links saturated at their bandwidth), so the
trained weights also carry a schedule of late subgradient iterates. Trace
evaluation cycles through it slot by slot, which realizes the time-shared
schedule the dual solution stands for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .channels import CapacityMatrix, NetworkConfig, capacity_trace

Sampler = Callable[[np.random.Generator, int], CapacityMatrix]


@dataclass(frozen=True)
class BaWeights:
    lam: np.ndarray
    iterations: int = 0
    converged: bool = False
    step0: float = 0.0
    residuals: np.ndarray | None = None
    seed: int | None = None
    history: "TrainingTrace | None" = field(default=None, compare=False, repr=False)
    schedule: np.ndarray | None = field(default=None, compare=False, repr=False)  # (K, M)

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float))
        if lam.ndim != 1 or np.any(lam < 0) or np.any(lam > 1) or np.any(np.isnan(lam)):
            raise ValueError(f"lambda entries must lie in [0, 1], got {lam}")
        object.__setattr__(self, "lam", lam)
        if self.residuals is not None:
            object.__setattr__(self, "residuals", np.asarray(self.residuals, dtype=float))
        if self.schedule is not None:
            sch = np.asarray(self.schedule, dtype=float).reshape(-1, lam.size)
            if sch.shape[0] == 0 or np.any(sch < 0) or np.any(sch > 1) or np.any(np.isnan(sch)):
                raise ValueError("schedule entries must lie in [0, 1]")
            object.__setattr__(self, "schedule", sch)

    @property
    def relays(self) -> int:
        return self.lam.size

    @classmethod
    def uniform(cls, relays: int, value: float = 0.5) -> "BaWeights":
        return cls(np.full(relays, float(value)))

    def per_slot(self, slots: int) -> np.ndarray:
        """(slots, M) weights: the schedule cycled in slot order, else ``lam`` repeated."""
        if self.schedule is None:
            return np.broadcast_to(self.lam, (slots, self.relays))
        return self.schedule[np.arange(slots) % self.schedule.shape[0]]

    def fixed(self) -> "BaWeights":
        return replace(self, schedule=None, history=None)

    def to_text(self) -> str:
        def vec(x):
            return ", ".join(repr(float(v)) for v in x)

        lines = [f"lambda = {vec(self.lam)}",
                 f"iterations = {self.iterations}",
                 f"converged = {str(self.converged).lower()}",
                 f"step0 = {self.step0!r}"]
        if self.residuals is not None:
            lines.append(f"residuals = {vec(self.residuals)}")
        if self.seed is not None:
            lines.append(f"seed = {self.seed}")
        if self.schedule is not None:
            lines.append("schedule = " + "; ".join(vec(row) for row in self.schedule))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BaWeights":
        kv = {}
        for n, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {n}: expected 'key = value', got {raw!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            kv[key] = value
        if "lambda" not in kv:
            raise ValueError("weights file has no 'lambda' entry")

        def vec(s):
            return np.array([float(x) for x in s.split(",") if x.strip()])

        return cls(lam=vec(kv["lambda"]),
                   iterations=int(kv.get("iterations", 0)),
                   converged=kv.get("converged", "false").lower() == "true",
                   step0=float(kv.get("step0", 0.0)),
                   residuals=vec(kv["residuals"]) if "residuals" in kv else None,
                   seed=int(kv["seed"]) if "seed" in kv else None,
                   schedule=np.array([vec(r) for r in kv["schedule"].split(";")]) if "schedule" in kv else None)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "BaWeights":
        return cls.from_text(Path(path).read_text())


@dataclass
class BaDecision:
    """One slot's BA assignment. ``rho`` is binary: the RF link uses the whole slot."""

    alpha: np.ndarray
    beta: np.ndarray
    rho: np.ndarray

    @property
    def fso_rx(self) -> int:
        return int(np.argmax(self.alpha[0]))

    @property
    def fso_tx(self) -> int:
        return int(np.argmax(self.alpha[1]))

    @property
    def rf_hop(self) -> int:
        return int(np.argmax(self.rho))

    @property
    def rf_relay(self) -> int:
        return int(np.argmax(self.beta[self.rf_hop]))

    def key(self) -> tuple[int, int, int, int]:
        return self.fso_rx, self.fso_tx, self.rf_hop, self.rf_relay

    def relays_used(self) -> set[int]:
        return {self.fso_rx, self.fso_tx, self.rf_relay}

    def flows(self, c: CapacityMatrix) -> tuple[np.ndarray, np.ndarray]:
        """Per-relay arriving and departing capacity in this slot."""
        inflow = self.alpha[0] * c.fso[0] + self.beta[0] * self.rho[0] * c.rf[0]
        outflow = self.alpha[1] * c.fso[1] + self.beta[1] * self.rho[1] * c.rf[1]
        return inflow, outflow


def make_decision(m_count: int, fso_rx: int, fso_tx: int, rf_hop: int, rf_relay: int) -> BaDecision:
    alpha = np.zeros((2, m_count), dtype=int)
    beta = np.zeros((2, m_count), dtype=int)
    alpha[0, fso_rx] = 1
    alpha[1, fso_tx] = 1
    beta[rf_hop, rf_relay] = 1
    beta[1 - rf_hop, 0] = 1  # idle direction, throughput-irrelevant
    rho = np.zeros(2, dtype=int)
    rho[rf_hop] = 1
    return BaDecision(alpha, beta, rho)


def _hop_weights(lam: np.ndarray) -> np.ndarray:
    return np.stack([lam, 1.0 - lam], axis=-2)


def selection_metrics(c: CapacityMatrix, w: BaWeights) -> tuple[np.ndarray, np.ndarray]:
    """Weighted link scores, same shape as the capacities."""
    if w.relays != c.relays:
        raise ValueError(f"weights cover {w.relays} relays, capacities {c.relays}")
    hw = _hop_weights(w.lam)
    return hw * c.fso, hw * c.rf


@dataclass
class BaTrace:
    """Vectorized BA decisions and the flows they induce over a trace."""

    fso_rx: np.ndarray
    fso_tx: np.ndarray
    rf_hop: np.ndarray
    rf_relay: np.ndarray
    arrivals: np.ndarray  # (B, M)
    departures: np.ndarray  # (B, M)

    def __len__(self):
        return self.fso_rx.shape[0]

    def decision(self, b: int) -> BaDecision:
        return make_decision(self.arrivals.shape[1], int(self.fso_rx[b]), int(self.fso_tx[b]),
                             int(self.rf_hop[b]), int(self.rf_relay[b]))


def argmax_metrics(fso_metric: np.ndarray, rf_metric: np.ndarray):
    """Role winners for (B, 2, M) metric arrays; ties go to the lowest (hop, relay)."""
    nb, _, m_count = fso_metric.shape
    fso_rx = np.argmax(fso_metric[:, 0, :], axis=1)
    fso_tx = np.argmax(fso_metric[:, 1, :], axis=1)
    rf_hop, rf_relay = np.divmod(np.argmax(rf_metric.reshape(nb, 2 * m_count), axis=1), m_count)
    return fso_rx, fso_tx, rf_hop, rf_relay


def flows_from_roles(c: CapacityMatrix, fso_rx, fso_tx, rf_hop, rf_relay):
    nb, _, m_count = c.fso.shape
    rows = np.arange(nb)
    arr = np.zeros((nb, m_count))
    dep = np.zeros((nb, m_count))
    arr[rows, fso_rx] += c.fso[rows, 0, fso_rx]
    dep[rows, fso_tx] += c.fso[rows, 1, fso_tx]
    rf_cap = c.rf[rows, rf_hop, rf_relay]
    up = rf_hop == 0
    arr[rows[up], rf_relay[up]] += rf_cap[up]
    dep[rows[~up], rf_relay[~up]] += rf_cap[~up]
    return arr, dep


def select_ba_trace(c: CapacityMatrix, w: BaWeights) -> BaTrace:
    """Decisions for every slot; slot b uses ``w.per_slot`` row b."""
    if c.fso.ndim != 3:
        raise ValueError("expected a (B, 2, M) capacity trace")
    if w.relays != c.relays:
        raise ValueError(f"weights cover {w.relays} relays, capacities {c.relays}")
    hw = _hop_weights(w.per_slot(len(c)))
    fm, rm = hw * c.fso, hw * c.rf
    roles = argmax_metrics(fm, rm)
    arr, dep = flows_from_roles(c, *roles)
    return BaTrace(*roles, arrivals=arr, departures=dep)


def select_ba(c: CapacityMatrix, w: BaWeights) -> BaDecision:
    """Single-slot decision with the averaged weights ``w.lam``."""
    return select_ba_trace(CapacityMatrix(c.fso[None], c.rf[None]), w.fixed()).decision(0)


@dataclass
class BaThroughput:
    tau: float
    arrival: np.ndarray
    departure: np.ndarray

    @property
    def per_relay(self) -> np.ndarray:
        return np.minimum(self.arrival, self.departure)


def throughput_from_flows(arrival: np.ndarray, departure: np.ndarray) -> BaThroughput:
    return BaThroughput(float(np.minimum(arrival, departure).sum()), arrival, departure)


def ba_throughput(source, w: BaWeights, slots: int | None = None,
                  rng: np.random.Generator | None = None) -> BaThroughput:
    """Sum over relays of min(mean arrival, mean departure).

    ``source`` is either a capacity trace or a :class:`NetworkConfig`, in
    which case ``slots`` fresh slots are drawn from ``rng``.
    """
    if isinstance(source, NetworkConfig):
        slots = source.slots if slots is None else slots
        rng = rng if rng is not None else np.random.default_rng(source.seed)
        source = capacity_trace(source, rng, slots)
    m_count = source.relays
    if source.fso.ndim != 3 or len(source) == 0:
        zero = np.zeros(m_count)
        return BaThroughput(0.0, zero, zero.copy())
    t = select_ba_trace(source, w)
    return throughput_from_flows(t.arrivals.mean(axis=0), t.departures.mean(axis=0))


# -- offline training ---------------------------------------------------------

@dataclass
class TrainingTrace:
    lam: np.ndarray  # (K+1, M), starting point included
    arrival: np.ndarray  # (K, M) mean arrival under lam[k]
    departure: np.ndarray  # (K, M)
    steps: np.ndarray  # (K,)
    rf_up_share: np.ndarray  # (K,) fraction of slots with the RF link on hop 1

    def average(self, start: float = 0.0) -> BaThroughput:
        """Primal average over iterations from fraction ``start`` onward.

        With deterministic channels a fixed lambda picks one RF direction in
        every slot; averaging the iterates recovers the time-shared schedule
        the dual solution represents.
        """
        k0 = int(math.floor(start * len(self.steps)))
        return throughput_from_flows(self.arrival[k0:].mean(axis=0), self.departure[k0:].mean(axis=0))

    def rf_up_average(self, start: float = 0.0) -> float:
        k0 = int(math.floor(start * len(self.steps)))
        return float(self.rf_up_share[k0:].mean())


def _as_sampler(source) -> Sampler:
    if isinstance(source, NetworkConfig):
        return lambda rng, n: capacity_trace(source, rng, n)
    if isinstance(source, CapacityMatrix):
        if source.fso.ndim == 2:
            source = CapacityMatrix(source.fso[None], source.rf[None])

        def fixed(rng, n):
            idx = rng.integers(0, len(source), size=n) if len(source) > 1 else np.zeros(n, dtype=int)
            return source[idx]

        return fixed
    if callable(source):
        return source
    raise TypeError(f"cannot sample capacities from {type(source).__name__}")


def train_lambda(source, iterations: int = 1000, samples: int = 2000, step0: float | None = None,
                 seed: int = 0, tol: float = 1e-4, window: int = 10, init: float = 0.5,
                 relays: int | None = None, average: bool = True, min_iterations: int = 100,
                 tail: float = 0.5, dither: str = "auto", validation: int | None = None) -> BaWeights:
    """Projected subgradient on the arrival-minus-departure imbalance.

    ``source`` is a :class:`NetworkConfig`, a fixed capacity trace that is
    resampled with replacement, or a callable ``(rng, n) -> CapacityMatrix``.
    Each iteration draws ``samples`` fresh slots. The step at iteration k is
    ``step0 / sqrt(k)``; when ``step0`` is None it is set so the first
    update moves lambda by at most 0.1.

    With ``average`` (the default) the returned weights are the mean of the
    iterates over the last ``tail`` fraction of the run. The raw iterates
    keep hopping across the kinks of the dual function and often sit on a
    clip boundary, where every transmit score vanishes and selection
    degenerates; their average does not. The same tail iterates are
    kept as ``schedule`` for trace evaluation when ``dither`` is "always",
    or with "auto" when cycling them beats the averaged weights on a paired
    validation batch of ``validation`` slots (default ``10 * samples``)
    drawn from the training stream; "never" drops it. Training stops early, after at
    least ``min_iterations``, once the returned weights move less than
    ``tol`` for ``window`` consecutive iterations.
    """
    if iterations < 1 or samples < 1:
        raise ValueError("iterations and samples must be >= 1")
    sampler = _as_sampler(source)
    rng = np.random.default_rng(seed)
    if relays is None:
        relays = source.relays if hasattr(source, "relays") else sampler(np.random.default_rng(0), 1).relays
    lam = np.full(relays, float(init))
    lams, arrs, deps, steps, ups = [lam.copy()], [], [], [], []
    quiet, converged = 0, False
    eps0 = step0
    out = lam.copy()
    for k in range(1, iterations + 1):
        c = sampler(rng, samples)
        t = select_ba_trace(c, BaWeights(lam))
        a = t.arrivals.mean(axis=0)
        d = t.departures.mean(axis=0)
        g = a - d
        if eps0 is None:
            scale = float(np.max(np.abs(g)))
            eps0 = 0.1 / scale if scale > 0 else 0.0
        eps = eps0 / math.sqrt(k)
        lam = np.clip(lam - eps * g, 0.0, 1.0)
        arrs.append(a)
        deps.append(d)
        steps.append(eps)
        ups.append(float(np.mean(t.rf_hop == 0)))
        lams.append(lam.copy())
        new_out = np.mean(lams[int(math.floor(tail * k)) + 1:], axis=0) if average else lam
        quiet = quiet + 1 if np.max(np.abs(new_out - out)) < tol else 0
        out = new_out
        if quiet >= window and k >= min_iterations:
            converged = True
            break
    hist = TrainingTrace(np.array(lams), np.array(arrs), np.array(deps), np.array(steps), np.array(ups))
    flows = hist.average(tail)
    schedule = hist.lam[int(math.floor(tail * len(steps))) + 1:] if average else None
    if dither not in ("auto", "always", "never"):
        raise ValueError(f"dither must be 'auto', 'always' or 'never', got {dither!r}")
    fixed = BaWeights(np.clip(out, 0.0, 1.0))
    if schedule is not None and dither == "never":
        schedule = None
    elif schedule is not None and dither == "auto":
        c = sampler(rng, validation or 10 * samples)
        if ba_throughput(c, replace(fixed, schedule=schedule)).tau <= ba_throughput(c, fixed).tau:
            schedule = None
    return BaWeights(lam=fixed.lam, iterations=len(steps), converged=converged,
                     step0=float(eps0 or 0.0), residuals=flows.arrival - flows.departure,
                     seed=seed, history=hist, schedule=schedule)

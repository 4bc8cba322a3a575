"""Optimal per-slot relay selection without relay buffers.

Three transmission modes compete in every slot:

* hybrid: one relay uses both media on both hops, RF time split to balance
  the two hops;
* independent: one relay carries FSO end to end, another (possibly the same)
  carries RF end to end with a balanced RF split;
* mixed: relay ``m`` receives over FSO and forwards over RF while relay ``n``
  receives over RF and forwards over FSO.

The closed-form mixed-mode rate only covers the regime where both relays are
FSO-limited and returns 0 elsewhere. That misses slots where a mixed pair
with one RF-limited relay beats every hybrid and independent option, so
:func:`select_nonba` uses the exact concave maximum over the RF split by
default (``mixed="exact"``). ``mixed="closed-form"`` reproduces the
FSO-limited-only rule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channels import CapacityMatrix

MIXED_RULES = ("exact", "closed-form")


class Mode(str, enum.Enum):
    HYBRID = "hybrid"
    INDEPENDENT = "independent"
    MIXED = "mixed"


MODE_ORDER = (Mode.HYBRID, Mode.INDEPENDENT, Mode.MIXED)


@dataclass
class SelectionDecision:
    """One slot's non-BA assignment. ``alpha``/``beta`` are (2, M) one-hot rows."""

    alpha: np.ndarray
    beta: np.ndarray
    rho1: float
    mode: Mode
    rates: np.ndarray
    tau: float

    @property
    def rho2(self) -> float:
        return 1.0 - self.rho1

    @property
    def fso_rx(self) -> int:
        return int(np.argmax(self.alpha[0]))

    @property
    def fso_tx(self) -> int:
        return int(np.argmax(self.alpha[1]))

    @property
    def rf_rx(self) -> int:
        return int(np.argmax(self.beta[0]))

    @property
    def rf_tx(self) -> int:
        return int(np.argmax(self.beta[1]))

    def relays_used(self) -> set[int]:
        return {self.fso_rx, self.fso_tx, self.rf_rx, self.rf_tx}

    def link_limits(self, c: CapacityMatrix) -> tuple[np.ndarray, np.ndarray]:
        """Per-relay incoming and outgoing capacity under this assignment."""
        inflow = self.alpha[0] * c.fso[0] + self.beta[0] * self.rho1 * c.rf[0]
        outflow = self.alpha[1] * c.fso[1] + self.beta[1] * self.rho2 * c.rf[1]
        return inflow, outflow


# -- elementwise rate formulas (broadcast over any leading shape) -----------

def _ratio(num, den):
    """num/den with 0/0 -> 0 and x/0 -> inf for x > 0."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.inf)
    return np.where(num > 0, out, 0.0)


def hybrid_rate(c1f, c1r, c2f, c2r):
    """Single-relay hybrid throughput and the S->R RF time share."""
    c1f, c1r, c2f, c2r = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (c1f, c1r, c2f, c2r)))
    den = c1r + c2r
    safe = np.where(den > 0, den, 1.0)
    rho = np.clip((c2f + c2r - c1f) / safe, 0.0, 1.0)
    tau = np.where(c2f + c2r < c1f, c2f + c2r,
                   np.where(c1f + c1r < c2f, c1f + c1r, c1f + rho * c1r))
    rho = np.where(den > 0, rho, 0.0)
    tau = np.where(den > 0, tau, np.minimum(c1f, c2f))
    return tau, rho


def rf_relay_rate(c1r, c2r):
    """Balanced two-hop RF rate C1 C2 / (C1 + C2) and its S->R share."""
    c1r = np.asarray(c1r, dtype=float)
    c2r = np.asarray(c2r, dtype=float)
    den = c1r + c2r
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, c1r * c2r / safe, 0.0), np.where(den > 0, c2r / safe, 0.0)


def mixed_rate_closed_form(c1f_m, c2r_m, c2f_n, c1r_n):
    """FSO-limited mixed rate: C1f_m + C2f_n when the RF split can support both FSO hops."""
    share_n = _ratio(c2f_n, c1r_n)
    share_m = _ratio(c1f_m, c2r_m)
    feasible = share_n + share_m <= 1.0
    tau = np.where(feasible, np.asarray(c1f_m, dtype=float) + c2f_n, 0.0)
    return tau, np.where(feasible, share_n, 0.0), feasible


def mixed_rate_exact(c1f_m, c2r_m, c2f_n, c1r_n):
    """Maximum over rho1 of min(C1f_m, rho2 C2r_m) + min(rho1 C1r_n, C2f_n).

    The objective is concave and piecewise linear in rho1, so its maximum is
    attained at an endpoint or at a hop-balancing breakpoint. When both
    relays can be FSO-limited, the closed-form value and split are returned.
    """
    c1f_m, c2r_m, c2f_n, c1r_n = np.broadcast_arrays(
        *(np.asarray(x, dtype=float) for x in (c1f_m, c2r_m, c2f_n, c1r_n)))
    tau_cf, rho_cf, feasible = mixed_rate_closed_form(c1f_m, c2r_m, c2f_n, c1r_n)
    share_n = _ratio(c2f_n, c1r_n)
    share_m = _ratio(c1f_m, c2r_m)
    cands = np.stack(np.broadcast_arrays(
        np.clip(share_n, 0.0, 1.0), np.clip(1.0 - share_m, 0.0, 1.0),
        np.zeros_like(c1f_m), np.ones_like(c1f_m)))
    vals = np.minimum(c1f_m, (1.0 - cands) * c2r_m) + np.minimum(cands * c1r_n, c2f_n)
    pick = np.argmax(vals, axis=0)
    best = np.take_along_axis(vals, pick[None], 0)[0]
    rho = np.take_along_axis(cands, pick[None], 0)[0]
    return np.where(feasible, tau_cf, best), np.where(feasible, rho_cf, rho), feasible


# -- per-relay scalar operations ---------------------------------------------

def _links(c: CapacityMatrix, m: int):
    return c.fso[0, m], c.rf[0, m], c.fso[1, m], c.rf[1, m]


def tau_hyb(c: CapacityMatrix, m: int) -> tuple[float, float]:
    tau, rho = hybrid_rate(*_links(c, m))
    return float(tau), float(rho)


def tau_fso(c: CapacityMatrix, m: int) -> float:
    return float(min(c.fso[0, m], c.fso[1, m]))


def tau_rf(c: CapacityMatrix, n: int) -> tuple[float, float]:
    tau, rho = rf_relay_rate(c.rf[0, n], c.rf[1, n])
    return float(tau), float(rho)


def tau_ind(c: CapacityMatrix, m: int, n: int) -> tuple[float, float]:
    """FSO end to end via ``m`` plus balanced RF via ``n``."""
    rf, rho = tau_rf(c, n)
    return tau_fso(c, m) + rf, rho


def tau_mix(c: CapacityMatrix, m: int, n: int) -> tuple[float, float]:
    """Closed-form mixed rate (``m``: FSO rx + RF tx, ``n``: RF rx + FSO tx)."""
    tau, rho, _ = mixed_rate_closed_form(c.fso[0, m], c.rf[1, m], c.fso[1, n], c.rf[0, n])
    return float(tau), float(rho)


def tau_mix_exact(c: CapacityMatrix, m: int, n: int) -> tuple[float, float]:
    tau, rho, _ = mixed_rate_exact(c.fso[0, m], c.rf[1, m], c.fso[1, n], c.rf[0, n])
    return float(tau), float(rho)


# -- slot selection ----------------------------------------------------------

@dataclass
class NonBaTrace:
    """Vectorized selections for a (B, 2, M) capacity trace.

    ``mode`` holds indices into :data:`MODE_ORDER`; relay fields are
    zero-based relay indices per role.
    """

    mode: np.ndarray
    tau: np.ndarray
    rho1: np.ndarray
    fso_rx: np.ndarray
    fso_tx: np.ndarray
    rf_rx: np.ndarray
    rf_tx: np.ndarray
    rates: np.ndarray
    mixed_closed_form: np.ndarray

    def __len__(self):
        return self.tau.shape[0]

    def decision(self, b: int) -> SelectionDecision:
        m = self.rates.shape[1]
        alpha = np.zeros((2, m), dtype=int)
        beta = np.zeros((2, m), dtype=int)
        alpha[0, self.fso_rx[b]] = 1
        alpha[1, self.fso_tx[b]] = 1
        beta[0, self.rf_rx[b]] = 1
        beta[1, self.rf_tx[b]] = 1
        return SelectionDecision(alpha=alpha, beta=beta, rho1=float(self.rho1[b]),
                                 mode=MODE_ORDER[int(self.mode[b])],
                                 rates=self.rates[b].copy(), tau=float(self.tau[b]))


def _select_chunk(fso: np.ndarray, rf: np.ndarray, mixed: str) -> NonBaTrace:
    nb, _, m_count = fso.shape
    rows = np.arange(nb)
    c1f, c2f = fso[:, 0, :], fso[:, 1, :]
    c1r, c2r = rf[:, 0, :], rf[:, 1, :]

    hyb, hyb_rho = hybrid_rate(c1f, c1r, c2f, c2r)
    h_idx = np.argmax(hyb, axis=1)
    h_val = hyb[rows, h_idx]

    fso_only = np.minimum(c1f, c2f)
    rf_only, rf_rho = rf_relay_rate(c1r, c2r)
    f_idx = np.argmax(fso_only, axis=1)
    r_idx = np.argmax(rf_only, axis=1)
    i_val = fso_only[rows, f_idx] + rf_only[rows, r_idx]

    # [b, m, n]: m = FSO rx / RF tx, n = RF rx / FSO tx
    args = (c1f[:, :, None], c2r[:, :, None], c2f[:, None, :], c1r[:, None, :])
    if mixed == "exact":
        mix, mix_rho, mix_cf = mixed_rate_exact(*args)
    elif mixed == "closed-form":
        mix, mix_rho, mix_cf = mixed_rate_closed_form(*args)
        mix, mix_rho = np.broadcast_arrays(mix, mix_rho)
    else:
        raise ValueError(f"mixed must be one of {MIXED_RULES}, got {mixed!r}")
    mix = np.array(mix, dtype=float)
    diag = np.arange(m_count)
    mix[:, diag, diag] = -np.inf
    flat = mix.reshape(nb, -1)
    x_idx = np.argmax(flat, axis=1)
    x_val = flat[rows, x_idx]
    x_m, x_n = np.divmod(x_idx, m_count)

    hybrid = (h_val >= i_val) & (h_val >= x_val)
    indep = ~hybrid & (i_val >= x_val)
    mode = np.where(hybrid, 0, np.where(indep, 1, 2))

    tau = np.where(hybrid, h_val, np.where(indep, i_val, x_val))
    rho1 = np.where(hybrid, hyb_rho[rows, h_idx],
                    np.where(indep, rf_rho[rows, r_idx],
                             np.broadcast_to(mix_rho, mix.shape).reshape(nb, -1)[rows, x_idx]))
    fso_rx = np.where(hybrid, h_idx, np.where(indep, f_idx, x_m))
    fso_tx = np.where(hybrid, h_idx, np.where(indep, f_idx, x_n))
    rf_rx = np.where(hybrid, h_idx, np.where(indep, r_idx, x_n))
    rf_tx = np.where(hybrid, h_idx, np.where(indep, r_idx, x_m))

    rates = np.zeros((nb, m_count))
    sel = np.flatnonzero(hybrid)
    rates[sel, h_idx[sel]] = h_val[sel]
    sel = np.flatnonzero(indep)
    rates[sel, f_idx[sel]] += fso_only[sel, f_idx[sel]]
    rates[sel, r_idx[sel]] += rf_only[sel, r_idx[sel]]
    sel = np.flatnonzero(mode == 2)
    if sel.size:
        m_sel, n_sel, r_sel = x_m[sel], x_n[sel], rho1[sel]
        cf = np.broadcast_to(mix_cf, mix.shape).reshape(nb, -1)[sel, x_idx[sel]]
        in_m = c1f[sel, m_sel]
        out_n = c2f[sel, n_sel]
        rates[sel, m_sel] = np.where(cf, in_m, np.minimum(in_m, (1.0 - r_sel) * c2r[sel, m_sel]))
        rates[sel, n_sel] = np.where(cf, out_n, np.minimum(r_sel * c1r[sel, n_sel], out_n))
        tau[sel] = np.where(cf, tau[sel], rates[sel, m_sel] + rates[sel, n_sel])
    mixed_cf = np.where(mode == 2, np.broadcast_to(mix_cf, mix.shape).reshape(nb, -1)[rows, x_idx], False)
    return NonBaTrace(mode=mode, tau=tau, rho1=rho1, fso_rx=fso_rx, fso_tx=fso_tx,
                      rf_rx=rf_rx, rf_tx=rf_tx, rates=rates, mixed_closed_form=mixed_cf)


def select_nonba_trace(c: CapacityMatrix, mixed: str = "exact", chunk: int = 4096) -> NonBaTrace:
    """Optimal non-buffered selection for every slot of a (B, 2, M) trace."""
    if c.fso.ndim != 3:
        raise ValueError("expected a (B, 2, M) capacity trace")
    parts = [_select_chunk(c.fso[s:s + chunk], c.rf[s:s + chunk], mixed)
             for s in range(0, max(len(c), 1), chunk)] if len(c) else []
    if not parts:
        empty = np.zeros(0)
        ints = np.zeros(0, dtype=int)
        return NonBaTrace(ints, empty, empty, ints, ints, ints, ints,
                          np.zeros((0, c.relays)), np.zeros(0, dtype=bool))
    return NonBaTrace(*(np.concatenate([getattr(p, f) for p in parts])
                        for f in NonBaTrace.__dataclass_fields__))


def select_nonba(c: CapacityMatrix, mixed: str = "exact") -> SelectionDecision:
    """Best mode for one slot; ties resolve hybrid > independent > mixed, then lowest index."""
    trace = select_nonba_trace(CapacityMatrix(c.fso[None], c.rf[None]), mixed=mixed)
    return trace.decision(0)

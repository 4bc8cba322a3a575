"""Brute-force reference computations used to cross-check the policies.

None of these call into the closed-form policy code; they enumerate or
integrate directly and are meant to be slow but obviously correct.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .channels import CapacityMatrix


def ook_mi_grid(snr_amplitude: float, step: float = 2e-4, span: float = 40.0) -> float:
    """I(X;Y) = h(Y) - h(N) for equiprobable X in {0, r}, N ~ N(0, 1).

    h(Y) by trapezoidal integration of the two-component mixture density on a
    uniform grid; h(N) in closed form.
    """
    r = float(snr_amplitude)
    y = np.arange(-span, span + r + step, step)
    dens = 0.5 * (np.exp(-0.5 * y * y) + np.exp(-0.5 * (y - r) ** 2)) / math.sqrt(2 * math.pi)
    integrand = np.where(dens > 0, -dens * np.log2(np.where(dens > 0, dens, 1.0)), 0.0)
    h_y = np.trapezoid(integrand, y) if hasattr(np, "trapezoid") else np.trapz(integrand, y)
    return float(h_y - 0.5 * math.log2(2 * math.pi * math.e))


def nonba_bruteforce(c: CapacityMatrix, step: float = 1e-4):
    """Best non-BA throughput over all M^4 role assignments and an RF-split grid.

    Each relay contributes min(incoming, outgoing) under the assignment.
    Returns ``(tau, (fso_rx, fso_tx, rf_rx, rf_tx), rho1)``; ``tau`` is a
    lower bound on the continuous optimum, short by at most
    ``(max C1rf + max C2rf) * step``.
    """
    m_count = c.relays
    roles = np.array(list(itertools.product(range(m_count), repeat=4)))
    rho = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    relay = np.arange(m_count)
    a1 = roles[:, 0, None] == relay
    a2 = roles[:, 1, None] == relay
    b1 = roles[:, 2, None] == relay
    b2 = roles[:, 3, None] == relay
    # per (assignment, relay): inflow = p + q rho, outflow = u - v rho
    p = (a1 * c.fso[0])[:, :, None]
    q = (b1 * c.rf[0])[:, :, None]
    v = (b2 * c.rf[1])[:, :, None]
    u = (a2 * c.fso[1])[:, :, None] + v
    best, arg = -np.inf, (0, 0)
    chunk = 8  # assignments per block, keeps temporaries cache-sized
    inflow = np.empty((chunk, m_count, rho.size))
    outflow = np.empty_like(inflow)
    for s in range(0, len(roles), chunk):
        n = min(chunk, len(roles) - s)
        fi, fo = inflow[:n], outflow[:n]
        np.multiply(q[s:s + n], rho, out=fi)
        fi += p[s:s + n]
        np.multiply(v[s:s + n], rho, out=fo)
        np.subtract(u[s:s + n], fo, out=fo)
        np.minimum(fi, fo, out=fi)
        tau = fi.sum(axis=1)
        k = int(np.argmax(tau))
        if tau.flat[k] > best:
            best = float(tau.flat[k])
            arg = divmod(k, rho.size)
            arg = (s + arg[0], arg[1])
    ai, ri = arg
    return best, tuple(int(x) for x in roles[ai]), float(rho[ri])


def nonba_grid_slack(c: CapacityMatrix, step: float = 1e-4) -> float:
    return float((c.rf[0].max() + c.rf[1].max()) * step)


def ba_argmax_bruteforce(fso_metric: np.ndarray, rf_metric: np.ndarray):
    """Enumerate every one-hot (FSO rx, FSO tx, single RF link) choice.

    Returns the lexicographically first maximizer of the summed metric as
    ``(fso_rx, fso_tx, rf_hop, rf_relay)``.
    """
    m_count = fso_metric.shape[1]
    best, arg = -np.inf, None
    # product order is lexicographic, so the first strict maximum is the
    # lowest-index winner in every role
    for i, j, l, n in itertools.product(range(m_count), range(m_count), range(2), range(m_count)):
        total = fso_metric[0, i] + fso_metric[1, j] + rf_metric[l, n]
        if total > best:
            best, arg = total, (i, j, l, n)
    return arg


def lambda_grid_search(arrival_fn, step: float = 0.01):
    """Scan lambda on a grid for a single relay.

    ``arrival_fn(lam)`` returns ``(mean arrival, mean departure)``; the best
    grid point maximizes their minimum. Returns ``(lam, throughput)``.
    """
    grid = np.round(np.arange(0.0, 1.0 + step / 2, step), 10)
    best_lam, best_tau = 0.0, -np.inf
    for lam in grid:
        a, d = arrival_fn(float(lam))
        tau = min(a, d)
        if tau > best_tau:
            best_lam, best_tau = float(lam), tau
    return best_lam, best_tau


def best_time_share(c_up: float, c_down: float, step: float = 1e-4):
    """Grid search of rho in [0, 1] maximizing min(rho c_up, (1 - rho) c_down)."""
    rho = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    vals = np.minimum(rho * c_up, (1.0 - rho) * c_down)
    k = int(np.argmax(vals))
    return float(rho[k]), float(vals[k])


def hybrid_grid(c1f: float, c1r: float, c2f: float, c2r: float, step: float = 1e-4):
    """Single-relay hybrid rate by scanning rho: max min(C1f + rho C1r, C2f + (1 - rho) C2r)."""
    rho = np.linspace(0.0, 1.0, int(round(1.0 / step)) + 1)
    vals = np.minimum(c1f + rho * c1r, c2f + (1.0 - rho) * c2r)
    k = int(np.argmax(vals))
    return float(rho[k]), float(vals[k])

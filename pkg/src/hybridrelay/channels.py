"""Link-level channel models for the parallel hybrid RF/FSO relay network.

Hop index ``l`` is stored on axis 0 (``0`` = source->relay, ``1`` =
relay->destination) and the relay index on axis 1, so every per-link array
has shape ``(2, M)``; traces of ``B`` slots have shape ``(B, 2, M)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import erf

LN2 = math.log(2.0)


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def dbm_to_watt(x_dbm):
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class FsoLinkParams:
    responsivity: float = 0.5
    aperture_radius: float = 0.1  # m
    divergence: float = 2e-3  # rad
    distance: float = 800.0  # m
    attenuation: float = 0.032  # dB/m
    theta: float = 2.23
    phi: float = 1.54
    noise_variance: float = 1e-14  # A^2
    tx_intensity: float = 20e-3  # W
    bandwidth: float = 1e9  # Hz

    def __post_init__(self):
        for name in ("responsivity", "aperture_radius", "divergence", "theta",
                     "phi", "noise_variance", "tx_intensity", "bandwidth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"FsoLinkParams.{name} must be > 0, got {getattr(self, name)!r}")
        if not self.distance >= 0:
            raise ValueError(f"FsoLinkParams.distance must be >= 0, got {self.distance!r}")
        if not self.attenuation >= 0:
            raise ValueError(f"FsoLinkParams.attenuation must be >= 0, got {self.attenuation!r}")


@dataclass(frozen=True)
class RfLinkParams:
    wavelength: float = 0.0857  # m (3.5 GHz)
    gain_tx_dbi: float = 10.0
    gain_rx_dbi: float = 10.0
    ref_distance: float = 80.0  # m
    distance: float = 800.0  # m
    pathloss_exp: float = 3.5
    rician_k: float = 4.0  # direct-to-scattered power ratio
    rician_power: float = 1.0  # E|g~|^2
    noise_psd_dbm_mhz: float = -114.0
    noise_figure_db: float = 5.0
    tx_power: float = 0.2  # W (23 dBm)
    bandwidth: float = 20e6  # Hz

    def __post_init__(self):
        for name in ("wavelength", "ref_distance", "distance", "rician_power",
                     "tx_power", "bandwidth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"RfLinkParams.{name} must be > 0, got {getattr(self, name)!r}")
        if not self.rician_k >= 0:
            raise ValueError(f"RfLinkParams.rician_k must be >= 0, got {self.rician_k!r}")
        if not self.pathloss_exp >= 2:
            raise ValueError(f"RfLinkParams.pathloss_exp must be >= 2, got {self.pathloss_exp!r}")

    @property
    def noise_variance(self) -> float:
        """Receiver noise power in W: N0 [dBm/MHz] + 10 log10(W [MHz]) + NF."""
        dbm = self.noise_psd_dbm_mhz + 10.0 * math.log10(self.bandwidth / 1e6) + self.noise_figure_db
        return float(dbm_to_watt(dbm))


def _grid(value, m):
    return [[value for _ in range(m)] for _ in range(2)]


@dataclass(frozen=True)
class NetworkConfig:
    """Static description of an M-relay network.

    ``fso[l][m]`` and ``rf[l][m]`` hold the parameters of hop ``l`` of relay
    ``m`` (both zero-based).
    """

    fso: tuple
    rf: tuple
    slots: int = 100_000
    seed: int = 0

    def __post_init__(self):
        fso = tuple(tuple(row) for row in self.fso)
        rf = tuple(tuple(row) for row in self.rf)
        object.__setattr__(self, "fso", fso)
        object.__setattr__(self, "rf", rf)
        if len(fso) != 2 or len(rf) != 2:
            raise ValueError("fso and rf must each have two hops")
        m = len(fso[0])
        if m < 1:
            raise ValueError("relay count M must be >= 1")
        if any(len(row) != m for row in fso + rf):
            raise ValueError("fso/rf parameter grids must both be 2 x M")
        if self.slots < 0:
            raise ValueError("slots must be >= 0")

    @property
    def relays(self) -> int:
        return len(self.fso[0])

    @classmethod
    def uniform(cls, relays: int, fso: FsoLinkParams | None = None, rf: RfLinkParams | None = None,
                d1: float | None = None, d2: float | None = None, slots: int = 100_000,
                seed: int = 0) -> "NetworkConfig":
        """All links share one parameter set; optional per-hop distances."""
        fso = fso or FsoLinkParams()
        rf = rf or RfLinkParams()
        fso_grid = _grid(fso, relays)
        rf_grid = _grid(rf, relays)
        for hop, d in ((0, d1), (1, d2)):
            if d is not None:
                fso_grid[hop] = [replace(p, distance=d) for p in fso_grid[hop]]
                rf_grid[hop] = [replace(p, distance=d) for p in rf_grid[hop]]
        return cls(fso=fso_grid, rf=rf_grid, slots=slots, seed=seed)

    def map_links(self, medium: str, links, **changes) -> "NetworkConfig":
        """Return a copy with ``changes`` applied to the given (hop, relay) links."""
        grid = [list(row) for row in getattr(self, medium)]
        for l, m in links:
            grid[l][m] = replace(grid[l][m], **changes)
        return replace(self, **{medium: grid})

    def fso_array(self, attr: str) -> np.ndarray:
        return np.array([[getattr(p, attr) for p in row] for row in self.fso], dtype=float)

    def rf_array(self, attr: str) -> np.ndarray:
        return np.array([[getattr(p, attr) for p in row] for row in self.rf], dtype=float)


@dataclass
class FadingRealization:
    """FSO gains ``h`` and RF magnitudes ``g_mag``; shape (2, M) or (B, 2, M)."""

    h: np.ndarray
    g_mag: np.ndarray


@dataclass
class CapacityMatrix:
    """Per-slot link capacities in bit/s; shape (2, M) or a (B, 2, M) trace.

    Indexing a trace returns the slot (or slice) as another CapacityMatrix.
    """

    fso: np.ndarray
    rf: np.ndarray

    def __post_init__(self):
        self.fso = np.asarray(self.fso, dtype=float)
        self.rf = np.asarray(self.rf, dtype=float)
        if self.fso.shape != self.rf.shape or self.fso.shape[-2] != 2:
            raise ValueError(f"bad capacity shapes {self.fso.shape} / {self.rf.shape}")

    @property
    def relays(self) -> int:
        return self.fso.shape[-1]

    def __len__(self):
        if self.fso.ndim == 2:
            raise TypeError("single-slot CapacityMatrix has no length")
        return self.fso.shape[0]

    def __getitem__(self, idx) -> "CapacityMatrix":
        return CapacityMatrix(self.fso[idx], self.rf[idx])

    def scaled(self, s: float) -> "CapacityMatrix":
        return CapacityMatrix(self.fso * s, self.rf * s)

    @classmethod
    def from_lists(cls, fso, rf) -> "CapacityMatrix":
        return cls(np.array(fso, dtype=float), np.array(rf, dtype=float))


def fso_avg_gain(p: FsoLinkParams) -> float:
    """Geometric spread times weather attenuation, scaled by responsivity."""
    if p.distance == 0:
        geo = 1.0
    else:
        geo = float(erf(math.sqrt(math.pi) * p.aperture_radius
                        / (math.sqrt(2.0) * p.divergence * p.distance))) ** 2
    loss_db = p.attenuation * p.distance
    if math.isnan(loss_db):
        raise ValueError("attenuation * distance is NaN")
    return p.responsivity * geo * 10.0 ** (-loss_db / 10.0)


def rf_avg_gain(p: RfLinkParams) -> float:
    if p.distance == 0:
        raise ValueError("RF distance must be non-zero")
    g = math.sqrt(float(db_to_linear(p.gain_tx_dbi) * db_to_linear(p.gain_rx_dbi)))
    ref = (p.wavelength * g / (4.0 * math.pi * p.ref_distance)) ** 2
    return ref * (p.ref_distance / p.distance) ** p.pathloss_exp


def sample_unit_fading(cfg: NetworkConfig, rng: np.random.Generator, slots: int | None = None):
    """Draw normalized fading (h~, |g~|).

    h~ is a product of two unit-mean Gamma variates (shapes theta, phi);
    |g~| is Rician with K-factor ``rician_k`` and E|g~|^2 = ``rician_power``.
    Returns arrays of shape (2, M) when ``slots`` is None, else (slots, 2, M).
    """
    shape = (2, cfg.relays) if slots is None else (slots, 2, cfg.relays)
    theta = cfg.fso_array("theta")
    phi = cfg.fso_array("phi")
    h = rng.gamma(theta, 1.0 / theta, size=shape) * rng.gamma(phi, 1.0 / phi, size=shape)

    k = cfg.rf_array("rician_k")
    power = cfg.rf_array("rician_power")
    los = np.sqrt(k / (k + 1.0) * power)
    spread = np.sqrt(power / (2.0 * (k + 1.0)))
    re = los + spread * rng.standard_normal(shape)
    im = spread * rng.standard_normal(shape)
    return h, np.hypot(re, im)


def average_gains(cfg: NetworkConfig) -> tuple[np.ndarray, np.ndarray]:
    h_bar = np.array([[fso_avg_gain(p) for p in row] for row in cfg.fso])
    g_bar = np.array([[rf_avg_gain(p) for p in row] for row in cfg.rf])
    return h_bar, g_bar


def apply_gains(cfg: NetworkConfig, h_unit, g_unit) -> FadingRealization:
    h_bar, g_bar = average_gains(cfg)
    return FadingRealization(h=h_bar * h_unit, g_mag=np.sqrt(g_bar) * g_unit)


def sample_fading(cfg: NetworkConfig, rng: np.random.Generator,
                  slots: int | None = None) -> FadingRealization:
    return apply_gains(cfg, *sample_unit_fading(cfg, rng, slots))


@lru_cache(maxsize=8)
def _hermite(order: int):
    t, w = np.polynomial.hermite.hermgauss(order)
    return t, w / (math.sqrt(math.pi) * LN2)


def ook_mutual_information(snr_amplitude, order: int = 64):
    """Mutual information (bit/use) of equiprobable OOK in Gaussian noise.

    ``snr_amplitude`` is the on-level divided by the noise standard deviation.
    Computed as ``1 - E_t[log2(1 + exp(-r^2/2 + sqrt(2) r t))]`` with t
    Gauss-Hermite distributed; the symmetric two-exponential form collapses
    to this single term.
    """
    r = np.asarray(snr_amplitude, dtype=float)
    t, w = _hermite(order)
    flat = r.reshape(-1)
    mi = np.empty_like(flat)
    step = 1 << 15
    for s in range(0, flat.size, step):
        x = flat[s:s + step, None]
        mi[s:s + step] = 1.0 - np.logaddexp(0.0, -0.5 * x * x + math.sqrt(2.0) * x * t) @ w
    return np.clip(mi.reshape(r.shape), 0.0, 1.0)


_TABLE_LO, _TABLE_HI = 1e-3, 40.0


@lru_cache(maxsize=8)
def _mi_table(order: int) -> CubicSpline:
    u = np.linspace(math.log(_TABLE_LO), math.log(_TABLE_HI), 6001)
    return CubicSpline(u, ook_mutual_information(np.exp(u), order))


def ook_mutual_information_table(snr_amplitude, order: int = 64):
    """Spline of :func:`ook_mutual_information` in log r; about 1e-9 relative error.

    Points below the table range fall back to quadrature; above it the
    information is 1 to double precision.
    """
    r = np.asarray(snr_amplitude, dtype=float)
    out = np.ones_like(r)
    low = r < _TABLE_LO
    mid = ~low & (r < _TABLE_HI)
    if np.any(low):
        out[low] = ook_mutual_information(r[low], order)
    if np.any(mid):
        out[mid] = _mi_table(order)(np.log(r[mid]))
    return np.clip(out, 0.0, 1.0)


def fso_capacity(p_signal, sigma, bandwidth, order: int = 64):
    """OOK capacity in bit/s for peak photocurrent ``p_signal`` and noise std ``sigma``."""
    ratio = np.asarray(p_signal, dtype=float) / np.asarray(sigma, dtype=float)
    out = np.asarray(bandwidth, dtype=float) * ook_mutual_information(ratio, order)
    return float(out) if out.ndim == 0 else out


def rf_capacity(q, noise_variance, bandwidth):
    """Gaussian-input AWGN capacity ``W log2(1 + q^2 / delta^2)`` in bit/s."""
    q = np.asarray(q, dtype=float)
    out = np.asarray(bandwidth, dtype=float) * np.log1p(q * q / noise_variance) / LN2
    return float(out) if out.ndim == 0 else out


def capacities(cfg: NetworkConfig, fading: FadingRealization, order: int = 64,
               exact: bool = False) -> CapacityMatrix:
    """Elementwise capacities for one slot (2, M) or a trace (B, 2, M).

    FSO values come from the spline table unless ``exact`` is set.
    """
    sigma = np.sqrt(cfg.fso_array("noise_variance"))
    p_fso = cfg.fso_array("tx_intensity")
    w_fso = cfg.fso_array("bandwidth")
    p_rf = cfg.rf_array("tx_power")
    w_rf = cfg.rf_array("bandwidth")
    delta2 = np.array([[p.noise_variance for p in row] for row in cfg.rf])

    ratio = p_fso * np.asarray(fading.h, dtype=float) / sigma
    mi = ook_mutual_information if exact else ook_mutual_information_table
    c_fso = w_fso * mi(ratio, order)
    q = np.sqrt(p_rf) * np.asarray(fading.g_mag, dtype=float)
    c_rf = w_rf * np.log1p(q * q / delta2) / LN2
    return CapacityMatrix(c_fso, c_rf)


def capacity_trace(cfg: NetworkConfig, rng: np.random.Generator, slots: int,
                   order: int = 64) -> CapacityMatrix:
    """Sample ``slots`` i.i.d. fading states and return their capacities."""
    return capacities(cfg, sample_fading(cfg, rng, slots), order=order)


@dataclass
class UnitFadingTrace:
    """Normalized fading kept separately so one stream serves many configs.

    Reusing the same unit trace across sweep points (attenuation, power,
    buffer size) gives common random numbers along the sweep axis as well.
    """

    h: np.ndarray
    g: np.ndarray
    meta: dict = field(default_factory=dict)

    @classmethod
    def draw(cls, cfg: NetworkConfig, rng: np.random.Generator, slots: int) -> "UnitFadingTrace":
        h, g = sample_unit_fading(cfg, rng, slots)
        return cls(h, g)

    def capacities(self, cfg: NetworkConfig, order: int = 64) -> CapacityMatrix:
        return capacities(cfg, apply_gains(cfg, self.h, self.g), order=order)

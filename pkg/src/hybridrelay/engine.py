"""Monte-Carlo sweeps over one scenario axis with common random numbers.

For each seed one normalized fading trace is drawn per relay count and
reused at every axis point and by every policy, so all comparisons along a
sweep are paired. Lagrange weights are trained once per axis point from an
independent stream.
"""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .ba import BaWeights, ba_throughput, train_lambda
from .benchmarks import ba_best_fso, ba_independent, nonba_independent, nonba_maxmin_fso
from .channels import (FsoLinkParams, NetworkConfig, RfLinkParams, UnitFadingTrace, dbm_to_watt)
from .delay import run_delay_ba
from .nonba import MODE_ORDER, Mode, select_nonba_trace

AXES = ("attenuation", "rf_power_dbm", "relays", "qmax")
POLICIES = ("nonba", "ba", "delay_ba", "nonba_maxmin_fso", "nonba_independent",
            "ba_best_fso", "ba_independent")
BA_POLICIES = ("ba", "delay_ba")


class ScenarioError(ValueError):
    """Invalid scenario; the message starts with the offending field path."""


@dataclass
class Scenario:
    name: str = "scenario"
    relays: int = 3
    d1: float = 800.0
    d2: float = 800.0
    fso: dict = field(default_factory=dict)  # FsoLinkParams overrides, all links
    rf: dict = field(default_factory=dict)  # RfLinkParams overrides, all links
    axis: str = "attenuation"
    values: list = field(default_factory=lambda: [0.032])
    links: list | None = None  # zero-based (hop, relay) pairs for the attenuation axis
    policies: list = field(default_factory=lambda: ["nonba", "ba"])
    slots: int = 10_000
    seeds: list = field(default_factory=lambda: [0])
    qmax: float = 1e9  # bits, for delay_ba when the axis is not qmax
    train_iterations: int = 300
    train_samples: int = 2000
    train_seed: int = 12345
    lam: list | None = None  # fixed weights instead of training

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def err(path, msg):
            raise ScenarioError(f"{path}: {msg}")

        if not isinstance(self.relays, int) or self.relays < 1:
            err("network.relays", f"must be an integer >= 1, got {self.relays!r}")
        if self.axis not in AXES:
            err("sweep.axis", f"must be one of {AXES}, got {self.axis!r}")
        if not isinstance(self.values, (list, tuple)) or not self.values:
            err("sweep.values", "must be a non-empty list")
        for i, v in enumerate(self.values):
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                err(f"sweep.values[{i}]", f"must be a finite number, got {v!r}")
            if self.axis == "relays" and (int(v) != v or v < 1):
                err(f"sweep.values[{i}]", f"relay count must be an integer >= 1, got {v!r}")
            if self.axis in ("attenuation", "qmax") and v < 0:
                err(f"sweep.values[{i}]", f"must be >= 0, got {v!r}")
        for i, p in enumerate(self.policies):
            if p not in POLICIES:
                err(f"policies[{i}]", f"unknown policy {p!r}; choose from {POLICIES}")
        if self.slots < 0:
            err("run.slots", "must be >= 0")
        if not self.seeds:
            err("run.seeds", "must list at least one seed")
        for name, cls in (("fso", FsoLinkParams), ("rf", RfLinkParams)):
            for key in getattr(self, name):
                if key not in cls.__dataclass_fields__:
                    err(f"links.{name}.{key}", "unknown link parameter")
        if self.links is not None:
            m_max = max([self.relays] + ([int(v) for v in self.values] if self.axis == "relays" else []))
            for i, pair in enumerate(self.links):
                if len(pair) != 2 or pair[0] not in (0, 1) or not 0 <= pair[1] < m_max:
                    err(f"sweep.links[{i}]", f"bad (hop, relay) pair {pair!r}")
        if self.lam is not None and any(not 0 <= x <= 1 for x in self.lam):
            err("run.lambda", "entries must lie in [0, 1]")

    # -- file format ----------------------------------------------------------
    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = d or {}
        known = {"name", "network", "links", "sweep", "policies", "run", "variants"}
        for key in d:
            if key not in known:
                raise ScenarioError(f"{key}: unknown top-level section")
        net = d.get("network", {}) or {}
        links = d.get("links", {}) or {}
        sweep = d.get("sweep", {}) or {}
        run = d.get("run", {}) or {}
        kw = {"name": d.get("name", "scenario")}
        for src, key, dst in (
                (net, "relays", "relays"), (net, "d1", "d1"), (net, "d2", "d2"),
                (links, "fso", "fso"), (links, "rf", "rf"),
                (sweep, "axis", "axis"), (sweep, "values", "values"),
                (run, "slots", "slots"), (run, "seeds", "seeds"), (run, "qmax", "qmax"),
                (run, "train_iterations", "train_iterations"),
                (run, "train_samples", "train_samples"), (run, "train_seed", "train_seed"),
                (run, "lambda", "lam")):
            if key in src:
                kw[dst] = src[key]
        if "links" in sweep and sweep["links"] is not None:
            # files use one-based (hop, relay)
            kw["links"] = [[int(h) - 1, int(m) - 1] for h, m in sweep["links"]]
        if "policies" in d:
            kw["policies"] = list(d["policies"])
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ScenarioError(f"scenario: {exc}") from None

    @classmethod
    def load_all(cls, path) -> list["Scenario"]:
        """Scenarios from a YAML file; a ``variants`` list yields one per entry."""
        path = Path(path)
        if not path.is_file():
            raise FileNotFoundError(f"scenario file not found: {path}")
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ScenarioError(f"{path.name}: YAML parse error: {exc}") from None
        if not isinstance(raw, dict):
            raise ScenarioError(f"{path.name}: top level must be a mapping")
        variants = raw.pop("variants", None)
        if not variants:
            return [cls.from_dict(raw)]
        out = []
        for i, v in enumerate(variants):
            merged = _deep_merge(copy.deepcopy(raw), v)
            try:
                out.append(cls.from_dict(merged))
            except ScenarioError as exc:
                raise ScenarioError(f"variants[{i}].{exc}") from None
        return out

    # -- configs -------------------------------------------------------------
    def config(self, value) -> NetworkConfig:
        relays = int(value) if self.axis == "relays" else self.relays
        fso = FsoLinkParams(**self.fso)
        rf = RfLinkParams(**self.rf)
        if self.axis == "rf_power_dbm":
            rf = replace(rf, tx_power=float(dbm_to_watt(value)))
        cfg = NetworkConfig.uniform(relays, fso, rf, d1=self.d1, d2=self.d2, slots=self.slots)
        if self.axis == "attenuation":
            links = self.links
            if links is None:
                links = [(h, m) for h in (0, 1) for m in range(relays)]
            links = [(h, m) for h, m in links if m < relays]
            cfg = cfg.map_links("fso", links, attenuation=float(value))
        return cfg

    def qmax_at(self, value) -> float:
        return float(value) if self.axis == "qmax" else float(self.qmax)


def _deep_merge(base: dict, over: dict) -> dict:
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(base.get(k), dict):
            _deep_merge(base[k], v)
        else:
            base[k] = v
    return base


RUN_COLUMNS = ("scenario", "policy", "axis", "value", "seed", "slots", "throughput_bps",
               "delay_slots", "frac_hybrid", "frac_independent", "frac_mixed", "lambda",
               "arrival_bps", "departure_bps")
SUMMARY_COLUMNS = ("scenario", "policy", "axis", "value", "seeds", "throughput_bps",
                   "stderr_bps", "delay_slots", "frac_hybrid", "frac_independent", "frac_mixed")


@dataclass
class RunMetrics:
    runs: list = field(default_factory=list)  # dicts keyed by RUN_COLUMNS
    summary: list = field(default_factory=list)  # dicts keyed by SUMMARY_COLUMNS
    weights: dict = field(default_factory=dict)  # (scenario, value) -> BaWeights

    def extend(self, other: "RunMetrics") -> None:
        self.runs.extend(other.runs)
        self.summary.extend(other.summary)
        self.weights.update(other.weights)

    def mean(self, policy: str, value=None, scenario: str | None = None) -> float:
        rows = [r for r in self.summary if r["policy"] == policy
                and (value is None or r["value"] == value)
                and (scenario is None or r["scenario"] == scenario)]
        if len(rows) != 1:
            raise KeyError(f"{len(rows)} summary rows match policy={policy!r} value={value!r}")
        return rows[0]["throughput_bps"]

    def per_seed(self, policy: str, value=None, scenario: str | None = None) -> np.ndarray:
        return np.array([r["throughput_bps"] for r in self.runs if r["policy"] == policy
                         and (value is None or r["value"] == value)
                         and (scenario is None or r["scenario"] == scenario)])

    def write_csv(self, outdir) -> tuple[Path, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        paths = (outdir / "runs.csv", outdir / "summary.csv")
        for path, cols, rows in ((paths[0], RUN_COLUMNS, self.runs),
                                 (paths[1], SUMMARY_COLUMNS, self.summary)):
            with open(path, "w", newline="") as fh:
                wr = csv.writer(fh)
                wr.writerow(cols)
                for r in rows:
                    wr.writerow([_fmt(r[c]) for c in cols])
        return paths

    def table(self) -> str:
        lines = [f"{'scenario':<16} {'policy':<18} {'axis':<13} {'value':>12} {'Mbit/s':>10} "
                 f"{'stderr':>8} {'delay':>8}"]
        for r in self.summary:
            lines.append(f"{r['scenario']:<16} {r['policy']:<18} {r['axis']:<13} {r['value']:>12.6g} "
                         f"{r['throughput_bps'] / 1e6:>10.3f} {r['stderr_bps'] / 1e6:>8.3f} "
                         f"{r['delay_slots']:>8.3g}")
        return "\n".join(lines)


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (list, tuple, np.ndarray)):
        return ";".join(repr(float(v)) for v in x)
    return str(x)


def mode_histogram(modes) -> tuple[float, float, float]:
    """Fraction of slots per mode, in ``MODE_ORDER``.

    Accepts mode indices or :class:`Mode` values. Raises on an empty trace.
    """
    modes = list(modes) if not isinstance(modes, np.ndarray) else modes
    if len(modes) == 0:
        raise ValueError("mode histogram of an empty trace is undefined")
    idx = np.array([MODE_ORDER.index(Mode(m)) if isinstance(m, (str, Mode)) else int(m) for m in modes])
    counts = np.bincount(idx, minlength=3)[:3]
    return tuple(float(x) for x in counts / counts.sum())


def _unit_trace(cfg: NetworkConfig, seed: int, slots: int) -> UnitFadingTrace:
    return UnitFadingTrace.draw(cfg, np.random.default_rng([seed, cfg.relays]), slots)


def _stderr(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else math.nan


def run_scenario(s: Scenario, weights: BaWeights | None = None) -> RunMetrics:
    """Evaluate every policy at every axis point and seed on shared fading."""
    out = RunMetrics()
    if s.slots == 0:
        return out
    traces: dict = {}
    trained: dict = {}  # axes that leave the network unchanged reuse weights
    need_w = any(p in BA_POLICIES for p in s.policies)
    for vi, value in enumerate(s.values):
        cfg = s.config(value)
        w = None
        if need_w:
            if weights is not None:
                w = weights
            elif s.lam is not None:
                w = BaWeights(np.array(s.lam, dtype=float))
            elif cfg in trained:
                w = trained[cfg]
            else:
                w = train_lambda(cfg, iterations=s.train_iterations, samples=s.train_samples,
                                 seed=int(np.random.SeedSequence([s.train_seed, vi]).generate_state(1)[0]))
                trained[cfg] = w
            if w.relays != cfg.relays:
                raise ScenarioError(f"run.lambda: {w.relays} weights for {cfg.relays} relays")
            out.weights[(s.name, value)] = w
        per_policy: dict = {p: [] for p in s.policies}
        for seed in s.seeds:
            key = (seed, cfg.relays)
            if key not in traces:
                traces[key] = _unit_trace(cfg, seed, s.slots)
            c = traces[key].capacities(cfg)
            for p in s.policies:
                row = _evaluate(p, c, w, s.qmax_at(value))
                row.update(scenario=s.name, policy=p, axis=s.axis, value=value, seed=seed,
                           slots=s.slots, **{"lambda": w.lam if (w is not None and p in BA_POLICIES) else []})
                out.runs.append(row)
                per_policy[p].append(row)
        for p, rows in per_policy.items():
            tau = np.array([r["throughput_bps"] for r in rows])
            delays = np.array([r["delay_slots"] for r in rows])
            fr = np.array([[r["frac_hybrid"], r["frac_independent"], r["frac_mixed"]] for r in rows])
            out.summary.append({
                "scenario": s.name, "policy": p, "axis": s.axis, "value": value,
                "seeds": len(rows), "throughput_bps": float(tau.mean()), "stderr_bps": _stderr(tau),
                "delay_slots": float(delays.mean()),
                "frac_hybrid": float(fr[:, 0].mean()), "frac_independent": float(fr[:, 1].mean()),
                "frac_mixed": float(fr[:, 2].mean())})
    return out


def _evaluate(policy: str, c, w: BaWeights | None, qmax: float) -> dict:
    nan = math.nan
    row = {"throughput_bps": nan, "delay_slots": nan, "frac_hybrid": nan,
           "frac_independent": nan, "frac_mixed": nan, "arrival_bps": [], "departure_bps": []}
    if policy == "nonba":
        t = select_nonba_trace(c)
        row["throughput_bps"] = float(t.tau.mean())
        row["frac_hybrid"], row["frac_independent"], row["frac_mixed"] = mode_histogram(t.mode)
    elif policy == "ba":
        r = ba_throughput(c, w)
        row.update(throughput_bps=r.tau, arrival_bps=r.arrival, departure_bps=r.departure)
    elif policy == "delay_ba":
        r = run_delay_ba(c, w, qmax)
        row.update(throughput_bps=r.throughput, delay_slots=r.delay,
                   arrival_bps=r.arrival, departure_bps=r.departure)
    elif policy == "nonba_maxmin_fso":
        row["throughput_bps"] = float(np.mean(nonba_maxmin_fso(c)))
    elif policy == "nonba_independent":
        row["throughput_bps"] = float(np.mean(nonba_independent(c)))
    elif policy == "ba_best_fso":
        row["throughput_bps"] = ba_best_fso(c).throughput
    elif policy == "ba_independent":
        row["throughput_bps"] = ba_independent(c).throughput
    else:
        raise ScenarioError(f"policies: unknown policy {policy!r}")
    return row


def run_scenarios(scenarios, weights: BaWeights | None = None) -> RunMetrics:
    out = RunMetrics()
    for s in scenarios:
        out.extend(run_scenario(s, weights))
    return out


def scenario_dict(s: Scenario) -> dict:
    return asdict(s)

"""Command-line entry point: ``hybridrelay {run,train-lambda,verify,figure}``."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

from .ba import BaWeights, train_lambda
from .engine import POLICIES, Scenario, ScenarioError, run_scenarios
from .verify import SUITES, run_suites

OUT_ENV = "HYBRIDRELAY_OUT"
FIGURES = ("fig3", "fig4", "fig5", "fig6", "fig7", "fig8")


def recipe_path(figure: str) -> Path:
    if figure not in FIGURES:
        raise ScenarioError(f"--figure: unknown figure {figure!r}; choose from {FIGURES}")
    return Path(str(resources.files("hybridrelay") / "recipes" / f"{figure}.yaml"))


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "hybridrelay-out")


def _apply_overrides(scenarios: list[Scenario], args) -> list[Scenario]:
    out = []
    for s in scenarios:
        kw = {}
        if getattr(args, "seed", None) is not None:
            kw["seeds"] = [args.seed]
        if getattr(args, "slots", None) is not None:
            kw["slots"] = args.slots
        if getattr(args, "policies", None):
            kw["policies"] = [p.strip() for p in args.policies.split(",") if p.strip()]
        if getattr(args, "qmax", None) is not None:
            kw["qmax"] = args.qmax
        if getattr(args, "iterations", None) is not None:
            kw["train_iterations"] = args.iterations
        out.append(replace(s, **kw) if kw else s)
    return out


def _load(args) -> list[Scenario]:
    if getattr(args, "figure", None):
        path = recipe_path(args.figure)
    elif args.scenario:
        path = Path(args.scenario)
    else:
        raise ScenarioError("--scenario: a scenario file (or --figure) is required")
    return _apply_overrides(Scenario.load_all(path), args)


def _run(args) -> int:
    scenarios = _load(args)
    weights = BaWeights.load(args.weights) if getattr(args, "weights", None) else None
    metrics = run_scenarios(scenarios, weights)
    runs, summary = metrics.write_csv(_out_dir(args))
    print(metrics.table())
    print(f"wrote {runs} and {summary}")
    return 0


def cmd_train(args) -> int:
    s = _load(args)[0]
    cfg = s.config(s.values[0])
    seed = args.seed if args.seed is not None else s.train_seed
    w = train_lambda(cfg, iterations=s.train_iterations, samples=args.samples or s.train_samples, seed=seed)
    out = Path(args.output) if args.output else _out_dir(args) / "lambda.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    w.save(out)
    print(w.to_text(), end="")
    print(f"wrote {out}")
    return 0


def cmd_verify(args) -> int:
    names = args.suite or list(SUITES)
    weights = None
    if args.weights:
        try:
            weights = BaWeights.load(args.weights)
        except (OSError, ValueError) as exc:
            print(f"[FAIL] lambda-residual: cannot read weights: {exc}")
            return 1
    results = run_suites(names, slots=args.slots, weights=weights)
    for r in results:
        print(r.line())
    return 0 if all(r.ok for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridrelay", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, figure: bool = False):
        if figure:
            sp.add_argument("--figure", required=True, choices=FIGURES)
        else:
            sp.add_argument("--scenario", help="YAML scenario file")
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./hybridrelay-out)")
        sp.add_argument("--seed", type=int, help="run a single seed instead of the file's list")
        sp.add_argument("--slots", type=int, help="override the slot count")
        sp.add_argument("--policies", help=f"comma list from {','.join(POLICIES)}")
        sp.add_argument("--qmax", type=float, help="buffer size in bits for delay_ba")
        sp.add_argument("--iterations", type=int, help="lambda training iterations")
        sp.add_argument("--lambda", dest="weights", help="weights file to use instead of training")

    common(sub.add_parser("run", help="run a scenario file"))
    common(sub.add_parser("figure", help="run a bundled figure recipe"), figure=True)

    tp = sub.add_parser("train-lambda", help="train weights for a scenario's first axis point")
    tp.add_argument("--scenario", required=True)
    tp.add_argument("--out", help="output directory for lambda.txt")
    tp.add_argument("--output", help="explicit weights file path")
    tp.add_argument("--seed", type=int)
    tp.add_argument("--iterations", type=int)
    tp.add_argument("--samples", type=int)

    vp = sub.add_parser("verify", help="run the reduced-scale oracle suites")
    vp.add_argument("--suite", action="append", choices=list(SUITES))
    vp.add_argument("--slots", type=int, help="slot count for the simulation suites")
    vp.add_argument("--lambda", dest="weights", help="weights file checked by lambda-residual")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("run", "figure"):
            return _run(args)
        if args.command == "train-lambda":
            return cmd_train(args)
        return cmd_verify(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

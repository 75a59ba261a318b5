"""Config-driven experiment runner.

Verbs: ``run`` (execute a config and write report/CSV artifacts), ``verify``
(run and score against the declared oracle, one PASS/FAIL row per check),
``sweep`` (repeat runs along one numeric config axis), and
``list-benchmarks``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 runtime error.  Errors print one structured JSON line on stderr.

Output files (in ``--out-dir``):

- ``report.json``  — schema-versioned full report; rerunning the echoed
  config and seed reproduces it byte for byte apart from wall-clock fields.
- ``samples.csv``  — one row per final particle: seed, particle, reward,
  flattened state.
- ``diagnostics.csv`` — one row per reweighted stage: seed, stage, ess,
  mean_reward, resampled.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .config import (
    ExperimentConfig,
    apply_overrides,
    benchmark_path,
    build_experts,
    build_graph,
    build_oracle,
    build_rewards,
    build_schedule,
    evaluate_checks,
    list_benchmarks,
    load_config,
    validate_config,
)
from .errors import (
    ConfigError,
    DegeneratePopulationError,
    IncompatibleExpertsError,
    NumericalError,
    SingularScheduleError,
)
from .smc import run_smc

REPORT_SCHEMA_VERSION = 1

_RUNTIME_ERRORS = (
    NumericalError,
    IncompatibleExpertsError,
    DegeneratePopulationError,
    SingularScheduleError,
)


def execute_run(cfg: ExperimentConfig, seed: int) -> dict:
    """One seeded sampler run, returned as a JSON-serializable record."""
    sched = build_schedule(cfg)
    flow, ar = build_experts(cfg, sched)
    rewards = build_rewards(cfg)
    graph = build_graph(cfg, flow) if flow else None
    experts = flow if flow else ar
    res = run_smc(
        experts,
        rewards,
        sched,
        num_particles=cfg.smc["num_particles"],
        seed=seed,
        graph=graph,
        resample_policy=cfg.smc["resample_policy"],
        ess_threshold=cfg.smc["ess_threshold"],
        checkpoint_steps=tuple(cfg.smc["checkpoint_steps"]),
        scheme=cfg.smc["scheme"],
        weight_mode=cfg.smc["weight_mode"],
        sweep_order=cfg.smc["sweep_order"],
        map_mode=cfg.smc["map_mode"],
    )
    return {
        "seed": seed,
        "selected_index": res.selected_index,
        "selected_reward": res.selected_reward,
        "selected_state": np.asarray(res.final_states[res.selected_index]).tolist(),
        "final_states": np.asarray(res.final_states).tolist(),
        "final_rewards": np.asarray(res.final_rewards).tolist(),
        "ess_history": [[int(t), float(e)] for t, e in res.ess_history],
        "reward_history": [[int(t), float(m), float(mx)] for t, m, mx in res.reward_history],
        "resample_events": [int(t) for t in res.resample_events],
        "num_particles": res.num_particles,
        "num_steps": res.num_steps,
        "wall_clock_s": res.wallclock,
    }


def _worker(payload: tuple[dict, int]) -> dict:
    raw, seed = payload
    return execute_run(validate_config(raw), seed)


def run_all(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    if jobs > 1 and len(cfg.seeds) > 1:
        raw = cfg.to_dict()
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_worker, [(raw, s) for s in cfg.seeds]))
    return [execute_run(cfg, s) for s in cfg.seeds]


def write_report(cfg: ExperimentConfig, runs: list[dict], out_dir: Path) -> Path:
    report = {
        "schema_version": REPORT_SCHEMA_VERSION,
        "package_version": __version__,
        "config": cfg.to_dict(),
        "runs": runs,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "report.json"
    path.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return path


def write_csvs(runs: list[dict], out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "samples.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        dim = len(runs[0]["final_states"][0]) if runs and runs[0]["final_states"] else 0
        writer.writerow(["seed", "particle", "reward"] + [f"x{i}" for i in range(dim)])
        for run in runs:
            for i, (state, reward) in enumerate(zip(run["final_states"], run["final_rewards"])):
                writer.writerow([run["seed"], i, repr(float(reward))] + [repr(float(v)) for v in state])
    with open(out_dir / "diagnostics.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "stage", "ess", "mean_reward", "resampled"])
        for run in runs:
            events = set(run["resample_events"])
            seen: dict[int, float] = {}
            for t, e in run["ess_history"]:
                seen[t] = e
            rewards = {t: m for t, m, _ in run["reward_history"]}
            for t in sorted(seen, reverse=True):
                writer.writerow(
                    [run["seed"], t, repr(seen[t]), repr(rewards.get(t, 0.0)), int(t in events)]
                )


def _load_with_overrides(args) -> ExperimentConfig:
    path = Path(args.config)
    if not path.exists() and not path.suffix:
        path = benchmark_path(args.config)
    cfg = load_config(path)
    overrides = list(args.override or [])
    if overrides:
        cfg = apply_overrides(cfg, overrides)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    return cfg


def cmd_run(args) -> int:
    cfg = _load_with_overrides(args)
    runs = run_all(cfg, jobs=args.jobs)
    out_dir = Path(args.out_dir or cfg.outputs["out_dir"])
    path = write_report(cfg, runs, out_dir)
    write_csvs(runs, out_dir)
    print(f"wrote {path}")
    return 0


def cmd_verify(args) -> int:
    cfg = _load_with_overrides(args)
    if cfg.oracle is None:
        raise ConfigError("verify requires a config with an [oracle] section")
    sched = build_schedule(cfg)
    exact = build_oracle(cfg, sched)
    failures = 0
    try:
        runs = run_all(cfg, jobs=args.jobs)
    except _RUNTIME_ERRORS as exc:
        print(f"FAIL  run           error: {type(exc).__name__}: {exc}")
        return 1
    pooled = np.concatenate([np.asarray(r["final_states"]) for r in runs], axis=0)
    if pooled.ndim == 1:
        pooled = pooled[:, None]
    results = [SimpleNamespace(**r) for r in runs]
    rows = evaluate_checks(cfg, exact, pooled, results)
    for row in rows:
        status = "PASS" if row.passed else "FAIL"
        print(f"{status}  {row.stat:<18} measured {row.measured:.6f}  threshold {row.threshold:.6f}  ({row.detail})")
        failures += 0 if row.passed else 1
    print(f"{len(rows) - failures}/{len(rows)} checks passed")
    return 0 if failures == 0 else 1


def cmd_sweep(args) -> int:
    cfg = _load_with_overrides(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep requires a non-empty --values list")
    work: list[tuple[str, dict, int]] = []
    for value in values:
        if args.axis == "smc.resample":
            if value not in ("on", "off"):
                raise ConfigError("axis smc.resample takes values on/off")
            ov = [] if value == "on" else ["smc.resample_policy=\"never\""]
            swept = apply_overrides(cfg, ov)
        else:
            swept = apply_overrides(cfg, [f"{args.axis}={value}"])
        for seed in swept.seeds:
            work.append((value, swept.to_dict(), seed))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_worker, [(raw, seed) for _, raw, seed in work]))
    else:
        outcomes = [execute_run(validate_config(raw), seed) for _, raw, seed in work]
    out_dir = Path(args.out_dir or cfg.outputs["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value", "seed", "selected_reward", "ess_min", "ess_mean", "wall_clock_s"])
        for (value, _, seed), run in zip(work, outcomes):
            ess = [e for _, e in run["ess_history"]]
            writer.writerow(
                [
                    args.axis,
                    value,
                    seed,
                    repr(run["selected_reward"]),
                    repr(min(ess) if ess else float(run["num_particles"])),
                    repr(float(np.mean(ess)) if ess else float(run["num_particles"])),
                    repr(run["wall_clock_s"]),
                ]
            )
    print(f"wrote {path}")
    return 0


def cmd_list_benchmarks(_args) -> int:
    for name, description in list_benchmarks():
        print(f"{name:<24} {description}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prodex", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"prodex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="config path or shipped benchmark name")
        p.add_argument("--seed", type=int, default=None, help="replace the config's seed list")
        p.add_argument("--override", action="append", metavar="K=V", help="config override, repeatable")
        p.add_argument("--out-dir", default=None)
        p.add_argument("--jobs", type=int, default=1)

    p_run = sub.add_parser("run", help="execute a config and write report/CSVs")
    common(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_ver = sub.add_parser("verify", help="run and score against the declared oracle")
    common(p_ver)
    p_ver.set_defaults(fn=cmd_verify)

    p_sw = sub.add_parser("sweep", help="repeat runs along one config axis")
    common(p_sw)
    p_sw.add_argument("--axis", required=True, help="dotted config field, e.g. smc.L")
    p_sw.add_argument("--values", required=True, help="comma-separated values")
    p_sw.set_defaults(fn=cmd_sweep)

    p_ls = sub.add_parser("list-benchmarks", help="list shipped benchmark configs")
    p_ls.set_defaults(fn=cmd_list_benchmarks)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return 2
    except _RUNTIME_ERRORS as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())

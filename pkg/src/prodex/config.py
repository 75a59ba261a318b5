"""Experiment configuration: TOML schema, strict validation, overrides, and
construction of experts, schedules, and verification oracles.

Configs are plain TOML with an explicit ``version`` field.  Unknown fields are
rejected with the full dotted path; a handful of single-letter aliases from
the algorithm's conventional notation (``smc.L``, ``schedule.T``,
``schedule.K``, ``conditional.w``) are accepted and canonicalized.

Tabular AR experts may be declared inline by a seeded recipe
(``table_seed`` / ``sharpness`` / ``coupling``) or loaded from a JSON file
with the schema::

    {"num_slices": 6, "alphabet": 4, "slice_shape": 1,
     "tables": [[[...]], ...]}   # tables[u]: (values**u, values) rows

where ``values = alphabet ** slice_shape`` and rows are conditional
distributions indexed by the row-major encoded prefix.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import oracle as oracle_mod
from .conditional import ConditioningGraph
from .core import AnnealSchedule, make_schedule
from .errors import ConfigError
from .experts import (
    ARExpert,
    FlowExpert,
    RewardExpert,
    gaussian_flow_expert,
    gmm_flow_expert,
    linear_reward,
    quadratic_reward,
    random_ar_tables,
    region_indicator_reward,
    tabular_ar_expert,
    threshold_predicate,
)

CONFIG_VERSION = 1

ALIASES = {
    ("smc", "L"): "num_particles",
    ("schedule", "T"): "num_steps",
    ("schedule", "K"): "mcmc_steps",
    ("conditional", "w"): "rate",
}

_SCHEMA: dict[str, Any] = {
    "version": int,
    "description": str,
    "seeds": list,
    "schedule": {
        "num_steps": int,
        "kind": str,
        "mcmc_steps": int,
        "step_scale": float,
        "step_floor": float,
    },
    "smc": {
        "num_particles": int,
        "resample_policy": str,
        "ess_threshold": float,
        "checkpoint_steps": list,
        "scheme": str,
        "weight_mode": str,
        "sweep_order": str,
        "map_mode": bool,
    },
    "conditional": {
        "rate": float,
        "num_updates": int,
    },
    "experts": list,
    "rewards": list,
    "oracle": {
        "kind": str,
        "lo": float,
        "hi": float,
        "points": int,
        "checks": list,
    },
    "outputs": {
        "out_dir": str,
    },
}

_EXPERT_FIELDS = {
    "gaussian": {"kind", "name", "mu", "cov", "region", "region_weight", "parents"},
    "gmm": {"kind", "name", "weights", "mus", "covs", "region", "region_weight", "parents"},
    "tabular_ar": {
        "kind", "name", "num_slices", "alphabet", "slice_shape",
        "table_seed", "sharpness", "coupling", "table_file",
    },
}

_REWARD_FIELDS = {
    "linear": {"kind", "name", "a"},
    "quadratic": {"kind", "name", "A", "b"},
    "indicator": {"kind", "name", "coord", "op", "value", "sharpness"},
}

_CHECK_FIELDS = {"stat", "tol", "bins", "coord", "split"}


@dataclass
class ExperimentConfig:
    """Validated, canonical in-memory configuration."""

    version: int = CONFIG_VERSION
    description: str = ""
    seeds: list[int] = dc_field(default_factory=lambda: [0])
    schedule: dict[str, Any] = dc_field(default_factory=dict)
    smc: dict[str, Any] = dc_field(default_factory=dict)
    conditional: dict[str, Any] = dc_field(default_factory=dict)
    experts: list[dict[str, Any]] = dc_field(default_factory=list)
    rewards: list[dict[str, Any]] = dc_field(default_factory=list)
    oracle: dict[str, Any] | None = None
    outputs: dict[str, Any] = dc_field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "version": self.version,
            "description": self.description,
            "seeds": list(self.seeds),
            "schedule": dict(self.schedule),
            "smc": dict(self.smc),
            "conditional": dict(self.conditional),
            "experts": [dict(e) for e in self.experts],
            "rewards": [dict(r) for r in self.rewards],
            "outputs": dict(self.outputs),
        }
        if self.oracle is not None:
            out["oracle"] = dict(self.oracle)
        return out


_SCHEDULE_DEFAULTS = {"num_steps": 100, "kind": "uniform", "mcmc_steps": 1,
                      "step_scale": 0.5, "step_floor": 1e-3}
_SMC_DEFAULTS = {"num_particles": 1, "resample_policy": "ess", "ess_threshold": 0.5,
                 "checkpoint_steps": [], "scheme": "systematic", "weight_mode": "full",
                 "sweep_order": "sequential", "map_mode": False}
_COND_DEFAULTS = {"rate": 0.1, "num_updates": 2}


def _canonicalize(section: str, key: str) -> str:
    return ALIASES.get((section, key), key)


def _expect_type(value, expected, path: str):
    if expected is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {type(value).__name__}")
        return float(value)
    if expected is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {type(value).__name__}")
        return value
    if not isinstance(value, expected):
        raise ConfigError(f"{path}: expected {expected.__name__}, got {type(value).__name__}")
    return value


def _validate_section(raw: dict, schema: dict, section: str, defaults: dict) -> dict:
    out = dict(defaults)
    for key, value in raw.items():
        canon = _canonicalize(section, key)
        if canon not in schema:
            raise ConfigError(f"{section}.{key}: unknown field")
        out[canon] = _expect_type(value, schema[canon], f"{section}.{canon}")
    return out


def _validate_typed_item(item: dict, kinds: dict[str, set], path: str) -> dict:
    if not isinstance(item, dict):
        raise ConfigError(f"{path}: expected a table")
    kind = item.get("kind")
    if kind is None:
        raise ConfigError(f"{path}.kind: missing required field")
    if kind not in kinds:
        raise ConfigError(f"{path}.kind: unknown kind {kind!r}; expected one of {sorted(kinds)}")
    extra = set(item) - kinds[kind]
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}: unknown field for kind {kind!r}")
    return dict(item)


def validate_config(raw: dict) -> ExperimentConfig:
    """Validate a parsed TOML document into an ExperimentConfig.

    Unknown fields anywhere raise ConfigError with the dotted field path.
    """
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    for key in raw:
        if key not in _SCHEMA:
            raise ConfigError(f"{key}: unknown top-level field")
    version = raw.get("version")
    if version is None:
        raise ConfigError("version: missing required field")
    if version != CONFIG_VERSION:
        raise ConfigError(f"version: unsupported config version {version}; this build reads {CONFIG_VERSION}")

    cfg = ExperimentConfig(version=version, description=str(raw.get("description", "")))

    seeds = raw.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or not all(
        isinstance(s, int) and not isinstance(s, bool) for s in seeds
    ):
        raise ConfigError("seeds: expected a non-empty list of integers")
    cfg.seeds = list(seeds)

    cfg.schedule = _validate_section(raw.get("schedule", {}), _SCHEMA["schedule"], "schedule", _SCHEDULE_DEFAULTS)
    cfg.smc = _validate_section(raw.get("smc", {}), _SCHEMA["smc"], "smc", _SMC_DEFAULTS)
    cfg.conditional = _validate_section(raw.get("conditional", {}), _SCHEMA["conditional"], "conditional", _COND_DEFAULTS)

    experts = raw.get("experts", [])
    if not isinstance(experts, list) or not experts:
        raise ConfigError("experts: at least one expert must be declared")
    cfg.experts = [
        _validate_typed_item(e, _EXPERT_FIELDS, f"experts[{i}]") for i, e in enumerate(experts)
    ]

    rewards = raw.get("rewards", [])
    if not isinstance(rewards, list):
        raise ConfigError("rewards: expected a list of reward tables")
    cfg.rewards = [
        _validate_typed_item(r, _REWARD_FIELDS, f"rewards[{i}]") for i, r in enumerate(rewards)
    ]

    if "oracle" in raw:
        ora = raw["oracle"]
        if not isinstance(ora, dict):
            raise ConfigError("oracle: expected a table")
        for key in ora:
            if key not in _SCHEMA["oracle"]:
                raise ConfigError(f"oracle.{key}: unknown field")
        if "kind" not in ora:
            raise ConfigError("oracle.kind: missing required field")
        for i, check in enumerate(ora.get("checks", [])):
            if not isinstance(check, dict):
                raise ConfigError(f"oracle.checks[{i}]: expected a table")
            extra = set(check) - _CHECK_FIELDS
            if extra:
                raise ConfigError(f"oracle.checks[{i}].{sorted(extra)[0]}: unknown field")
            if "stat" not in check:
                raise ConfigError(f"oracle.checks[{i}].stat: missing required field")
        cfg.oracle = dict(ora)

    cfg.outputs = _validate_section(raw.get("outputs", {}), _SCHEMA["outputs"], "outputs", {"out_dir": "runs"})
    return cfg


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return validate_config(raw)


def parse_override_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(cfg: ExperimentConfig, overrides: list[str]) -> ExperimentConfig:
    """Apply repeatable ``section.key=value`` overrides and re-validate."""
    raw = cfg.to_dict()
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} must look like section.key=value")
        key, text = ov.split("=", 1)
        parts = key.strip().split(".")
        value = parse_override_value(text.strip())
        node = raw
        for i, part in enumerate(parts[:-1]):
            if isinstance(node, list):
                try:
                    node = node[int(part)]
                except (ValueError, IndexError):
                    raise ConfigError(f"override {key!r}: bad list index {part!r}") from None
            elif part in node:
                node = node[part]
            else:
                raise ConfigError(f"override {key!r}: unknown section {part!r}")
            if not isinstance(node, (dict, list)):
                raise ConfigError(f"override {key!r}: {'.'.join(parts[: i + 1])} is not a section")
        leaf = parts[-1]
        if isinstance(node, list):
            try:
                node[int(leaf)] = value
            except (ValueError, IndexError):
                raise ConfigError(f"override {key!r}: bad list index {leaf!r}") from None
        else:
            if len(parts) >= 2 and parts[-2] in ("smc", "schedule", "conditional"):
                leaf = _canonicalize(parts[-2], leaf)
            node[leaf] = value
    return validate_config(raw)


# ---------------------------------------------------------------------------
# Object construction
# ---------------------------------------------------------------------------

def _as_matrix(value, path: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a numeric matrix") from None
    return arr


def _region_weight(decl: dict, dim: int, path: str) -> np.ndarray | None:
    if "region_weight" in decl:
        w = _as_matrix(decl["region_weight"], f"{path}.region_weight")
        if w.shape != (dim,):
            raise ConfigError(f"{path}.region_weight: expected {dim} entries, got shape {w.shape}")
        return w
    if "region" in decl:
        idx = decl["region"]
        if not isinstance(idx, list):
            raise ConfigError(f"{path}.region: expected a list of indices")
        mask = np.zeros(dim)
        for j in idx:
            if not isinstance(j, int) or not 0 <= j < dim:
                raise ConfigError(f"{path}.region: index {j!r} outside [0, {dim})")
            mask[j] = 1.0
        return mask
    return None


def load_ar_table_file(path: str | Path) -> tuple[int, int, int, list[np.ndarray]]:
    with open(path) as fh:
        doc = json.load(fh)
    for key in ("num_slices", "alphabet", "tables"):
        if key not in doc:
            raise ConfigError(f"{path}: AR table file missing {key!r}")
    return (
        int(doc["num_slices"]),
        int(doc["alphabet"]),
        int(doc.get("slice_shape", 1)),
        [np.asarray(t, dtype=np.float64) for t in doc["tables"]],
    )


def build_experts(cfg: ExperimentConfig, sched: AnnealSchedule):
    """Instantiate the generative experts declared in a config.

    Returns (flow_experts, ar_experts); exactly one list is non-empty.
    """
    flow: list[FlowExpert] = []
    ar: list[ARExpert] = []
    for i, decl in enumerate(cfg.experts):
        path = f"experts[{i}]"
        kind = decl["kind"]
        name = decl.get("name", f"expert{i}")
        try:
            if kind == "gaussian":
                if "mu" not in decl or "cov" not in decl:
                    raise ConfigError(f"{path}: gaussian expert requires mu and cov")
                mu = _as_matrix(decl["mu"], f"{path}.mu")
                cov = _as_matrix(decl["cov"], f"{path}.cov")
                flow.append(
                    gaussian_flow_expert(
                        mu, cov, sched.scheduler,
                        region_weight=_region_weight(decl, mu.shape[0], path),
                        parents=tuple(decl.get("parents", [])),
                        name=name,
                    )
                )
            elif kind == "gmm":
                for fieldname in ("weights", "mus", "covs"):
                    if fieldname not in decl:
                        raise ConfigError(f"{path}: gmm expert requires {fieldname}")
                mus = [_as_matrix(m, f"{path}.mus") for m in decl["mus"]]
                covs = [_as_matrix(c, f"{path}.covs") for c in decl["covs"]]
                flow.append(
                    gmm_flow_expert(
                        _as_matrix(decl["weights"], f"{path}.weights"), mus, covs, sched.scheduler,
                        region_weight=_region_weight(decl, mus[0].shape[0], path),
                        parents=tuple(decl.get("parents", [])),
                        name=name,
                    )
                )
            elif kind == "tabular_ar":
                if "table_file" in decl:
                    num_slices, alphabet, slice_shape, tables = load_ar_table_file(decl["table_file"])
                else:
                    for fieldname in ("num_slices", "alphabet", "table_seed"):
                        if fieldname not in decl:
                            raise ConfigError(f"{path}: tabular_ar expert requires {fieldname} (or table_file)")
                    num_slices = decl["num_slices"]
                    alphabet = decl["alphabet"]
                    slice_shape = decl.get("slice_shape", 1)
                    tables = random_ar_tables(
                        num_slices, alphabet, slice_shape,
                        seed=decl["table_seed"],
                        sharpness=decl.get("sharpness", 0.3),
                        coupling=decl.get("coupling", 1.0),
                    )
                ar.append(tabular_ar_expert(num_slices, alphabet, tables, slice_shape, name=name))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if flow and ar:
        raise ConfigError("experts: cannot mix flow and autoregressive experts in one product")
    return flow, ar


def build_rewards(cfg: ExperimentConfig) -> list[RewardExpert]:
    out = []
    for i, decl in enumerate(cfg.rewards):
        path = f"rewards[{i}]"
        kind = decl["kind"]
        name = decl.get("name", f"{kind}{i}")
        try:
            if kind == "linear":
                if "a" not in decl:
                    raise ConfigError(f"{path}: linear reward requires a")
                out.append(linear_reward(_as_matrix(decl["a"], f"{path}.a"), name=name))
            elif kind == "quadratic":
                if "A" not in decl or "b" not in decl:
                    raise ConfigError(f"{path}: quadratic reward requires A and b")
                out.append(
                    quadratic_reward(
                        _as_matrix(decl["A"], f"{path}.A"), _as_matrix(decl["b"], f"{path}.b"), name=name
                    )
                )
            elif kind == "indicator":
                for fieldname in ("coord", "op", "value", "sharpness"):
                    if fieldname not in decl:
                        raise ConfigError(f"{path}: indicator reward requires {fieldname}")
                out.append(
                    region_indicator_reward(
                        threshold_predicate(decl["coord"], decl["op"], decl["value"]),
                        decl["sharpness"],
                        name=name,
                    )
                )
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return out


def build_schedule(cfg: ExperimentConfig) -> AnnealSchedule:
    sc = cfg.schedule
    try:
        return make_schedule(
            sc["num_steps"],
            kind=sc["kind"],
            step_rule=(sc["step_scale"], sc["step_floor"]),
            mcmc_steps=sc["mcmc_steps"],
        )
    except ValueError as exc:
        raise ConfigError(f"schedule: {exc}") from None


def build_graph(cfg: ExperimentConfig, flow_experts: list[FlowExpert]) -> ConditioningGraph:
    parents = {}
    for i, e in enumerate(flow_experts):
        name = e.name or f"expert{i}"
        parents[name] = tuple(e.parents)
    try:
        return ConditioningGraph(
            parents=parents,
            rate=cfg.conditional["rate"],
            num_updates=cfg.conditional["num_updates"],
        )
    except ValueError as exc:
        raise ConfigError(f"conditional: {exc}") from None


# ---------------------------------------------------------------------------
# Oracles and checks
# ---------------------------------------------------------------------------

def build_oracle(cfg: ExperimentConfig, sched: AnnealSchedule):
    """Build the exact reference density declared in the config."""
    if cfg.oracle is None:
        raise ConfigError("oracle: config declares no oracle section")
    kind = cfg.oracle["kind"]
    flow, ar = build_experts(cfg, sched)
    rewards = build_rewards(cfg)

    if kind == "gaussian_product":
        precision = None
        shift = None
        for decl, expert in zip(cfg.experts, flow):
            if decl["kind"] != "gaussian":
                raise ConfigError("oracle.kind gaussian_product requires gaussian experts only")
            mu, cov = expert.context["mu"], expert.context["cov"]
            inv = np.linalg.inv(cov)
            precision = inv if precision is None else precision + inv
            term = inv @ mu
            shift = term if shift is None else shift + term
        for decl in cfg.rewards:
            if decl["kind"] == "linear":
                shift = shift + np.atleast_1d(np.asarray(decl["a"], dtype=np.float64))
            elif decl["kind"] == "quadratic":
                precision = precision + 2.0 * np.atleast_2d(np.asarray(decl["A"], dtype=np.float64))
                shift = shift + np.atleast_1d(np.asarray(decl["b"], dtype=np.float64))
            else:
                raise ConfigError("gaussian_product oracle supports linear and quadratic rewards only")
        cov_out = np.linalg.inv(precision)
        return oracle_mod.GaussianDensity(cov_out @ shift, cov_out)

    if kind == "grid":
        if any(e.dim != 1 for e in flow):
            raise ConfigError("grid oracle supports one-dimensional products")
        lo = cfg.oracle.get("lo", -10.0)
        hi = cfg.oracle.get("hi", 10.0)
        points = cfg.oracle.get("points", 4096)
        axis = np.linspace(lo, hi, points)
        densities = []
        for decl, expert in zip(cfg.experts, flow):
            if decl["kind"] == "gaussian":
                dens = oracle_mod.GaussianDensity(expert.context["mu"], expert.context["cov"])
            elif decl["kind"] == "gmm":
                ctx = expert.context
                dens = oracle_mod.MixtureDensity(
                    ctx["weights"],
                    tuple(oracle_mod.GaussianDensity(m, c) for m, c in zip(ctx["mus"], ctx["covs"])),
                )
            else:
                raise ConfigError("grid oracle requires gaussian or gmm experts")
            densities.append(dens.pdf)
        for r in rewards:
            densities.append(lambda pts, r=r: np.exp(r(pts)))
        return oracle_mod.grid_product(densities, [axis])

    if kind == "enumeration":
        from .ar import exact_product_enumeration

        if not ar:
            raise ConfigError("enumeration oracle requires autoregressive experts")
        table = exact_product_enumeration(ar)
        if rewards:
            geom = ar[0]
            states = geom.slice_values**geom.num_slices
            codes = np.zeros((states, geom.num_slices), dtype=np.int64)
            span = states
            for u in range(geom.num_slices):
                span //= geom.slice_values
                codes[:, u] = (np.arange(states) // span) % geom.slice_values
            tilt = np.zeros(states)
            for r in rewards:
                tilt = tilt + r(codes.astype(np.float64))
            probs = table.probs * np.exp(tilt)
            table = oracle_mod.TableDensity(probs / probs.sum())
        return table

    raise ConfigError(f"oracle.kind: unknown oracle kind {kind!r}")


@dataclass
class CheckResult:
    stat: str
    passed: bool
    measured: float
    threshold: float
    detail: str = ""


def evaluate_checks(
    cfg: ExperimentConfig,
    exact,
    pooled_states: np.ndarray,
    results,
) -> list[CheckResult]:
    """Evaluate every declared oracle check against pooled final particles."""
    out: list[CheckResult] = []
    for check in cfg.oracle.get("checks", []):
        stat = check["stat"]
        tol = float(check.get("tol", 0.0))
        if stat == "mean":
            if isinstance(exact, oracle_mod.TableDensity):
                raise ConfigError("mean check is not defined for enumeration oracles")
            m = pooled_states.mean(axis=0)
            target = exact.mean()
            measured = float(np.max(np.abs(m - target)))
            out.append(CheckResult(stat, measured <= tol, measured, tol, f"|mean - {np.round(target, 4)}|"))
        elif stat == "variance":
            v = float(pooled_states.var(axis=0)[0] if pooled_states.ndim > 1 else pooled_states.var())
            if isinstance(exact, oracle_mod.GaussianDensity):
                target = float(exact.cov[0, 0])
            else:
                target = float(exact.variance())
            measured = abs(v - target)
            out.append(CheckResult(stat, measured <= tol, measured, tol, f"|var - {target:.4f}|"))
        elif stat == "cov_frobenius":
            c = np.cov(pooled_states.T)
            target = exact.covariance()
            measured = float(np.linalg.norm(c - target) / np.linalg.norm(target))
            out.append(CheckResult(stat, measured <= tol, measured, tol, "relative Frobenius"))
        elif stat == "tv":
            bins = int(check.get("bins", 64))
            if isinstance(exact, oracle_mod.TableDensity):
                seqs = pooled_states.astype(np.int64)
                # slice values per position from the table size
                values = round(exact.probs.shape[0] ** (1.0 / seqs.shape[1]))
                codes = np.zeros(seqs.shape[0], dtype=np.int64)
                for u in range(seqs.shape[1]):
                    codes = codes * values + seqs[:, u]
                measured = oracle_mod.tv_distance(codes, exact)
                detail = f"{exact.probs.shape[0]} states"
            else:
                measured = oracle_mod.tv_distance(pooled_states[:, 0], exact, bins=bins)
                detail = f"{bins} bins"
            out.append(CheckResult(stat, measured <= tol, measured, tol, detail))
        elif stat == "mode_balance":
            coord = int(check.get("coord", 0))
            split = float(check.get("split", 0.0))
            frac = float((pooled_states[:, coord] > split).mean())
            if isinstance(exact, oracle_mod.GridDensity):
                target = exact.mass(split, float(exact.axes[0][-1]))
            else:
                raise ConfigError("mode_balance check requires a grid oracle")
            measured = abs(frac - target)
            out.append(CheckResult(stat, measured <= tol, measured, tol, f"P(x>{split}) vs {target:.3f}"))
        elif stat == "ess_after_resample":
            worst = 0.0
            for res in results:
                events = set(res.resample_events)
                by_stage: dict[int, float] = {}
                for t, e in res.ess_history:
                    by_stage[t] = e  # last entry per stage is post-resample
                post = [by_stage[t] for t in events if t in by_stage]
                if post:
                    worst = max(worst, max(abs(e - res.num_particles) for e in post))
            out.append(CheckResult(stat, worst <= tol, worst, tol, "max |ESS - L| after resampling"))
        else:
            raise ConfigError(f"oracle.checks: unknown stat {stat!r}")
    return out


# ---------------------------------------------------------------------------
# Benchmark registry
# ---------------------------------------------------------------------------

def benchmark_dir() -> Path:
    return Path(__file__).parent / "benchmarks"


def list_benchmarks() -> list[tuple[str, str]]:
    out = []
    for path in sorted(benchmark_dir().glob("*.toml")):
        cfg = load_config(path)
        out.append((path.stem, cfg.description))
    return out


def benchmark_path(name: str) -> Path:
    path = benchmark_dir() / f"{name}.toml"
    if not path.exists():
        known = ", ".join(p.stem for p in sorted(benchmark_dir().glob("*.toml")))
        raise ConfigError(f"unknown benchmark {name!r}; shipped benchmarks: {known}")
    return path

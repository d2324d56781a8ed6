"""Experiment driver: seeded runs, pseudo-regret traces at checkpoints,
cross-run aggregation, and the CSV output contract."""
from __future__ import annotations

import concurrent.futures
import csv
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .env import BanditInstance, Purpose, RngStream, gaps, sample_reward
from .policies import DpTsUcbConfig, Policy, PolicyConfig, make_policy
from .privacy import gdp_to_dp, policy_gdp

__all__ = [
    "AggregateResult",
    "ExperimentResult",
    "ExperimentSpec",
    "RunResult",
    "default_checkpoints",
    "run_experiment",
    "run_single",
    "write_csv",
]

DEFAULT_EPS_GRID = (0.0, 0.5, 1.0, 2.0)


def default_checkpoints(horizon: int, n_arms: int = 1) -> tuple[int, ...]:
    """Geometric grid ceil(T/2^k) down to the number of arms, plus round K
    (the first round every policy has finished its first pass) and T itself."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    if not 1 <= n_arms <= horizon:
        raise ValueError(f"need 1 <= n_arms <= horizon, got {n_arms}")
    points = {horizon, n_arms}
    value = horizon
    while value > n_arms:
        value = -(-value // 2)  # ceil(value / 2); iterating gives ceil(T / 2^k)
        if value > n_arms:
            points.add(value)
    return tuple(sorted(points))


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything that determines a benchmark's results bit-for-bit."""

    instance: BanditInstance
    policies: tuple[PolicyConfig, ...]
    horizon: int
    n_runs: int
    base_seed: int = 0
    checkpoints: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        policies = tuple(self.policies)
        if not policies:
            raise ValueError("need at least one policy")
        for cfg in policies:
            if cfg.horizon != self.horizon:
                raise ValueError(
                    f"policy {cfg.label()} is pinned to horizon {cfg.horizon}, "
                    f"experiment runs to {self.horizon}"
                )
            cfg.validate_for(self.instance.n_arms)
        if self.n_runs < 1:
            raise ValueError(f"n_runs must be >= 1, got {self.n_runs}")
        cps = self.checkpoints
        if cps is None:
            cps = default_checkpoints(self.horizon, self.instance.n_arms)
        cps = tuple(int(c) for c in cps)
        if not cps:
            raise ValueError("checkpoints must not be empty")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError(f"checkpoints must be strictly increasing, got {cps}")
        if cps[0] < 1 or cps[-1] != self.horizon:
            raise ValueError(
                f"checkpoints must lie in [1, T] and end at T={self.horizon}, got {cps}"
            )
        object.__setattr__(self, "policies", policies)
        object.__setattr__(self, "checkpoints", cps)


@dataclass(frozen=True)
class RunResult:
    """One policy's trace for one seeded run."""

    policy: str
    position: int
    seed: int
    checkpoints: tuple[int, ...]
    regret: tuple[float, ...]
    pulls: tuple[int, ...]
    eta: float | None


@dataclass(frozen=True)
class AggregateResult:
    """Per-checkpoint mean and sample std of regret across a policy's runs."""

    policy: str
    position: int
    checkpoints: tuple[int, ...]
    mean_regret: tuple[float, ...]
    std_regret: tuple[float, ...]
    n_runs: int


@dataclass(frozen=True)
class ExperimentResult:
    spec: ExperimentSpec
    runs: tuple[RunResult, ...]
    aggregates: tuple[AggregateResult, ...]


def _drive(
    policy: Policy,
    instance: BanditInstance,
    horizon: int,
    checkpoints: tuple[int, ...],
    reward_rng: np.random.Generator,
) -> tuple[list[float], np.ndarray]:
    """The round loop: select, draw reward, update, accumulate pseudo-regret."""
    gap = gaps(instance)
    pulls = np.zeros(instance.n_arms, dtype=np.int64)
    regret = 0.0
    trace: list[float] = []
    remaining = iter(checkpoints)
    next_cp = next(remaining)
    select = policy.select
    update = policy.update
    for t in range(1, horizon + 1):
        arm = select(t)
        reward = sample_reward(instance, arm, reward_rng)
        update(arm, reward)
        pulls[arm] += 1
        regret += gap[arm]
        if t == next_cp:
            trace.append(regret)
            next_cp = next(remaining, 0)
    return trace, pulls


def run_single(spec: ExperimentSpec, position: int, run_index: int) -> RunResult:
    """One seeded run of spec.policies[position].

    Streams are keyed (base_seed, position, run_index, purpose), so a run's
    results never depend on which other runs execute, or where.
    """
    cfg = spec.policies[position]
    root = RngStream(spec.base_seed, (position, run_index))
    policy = make_policy(cfg, spec.instance.n_arms, root.child(Purpose.POLICY).generator())
    reward_rng = root.child(Purpose.REWARD).generator()
    trace, pulls = _drive(policy, spec.instance, spec.horizon, spec.checkpoints, reward_rng)
    eta = policy_gdp(cfg)
    return RunResult(
        policy=cfg.label(),
        position=position,
        seed=run_index,
        checkpoints=spec.checkpoints,
        regret=tuple(trace),
        pulls=tuple(int(p) for p in pulls),
        eta=None if eta is None else eta.eta,
    )


def _run_task(args: tuple[ExperimentSpec, int, int]) -> RunResult:
    return run_single(*args)


def _aggregate(spec: ExperimentSpec, runs: list[RunResult]) -> tuple[AggregateResult, ...]:
    out = []
    for position, cfg in enumerate(spec.policies):
        traces = np.array(
            [r.regret for r in runs if r.position == position], dtype=np.float64
        )
        mean = traces.mean(axis=0)
        if traces.shape[0] > 1:
            std = traces.std(axis=0, ddof=1)
        else:
            std = np.zeros_like(mean)
        out.append(
            AggregateResult(
                policy=cfg.label(),
                position=position,
                checkpoints=spec.checkpoints,
                mean_regret=tuple(float(v) for v in mean),
                std_regret=tuple(float(v) for v in std),
                n_runs=traces.shape[0],
            )
        )
    return tuple(out)


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> ExperimentResult:
    """All (policy, run) pairs; results are identical for every worker count
    because each run owns its streams and aggregation happens in task order."""
    if workers is None:
        workers = os.cpu_count() or 1
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    tasks = [
        (spec, position, run)
        for position in range(len(spec.policies))
        for run in range(spec.n_runs)
    ]
    if workers == 1 or len(tasks) == 1:
        runs = [_run_task(t) for t in tasks]
    else:
        chunk = max(1, len(tasks) // (4 * workers))
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_task, tasks, chunksize=chunk))
    return ExperimentResult(spec=spec, runs=tuple(runs), aggregates=_aggregate(spec, runs))


# ---------------------------------------------------------------------------
# CSV contract


def _fmt(value: float) -> str:
    # 17 significant digits: parses back to the identical float
    return format(float(value), ".17g")


def _open_writer(path: Path):
    handle = path.open("w", newline="")
    return handle, csv.writer(handle, lineterminator="\n")


def write_privacy_csv(
    policies: tuple[PolicyConfig, ...],
    path: Path,
    eps_grid: tuple[float, ...] = DEFAULT_EPS_GRID,
) -> list[list[str]]:
    """privacy.csv: one row per (policy, epsilon); policies without a
    Gaussian guarantee (ucb1) produce no rows.  Returns the body rows."""
    rows: list[list[str]] = []
    for cfg in policies:
        eta = policy_gdp(cfg)
        if eta is None:
            continue
        alpha = (
            _fmt(cfg.variant.alpha) if isinstance(cfg.variant, DpTsUcbConfig) else ""
        )
        for eps in eps_grid:
            point = gdp_to_dp(eta, eps)
            rows.append(
                [cfg.label(), alpha, str(cfg.horizon), _fmt(eta.eta), _fmt(eps), _fmt(point.delta)]
            )
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["policy", "alpha", "T", "eta", "epsilon", "delta"])
        writer.writerows(rows)
    return rows


def write_csv(
    result: ExperimentResult,
    out_dir: str | Path,
    eps_grid: tuple[float, ...] = DEFAULT_EPS_GRID,
) -> dict[str, Path]:
    """Write per_run.csv, aggregate.csv and privacy.csv under out_dir.

    Output is byte-deterministic: fixed row order (policy position, then run,
    then checkpoint), 17-significant-digit floats, "\\n" line endings.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in ("per_run", "aggregate", "privacy")}

    handle, writer = _open_writer(paths["per_run"])
    with handle:
        writer.writerow(["policy", "seed", "checkpoint", "regret"])
        for run in result.runs:
            for checkpoint, regret in zip(run.checkpoints, run.regret):
                writer.writerow([run.policy, str(run.seed), str(checkpoint), _fmt(regret)])

    handle, writer = _open_writer(paths["aggregate"])
    with handle:
        writer.writerow(["policy", "checkpoint", "mean_regret", "std_regret", "n_runs"])
        for agg in result.aggregates:
            for checkpoint, mean, std in zip(agg.checkpoints, agg.mean_regret, agg.std_regret):
                writer.writerow(
                    [agg.policy, str(checkpoint), _fmt(mean), _fmt(std), str(agg.n_runs)]
                )

    write_privacy_csv(result.spec.policies if result.runs else (), paths["privacy"], eps_grid)
    return paths

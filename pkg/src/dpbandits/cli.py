"""Command line interface.

Three subcommands: `run` executes a benchmark and writes per_run.csv,
aggregate.csv, privacy.csv and summary.txt; `verify` runs the Monte-Carlo
verification battery; `privacy` prints the guarantee table without running
anything.  Settings resolve in fixed precedence order: built-in defaults,
then --preset expansion, then the --config file, then explicit flags.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 I/O error.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path

from .env import BanditInstance
from .harness import ExperimentResult, ExperimentSpec, run_experiment, write_csv
from .harness import write_privacy_csv
from .policies import (
    DpTsUcbConfig,
    MTsGaussianConfig,
    PolicyConfig,
    TsGaussianConfig,
    Ucb1Config,
)
from .privacy import match_c, policy_gdp
from .verify import BATTERY_CHECKS, McReport, default_battery

__all__ = ["CliConfig", "UsageError", "config_items", "main", "parse_config"]


class UsageError(Exception):
    """Bad flags, bad config keys, or out-of-domain values; exits with 2."""


POLICY_NAMES = ("dp-ts-ucb", "ts-gaussian", "m-ts-gaussian", "ucb1")

#: pre-pull counts that performed best in the source experiments, per alpha
PAPER_BEST_B = {0.0: 1, 1.0: 2000}

_DEFAULT_MEANS = "0.95,0.75,0.55,0.35,0.15"

DEFAULTS = {
    "means": _DEFAULT_MEANS,
    "T": "100000",
    "alpha": "0",
    "policies": "dp-ts-ucb",
    "b": "0",
    "c": "match",
    "runs": "20",
    "seed": "0",
    "out": "results",
    "eps-grid": "0,0.5,1,2",
    "workers": "",
    "trials": "100000",
    "checks": "all",
}

PRESETS = {
    # the alpha sweep of the budgeted policy on the five-arm instance
    "paper-fig3": {
        "means": _DEFAULT_MEANS,
        "T": "1000000",
        "alpha": "0,0.25,0.5,0.75,1",
        "policies": "dp-ts-ucb",
    },
    # against the pre-pulled baseline tuned for regret, c = 5 ln^alpha T, b=0
    "paper-fig4": {
        "means": _DEFAULT_MEANS,
        "T": "1000000",
        "alpha": "0,0.25,0.5,0.75,1",
        "policies": "dp-ts-ucb,m-ts-gaussian",
        "b": "0",
        "c": "regret",
    },
    # privacy-matched comparison: b from the source grid, c = match_c
    "paper-fig5": {
        "means": _DEFAULT_MEANS,
        "T": "1000000",
        "alpha": "0,1",
        "policies": "dp-ts-ucb,m-ts-gaussian",
        "b": "paper",
        "c": "match",
    },
}

_CONFIG_KEYS = tuple(DEFAULTS) + ("preset",)


@dataclass(frozen=True)
class CliConfig:
    """Fully resolved, typed settings for one invocation."""

    command: str
    means: tuple[float, ...]
    horizon: int
    alphas: tuple[float, ...]
    policies: tuple[str, ...]
    b: int | str  # a count, or "paper"
    c: float | str  # a scale, or "match" / "regret"
    runs: int
    seed: int
    out: str
    eps_grid: tuple[float, ...]
    workers: int | None
    trials: int
    checks: tuple[str, ...]


# ---------------------------------------------------------------------------
# parsing


def _parse_int(key: str, raw: str, minimum: int) -> int:
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"{key} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise UsageError(f"{key} must be >= {minimum}, got {value}")
    return value


def _parse_floats(key: str, raw: str) -> tuple[float, ...]:
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise UsageError(f"{key} must be a comma-separated list of numbers")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise UsageError(f"{key} must be a comma-separated list of numbers, got {raw!r}") from None


def _parse_config_text(text: str) -> dict[str, str]:
    """Flat `key = value` lines; '#' starts a comment; unknown keys rejected."""
    items: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise UsageError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
        items[key] = value
    return items


def _flag_items(ns: argparse.Namespace) -> dict[str, str]:
    pairs = {
        "means": ns.means, "T": ns.T, "alpha": ns.alpha, "policies": ns.policies,
        "b": ns.b, "c": ns.c, "runs": ns.runs, "seed": ns.seed, "out": ns.out,
        "eps-grid": ns.eps_grid, "workers": ns.workers, "trials": ns.trials,
        "checks": ns.checks, "preset": ns.preset,
    }
    return {k: v for k, v in pairs.items() if v is not None}


def _merge_items(ns: argparse.Namespace) -> dict[str, str]:
    file_items: dict[str, str] = {}
    if ns.config is not None:
        file_items = _parse_config_text(Path(ns.config).read_text())
    flag_items = _flag_items(ns)
    preset = flag_items.pop("preset", None) or file_items.pop("preset", None)
    merged = dict(DEFAULTS)
    if preset is not None:
        if preset not in PRESETS:
            raise UsageError(f"unknown preset {preset!r}; valid: {sorted(PRESETS)}")
        merged.update(PRESETS[preset])
    merged.update(file_items)
    merged.update(flag_items)
    return merged


def _resolve(command: str, items: dict[str, str]) -> CliConfig:
    means = _parse_floats("means", items["means"])
    alphas = _parse_floats("alpha", items["alpha"])
    for a in alphas:
        if not 0.0 <= a <= 1.0:
            raise UsageError(f"alpha must lie in [0, 1], got {a:g}")
    policies = tuple(p.strip() for p in items["policies"].split(",") if p.strip())
    if not policies:
        raise UsageError("policies must name at least one policy")
    for name in policies:
        if name not in POLICY_NAMES:
            raise UsageError(f"unknown policy {name!r}; valid: {list(POLICY_NAMES)}")
    raw_b = items["b"].strip()
    b: int | str = "paper" if raw_b == "paper" else _parse_int("b", raw_b, 0)
    raw_c = items["c"].strip()
    if raw_c in ("match", "regret"):
        c: float | str = raw_c
    else:
        try:
            c = float(raw_c)
        except ValueError:
            raise UsageError(
                f"c must be a number, 'match' or 'regret', got {raw_c!r}"
            ) from None
        if not (math.isfinite(c) and c > 0):
            raise UsageError(f"c must be positive and finite, got {c:g}")
    eps_grid = _parse_floats("eps-grid", items["eps-grid"])
    if any(e < 0 for e in eps_grid):
        raise UsageError("eps-grid values must be >= 0")
    raw_workers = items["workers"].strip()
    workers = None if not raw_workers else _parse_int("workers", raw_workers, 1)
    raw_checks = items["checks"].strip()
    if raw_checks == "all":
        checks = BATTERY_CHECKS
    else:
        checks = tuple(p.strip() for p in raw_checks.split(",") if p.strip())
        for name in checks:
            if name not in BATTERY_CHECKS:
                raise UsageError(f"unknown check {name!r}; valid: {list(BATTERY_CHECKS)}")
    return CliConfig(
        command=command,
        means=means,
        horizon=_parse_int("T", items["T"], 1),
        alphas=alphas,
        policies=policies,
        b=b,
        c=c,
        runs=_parse_int("runs", items["runs"], 1),
        seed=_parse_int("seed", items["seed"], 0),
        out=items["out"],
        eps_grid=eps_grid,
        workers=workers,
        trials=_parse_int("trials", items["trials"], 10**4),
        checks=checks,
    )


def parse_config(argv: list[str]) -> CliConfig:
    """Resolve argv (plus any --config file and --preset) into a CliConfig."""
    ns = _build_parser().parse_args(argv)
    return _resolve(ns.command, _merge_items(ns))


def config_items(cfg: CliConfig) -> dict[str, str]:
    """Serialize back to the flat key-value form; re-parsing these items
    reproduces the CliConfig exactly (preset expansion is idempotent)."""
    def fmt(x: float) -> str:
        return format(float(x), ".17g")

    return {
        "means": ",".join(fmt(m) for m in cfg.means),
        "T": str(cfg.horizon),
        "alpha": ",".join(fmt(a) for a in cfg.alphas),
        "policies": ",".join(cfg.policies),
        "b": str(cfg.b),
        "c": cfg.c if isinstance(cfg.c, str) else fmt(cfg.c),
        "runs": str(cfg.runs),
        "seed": str(cfg.seed),
        "out": cfg.out,
        "eps-grid": ",".join(fmt(e) for e in cfg.eps_grid),
        "workers": "" if cfg.workers is None else str(cfg.workers),
        "trials": str(cfg.trials),
        "checks": ",".join(cfg.checks),
    }


def _build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", help="flat key = value settings file")
    shared.add_argument("--preset", help=f"one of {sorted(PRESETS)}")
    shared.add_argument("--means", help="comma-separated arm means in [0, 1]")
    shared.add_argument("--T", help="horizon (rounds per run)")
    shared.add_argument("--alpha", help="comma-separated privacy exponents in [0, 1]")
    shared.add_argument("--policies", help=f"comma-separated subset of {list(POLICY_NAMES)}")
    shared.add_argument("--b", help="pre-pull count for m-ts-gaussian, or 'paper'")
    shared.add_argument("--c", help="variance scale for m-ts-gaussian, 'match' or 'regret'")
    shared.add_argument("--runs", help="independent runs per policy")
    shared.add_argument("--seed", help="base seed; every (policy, run) derives substreams")
    shared.add_argument("--out", help="output directory")
    shared.add_argument("--eps-grid", help="comma-separated epsilons for privacy.csv")
    shared.add_argument("--workers", help="worker processes (default: machine CPUs)")
    shared.add_argument("--trials", help="Monte-Carlo trials per verification check")
    shared.add_argument("--checks", help=f"'all' or comma-separated subset of {list(BATTERY_CHECKS)}")
    parser = argparse.ArgumentParser(
        prog="dpbandits",
        description="Privacy-aware stochastic bandit benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[shared], help="run a benchmark and write CSVs")
    sub.add_parser("verify", parents=[shared], help="run the verification battery")
    sub.add_parser("privacy", parents=[shared], help="print the privacy table")
    return parser


# ---------------------------------------------------------------------------
# commands


def expand_policies(cfg: CliConfig) -> tuple[PolicyConfig, ...]:
    """Expand the policy-name list into concrete configurations.

    dp-ts-ucb yields one entry per alpha.  m-ts-gaussian yields a single
    entry when both b and c are fixed numbers, otherwise one entry per alpha
    with b resolved from the source grid ('paper') and c from match_c
    ('match') or the regret recipe 5 ln^alpha T ('regret').
    """
    out: list[PolicyConfig] = []
    for name in cfg.policies:
        if name == "dp-ts-ucb":
            out.extend(
                PolicyConfig(DpTsUcbConfig(alpha), cfg.horizon) for alpha in cfg.alphas
            )
        elif name == "ts-gaussian":
            out.append(PolicyConfig(TsGaussianConfig(), cfg.horizon))
        elif name == "ucb1":
            out.append(PolicyConfig(Ucb1Config(), cfg.horizon))
        elif name == "m-ts-gaussian":
            if isinstance(cfg.b, int) and isinstance(cfg.c, float):
                out.append(PolicyConfig(MTsGaussianConfig(cfg.b, cfg.c), cfg.horizon))
                continue
            for alpha in cfg.alphas:
                if cfg.b == "paper":
                    if alpha not in PAPER_BEST_B:
                        raise UsageError(
                            f"b='paper' only covers alpha in {sorted(PAPER_BEST_B)}; "
                            f"pass --b explicitly for alpha={alpha:g}"
                        )
                    b = PAPER_BEST_B[alpha]
                else:
                    b = cfg.b
                if cfg.c == "match":
                    c = match_c(alpha, cfg.horizon, b)
                elif cfg.c == "regret":
                    c = 5.0 * math.log(cfg.horizon) ** alpha
                else:
                    c = cfg.c
                out.append(PolicyConfig(MTsGaussianConfig(b, c), cfg.horizon))
    return tuple(out)


def _summary_text(result: ExperimentResult) -> str:
    spec = result.spec
    lines = [
        f"instance means: {', '.join(format(m, 'g') for m in spec.instance.means)}",
        f"T={spec.horizon} runs={spec.n_runs} base_seed={spec.base_seed}",
        "",
        f"{'policy':<40} {'eta':>14} {'final regret':>14} {'std':>12}",
    ]
    for agg, cfg in zip(result.aggregates, spec.policies):
        eta = policy_gdp(cfg)
        eta_text = format(eta.eta, ".6f") if eta is not None else "-"
        lines.append(
            f"{agg.policy:<40} {eta_text:>14} {agg.mean_regret[-1]:>14.2f} "
            f"{agg.std_regret[-1]:>12.2f}"
        )
    return "\n".join(lines)


def _cmd_run(cfg: CliConfig) -> int:
    spec = ExperimentSpec(
        instance=BanditInstance(cfg.means),
        policies=expand_policies(cfg),
        horizon=cfg.horizon,
        n_runs=cfg.runs,
        base_seed=cfg.seed,
    )
    result = run_experiment(spec, workers=cfg.workers)
    write_csv(result, cfg.out, cfg.eps_grid)
    summary = _summary_text(result)
    (Path(cfg.out) / "summary.txt").write_text(summary + "\n")
    print(summary)
    return 0


def _render_reports(reports: list[McReport]) -> tuple[str, int]:
    lines = []
    for r in reports:
        comparison = "<=" if r.direction == "le" else ">="
        lines.append(
            f"{r.name:<44} estimate={r.estimate:<12.6g} {comparison} "
            f"bound={r.bound:<12.6g} se={r.mc_std_err:<10.3g} "
            f"{'PASS' if r.passed else 'FAIL'}"
        )
    failed = sum(not r.passed for r in reports)
    lines.append(f"{len(reports) - failed}/{len(reports)} checks passed")
    return "\n".join(lines), 0 if failed == 0 else 1


def _cmd_verify(cfg: CliConfig) -> int:
    reports = default_battery(cfg.trials, cfg.seed, cfg.checks)
    text, code = _render_reports(reports)
    print(text)
    return code


def _cmd_privacy(cfg: CliConfig) -> int:
    policies = expand_policies(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = write_privacy_csv(policies, out / "privacy.csv", cfg.eps_grid)
    header = ["policy", "alpha", "T", "eta", "epsilon", "delta"]
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h)
              for i, h in enumerate(header)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for row in rows:
        print("  ".join(v.ljust(w) for v, w in zip(row, widths)))
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        ns = _build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse handles --help (0) and bad flags (2)
        return int(exc.code) if exc.code is not None else 0
    try:
        cfg = _resolve(ns.command, _merge_items(ns))
        if ns.command == "run":
            return _cmd_run(cfg)
        if ns.command == "verify":
            return _cmd_verify(cfg)
        return _cmd_privacy(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:  # out-of-domain values caught by the library
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())

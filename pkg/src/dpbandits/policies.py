"""Bandit policies.

The centerpiece is an epoch-budgeted Gaussian Thompson sampler: each arm may
release at most `phi_budget` fresh Gaussian models per epoch, after which the
best model drawn in the epoch is reused as a UCB-style index until the arm's
observation count doubles.  Baselines: plain Gaussian Thompson sampling, the
same with `b` extra pre-pulls per arm and variance scale `c`, and UCB1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ArmState",
    "BUDGET_SCALE",
    "DpTsUcbConfig",
    "DpTsUcbPolicy",
    "GaussianThompsonPolicy",
    "MTsGaussianConfig",
    "Policy",
    "PolicyConfig",
    "TsGaussianConfig",
    "Ucb1Config",
    "Ucb1Policy",
    "make_policy",
    "phi_budget",
]

#: Multiplier in the per-epoch sampling budget, sqrt(2 pi e).  Also the base
#: of the matched noise-level formulas in `privacy`.
BUDGET_SCALE = math.sqrt(2.0 * math.pi * math.e)

#: Smallest usable horizon: ln(T) must exceed 3 for the budget/noise formulas.
MIN_HORIZON = 21


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return alpha


def _check_horizon(horizon: int, minimum: int = MIN_HORIZON) -> int:
    if horizon != int(horizon) or int(horizon) < minimum:
        raise ValueError(f"horizon must be an integer >= {minimum}, got {horizon}")
    return int(horizon)


def phi_budget(alpha: float, horizon: int) -> int:
    """Per-epoch cap on fresh Gaussian draws for one arm.

    ceil(BUDGET_SCALE * T^{0.5(1-alpha)} * ln(T)^{0.5(3-alpha)}); at alpha=1
    this is O(ln T), at alpha=0 it grows like sqrt(T) ln^1.5 T.
    """
    alpha = _check_alpha(alpha)
    T = float(_check_horizon(horizon))
    return math.ceil(
        BUDGET_SCALE * T ** (0.5 * (1.0 - alpha)) * math.log(T) ** (0.5 * (3.0 - alpha))
    )


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class DpTsUcbConfig:
    """Budgeted Gaussian Thompson sampling with UCB reuse.

    zero_max_reset switches the epoch max-model reset value from -inf to the
    literal 0.0 for comparison runs; with rewards in [0, 1] the zero floor can
    only inflate the reused index.
    """

    alpha: float
    zero_max_reset: bool = False

    name = "dp-ts-ucb"


@dataclass(frozen=True)
class TsGaussianConfig:
    """Plain Gaussian Thompson sampling, theta_i ~ Normal(mu_hat_i, 1/n_i)."""

    name = "ts-gaussian"


@dataclass(frozen=True)
class MTsGaussianConfig:
    """Gaussian Thompson sampling with b extra pre-pulls per arm and model
    variance c/n_i."""

    b: int
    c: float

    name = "m-ts-gaussian"


@dataclass(frozen=True)
class Ucb1Config:
    """Deterministic UCB1 index policy, mu_hat_i + sqrt(2 ln t / n_i)."""

    name = "ucb1"


PolicyVariant = DpTsUcbConfig | TsGaussianConfig | MTsGaussianConfig | Ucb1Config


@dataclass(frozen=True)
class PolicyConfig:
    """A policy variant pinned to the horizon it will be run for."""

    variant: PolicyVariant
    horizon: int

    def __post_init__(self) -> None:
        v = self.variant
        if isinstance(v, DpTsUcbConfig):
            _check_alpha(v.alpha)
            _check_horizon(self.horizon)
        elif isinstance(v, MTsGaussianConfig):
            if v.b != int(v.b) or v.b < 0:
                raise ValueError(f"b must be a non-negative integer, got {v.b}")
            if not (math.isfinite(v.c) and v.c > 0):
                raise ValueError(f"c must be positive and finite, got {v.c}")
            _check_horizon(self.horizon, minimum=1)
        elif isinstance(v, (TsGaussianConfig, Ucb1Config)):
            _check_horizon(self.horizon, minimum=1)
        else:
            raise ValueError(f"unknown policy variant: {v!r}")

    def init_rounds(self, n_arms: int) -> int:
        """Rounds consumed by the forced round-robin initialization."""
        if isinstance(self.variant, MTsGaussianConfig):
            return (self.variant.b + 1) * n_arms
        return n_arms

    def validate_for(self, n_arms: int) -> None:
        """Check instance-dependent preconditions (initialization must fit)."""
        if n_arms < 1:
            raise ValueError("need at least one arm")
        need = self.init_rounds(n_arms)
        if need > self.horizon:
            raise ValueError(
                f"{self.label()} needs {need} initialization rounds "
                f"but the horizon is {self.horizon}"
            )

    def label(self) -> str:
        """Stable human-readable id used in CSV output (never contains commas)."""
        v = self.variant
        if isinstance(v, DpTsUcbConfig):
            return f"dp-ts-ucb(alpha={v.alpha:g})"
        if isinstance(v, MTsGaussianConfig):
            return f"m-ts-gaussian(b={v.b};c={v.c:.6g})"
        return v.name


# ---------------------------------------------------------------------------
# policies


class Policy:
    """Sequential contract: for t = 1..T call select(t), then feed the pulled
    arm's reward back through update(arm, reward)."""

    n_arms: int

    def select(self, t: int) -> int:
        raise NotImplementedError

    def update(self, arm: int, reward: float) -> None:
        raise NotImplementedError


@dataclass(frozen=True)
class ArmState:
    """Snapshot of one arm's epoch bookkeeping in DpTsUcbPolicy.

    n observations back the current mean estimate; `unprocessed` rewards (and
    their `pending_sum`) wait for the epoch to complete, which happens after
    exactly 2^epoch of them; `budget` fresh draws remain before the policy
    falls back to reusing `max_model`.
    """

    n: int
    mu_hat: float
    epoch: int
    unprocessed: int
    budget: int
    max_model: float
    pending_sum: float


class DpTsUcbPolicy(Policy):
    """Gaussian Thompson sampling under a per-epoch fresh-model budget.

    Every round, each arm with budget left draws a fresh model
    theta_i ~ Normal(mu_hat_i, ln(T)^alpha / n_i) (a mandatory-sampling round
    for that arm); an arm whose budget is spent reuses the max model it drew
    this epoch.  The arm with the largest model is pulled.  Rewards accumulate
    in a pending buffer; once an arm's epoch has 2^r of them, the mean
    estimate is replaced by the buffer mean, the budget refills and the epoch
    max resets.
    """

    def __init__(
        self,
        n_arms: int,
        horizon: int,
        alpha: float,
        rng: np.random.Generator,
        zero_max_reset: bool = False,
    ) -> None:
        self.n_arms = int(n_arms)
        self.horizon = _check_horizon(horizon)
        self.alpha = _check_alpha(alpha)
        self.phi = phi_budget(alpha, horizon)
        self._rng = rng
        # ln(T)^alpha is fixed for the whole run; evaluate it once.
        self._ln_pow = math.log(float(horizon)) ** self.alpha
        self._reset_value = 0.0 if zero_max_reset else -math.inf
        k = self.n_arms
        self._init_cursor = 0
        self._n = np.ones(k, dtype=np.int64)
        self._mu_hat = np.zeros(k, dtype=np.float64)
        self._scale = np.full(k, math.sqrt(self._ln_pow), dtype=np.float64)
        self._epoch = np.ones(k, dtype=np.int64)
        self._unprocessed = np.zeros(k, dtype=np.int64)
        self._budget = np.full(k, self.phi, dtype=np.int64)
        self._max_model = np.full(k, self._reset_value, dtype=np.float64)
        self._pending = np.zeros(k, dtype=np.float64)

    def arm_state(self, arm: int) -> ArmState:
        """Inspection snapshot of one arm's bookkeeping."""
        return ArmState(
            n=int(self._n[arm]),
            mu_hat=float(self._mu_hat[arm]),
            epoch=int(self._epoch[arm]),
            unprocessed=int(self._unprocessed[arm]),
            budget=int(self._budget[arm]),
            max_model=float(self._max_model[arm]),
            pending_sum=float(self._pending[arm]),
        )

    def select(self, t: int) -> int:
        if self._init_cursor < self.n_arms:
            return self._init_cursor
        arm, _ = self.select_with_models(t)
        return arm

    def select_with_models(self, t: int) -> tuple[int, np.ndarray]:
        """One post-initialization round; returns (arm, per-arm models).

        Mutates budgets and epoch maxes: every arm with budget left consumes
        one fresh draw this round whether or not it ends up pulled.
        """
        if self._init_cursor < self.n_arms:
            raise RuntimeError("initialization rounds are not finished")
        budget = self._budget
        if budget.all():
            theta = self._rng.normal(self._mu_hat, self._scale)
            budget -= 1
            np.maximum(self._max_model, theta, out=self._max_model)
        else:
            live = budget > 0
            if live.any():
                theta = self._max_model.copy()
                draws = self._rng.normal(self._mu_hat[live], self._scale[live])
                theta[live] = draws
                budget[live] -= 1
                self._max_model[live] = np.maximum(self._max_model[live], draws)
            else:
                theta = self._max_model.copy()
        return int(np.argmax(theta)), theta

    def update(self, arm: int, reward: float) -> None:
        if self._init_cursor < self.n_arms:
            # round-robin initialization: the single pull seeds mu_hat, n=1
            self._mu_hat[arm] = reward
            self._init_cursor += 1
            return
        self._unprocessed[arm] += 1
        self._pending[arm] += reward
        size = 1 << self._epoch[arm]
        if self._unprocessed[arm] == size:
            self._mu_hat[arm] = self._pending[arm] / size
            self._n[arm] = size
            self._scale[arm] = math.sqrt(self._ln_pow / size)
            self._budget[arm] = self.phi
            self._max_model[arm] = self._reset_value
            self._pending[arm] = 0.0
            self._unprocessed[arm] = 0
            self._epoch[arm] += 1


class GaussianThompsonPolicy(Policy):
    """Gaussian Thompson sampling: theta_i ~ Normal(mu_hat_i, c/n_i) for every
    arm every round, after pulling each arm b+1 times round-robin.  b=0, c=1
    is the plain baseline."""

    def __init__(self, n_arms: int, rng: np.random.Generator, b: int = 0, c: float = 1.0) -> None:
        self.n_arms = int(n_arms)
        self.b = int(b)
        self.c = float(c)
        self._rng = rng
        self._init_total = (self.b + 1) * self.n_arms
        self._init_cursor = 0
        self._n = np.zeros(n_arms, dtype=np.int64)
        self._mu_hat = np.zeros(n_arms, dtype=np.float64)
        self._scale = np.zeros(n_arms, dtype=np.float64)

    def select(self, t: int) -> int:
        if self._init_cursor < self._init_total:
            return self._init_cursor % self.n_arms
        theta = self._rng.normal(self._mu_hat, self._scale)
        return int(np.argmax(theta))

    def update(self, arm: int, reward: float) -> None:
        if self._init_cursor < self._init_total:
            self._init_cursor += 1
        n = self._n[arm] + 1
        self._n[arm] = n
        self._mu_hat[arm] += (reward - self._mu_hat[arm]) / n
        self._scale[arm] = math.sqrt(self.c / n)


class Ucb1Policy(Policy):
    """UCB1: pull argmax of mu_hat_i + sqrt(2 ln t / n_i) after one pull each."""

    def __init__(self, n_arms: int) -> None:
        self.n_arms = int(n_arms)
        self._init_cursor = 0
        self._n = np.zeros(n_arms, dtype=np.int64)
        self._mu_hat = np.zeros(n_arms, dtype=np.float64)

    def select(self, t: int) -> int:
        if self._init_cursor < self.n_arms:
            return self._init_cursor
        index = self._mu_hat + np.sqrt((2.0 * math.log(t)) / self._n)
        return int(np.argmax(index))

    def update(self, arm: int, reward: float) -> None:
        if self._init_cursor < self.n_arms:
            self._init_cursor += 1
        n = self._n[arm] + 1
        self._n[arm] = n
        self._mu_hat[arm] += (reward - self._mu_hat[arm]) / n


def make_policy(config: PolicyConfig, n_arms: int, rng: np.random.Generator) -> Policy:
    """Instantiate the policy described by `config` for an n_arms instance."""
    config.validate_for(n_arms)
    v = config.variant
    if isinstance(v, DpTsUcbConfig):
        return DpTsUcbPolicy(
            n_arms, config.horizon, v.alpha, rng, zero_max_reset=v.zero_max_reset
        )
    if isinstance(v, TsGaussianConfig):
        return GaussianThompsonPolicy(n_arms, rng, b=0, c=1.0)
    if isinstance(v, MTsGaussianConfig):
        return GaussianThompsonPolicy(n_arms, rng, b=v.b, c=v.c)
    if isinstance(v, Ucb1Config):
        return Ucb1Policy(n_arms)
    raise ValueError(f"unknown policy variant: {v!r}")

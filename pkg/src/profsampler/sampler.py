"""The profile sampler: random-walk Metropolis on pl(theta) * prior(theta)."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

ACCEPT_WARN_BAND = (0.05, 0.95)


@dataclass(frozen=True)
class Prior:
    """Prior on theta: ``flat`` (Lebesgue, log-density 0) or ``normal``."""

    kind: str = "flat"
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.kind not in ("flat", "normal"):
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind == "normal" and not self.sd > 0:
            raise ValueError("normal prior needs sd > 0")

    @classmethod
    def parse(cls, text: str) -> "Prior":
        """Parse ``flat`` or ``normal:MEAN:SD``."""
        parts = text.strip().split(":")
        if parts == ["flat"]:
            return cls()
        if parts[0] == "normal" and len(parts) == 3:
            try:
                return cls("normal", float(parts[1]), float(parts[2]))
            except ValueError:
                pass
        raise ValueError(f"prior must be 'flat' or 'normal:MEAN:SD', got {text!r}")

    def log_density(self, theta: float) -> float:
        if self.kind == "flat":
            return 0.0
        r = (theta - self.mean) / self.sd
        return -0.5 * r * r - math.log(self.sd) - 0.5 * math.log(2 * math.pi)

    def __str__(self):
        return "flat" if self.kind == "flat" else f"normal:{self.mean:g}:{self.sd:g}"


def log_posterior(logpl: Callable[[float], float], prior: Prior) -> Callable[[float], float]:
    """Unnormalized log posterior profile density."""
    if prior.kind == "flat":
        return logpl
    return lambda theta: logpl(theta) + prior.log_density(theta)


@dataclass(frozen=True)
class ChainConfig:
    length: int = 5000
    burn_in: int = 1000
    init: float | None = None
    proposal_sd: Union[float, str] = "auto"
    target_accept: tuple[float, float] = (0.20, 0.40)
    seed: int = 0
    thin: int = 1
    pilot_steps: int = 200

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("length must be positive")
        if not 0 <= self.burn_in < self.length:
            raise ValueError("need 0 <= burn_in < length")
        if self.thin < 1:
            raise ValueError("thin must be positive")
        if self.proposal_sd != "auto" and not float(self.proposal_sd) > 0:
            raise ValueError("proposal_sd must be positive or 'auto'")
        lo, hi = self.target_accept
        if not 0 < lo < hi < 1:
            raise ValueError("target_accept must be an interval inside (0, 1)")

    @property
    def n_draws(self) -> int:
        return (self.length - self.burn_in) // self.thin


@dataclass
class Chain:
    """Retained draws and bookkeeping of one Metropolis run.

    ``accept_rate`` covers the post-burn-in steps only, where the proposal
    kernel is fixed.
    """

    draws: np.ndarray
    accept_rate: float
    proposal_sd_used: float
    seed: int
    n_accepted: int
    n_proposed: int
    warnings: list[str] = field(default_factory=list)
    adaptation: list[tuple[float, float]] = field(default_factory=list)

    def __len__(self):
        return self.draws.size

    def to_csv(self, path) -> None:
        """Write the draws as a one-column CSV with header ``theta``."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("theta\n")
            for x in self.draws:
                fh.write(f"{x:.17g}\n")


def _initial_scale(logpost, x0, f0):
    # 2.4 / sqrt(-d2 logpost) from a crude central second difference
    h = 1e-3 * (1.0 + abs(x0))
    try:
        curv = (logpost(x0 + h) - 2.0 * f0 + logpost(x0 - h)) / (h * h)
    except (ArithmeticError, ValueError):
        return 1.0
    if not math.isfinite(curv) or curv >= 0:
        return 1.0
    return 2.4 / math.sqrt(-curv)


def run_chain(logpost: Callable[[float], float], cfg: ChainConfig) -> Chain:
    """Random-walk Metropolis with normal increments.

    With ``proposal_sd="auto"`` the burn-in is split into pilot phases of
    ``cfg.pilot_steps`` steps. After a phase whose acceptance is above
    (below) ``cfg.target_accept`` the proposal sd is multiplied by 2 (0.5);
    once the direction reverses the factor drops to its square root, and
    adaptation stops for good after the first phase that lands in the band.
    Nothing adapts after burn-in.

    Raises
    ------
    ValueError
        If ``logpost`` is not finite at the initial value.
    """
    x = 0.0 if cfg.init is None else float(cfg.init)
    fx = float(logpost(x))
    if not math.isfinite(fx):
        raise ValueError(f"log posterior is not finite at the initial value {x}")

    rng = np.random.default_rng(cfg.seed)
    steps = rng.standard_normal(cfg.length)
    log_u = np.log(rng.random(cfg.length))

    adaptive = cfg.proposal_sd == "auto"
    sd = _initial_scale(logpost, x, fx) if adaptive else float(cfg.proposal_sd)
    lo, hi = cfg.target_accept
    factor, last_dir = 2.0, 0
    adaptation = []

    states = np.empty(cfg.length)
    phase_acc = 0
    post_acc = 0
    for i in range(cfg.length):
        prop = x + sd * steps[i]
        fp = logpost(prop)
        # NaN and -inf proposals are rejected by the comparison
        if log_u[i] < fp - fx:
            x, fx = prop, fp
            if i >= cfg.burn_in:
                post_acc += 1
            else:
                phase_acc += 1
        states[i] = x
        if adaptive and i < cfg.burn_in and (i + 1) % cfg.pilot_steps == 0:
            rate = phase_acc / cfg.pilot_steps
            adaptation.append((sd, rate))
            phase_acc = 0
            direction = 1 if rate > hi else (-1 if rate < lo else 0)
            if direction == 0:
                adaptive = False
            else:
                if last_dir and direction != last_dir:
                    factor = math.sqrt(factor)
                sd = sd * factor if direction > 0 else sd / factor
                last_dir = direction

    n_post = cfg.length - cfg.burn_in
    start = cfg.burn_in + cfg.thin - 1
    draws = states[start::cfg.thin][:cfg.n_draws].copy()
    rate = post_acc / n_post
    notes = []
    if not ACCEPT_WARN_BAND[0] <= rate <= ACCEPT_WARN_BAND[1]:
        msg = f"acceptance rate {rate:.3f} outside {ACCEPT_WARN_BAND} after adaptation"
        notes.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return Chain(draws, rate, sd, cfg.seed, post_acc, n_post, notes, adaptation)


@dataclass(frozen=True)
class ChainSummary:
    """Posterior summaries of a chain.

    Quantiles interpolate linearly between order statistics: with sorted
    draws ``x[0..m-1]`` the ``alpha`` quantile sits at position
    ``h = (m - 1) * alpha`` and equals ``x[floor h] + (h - floor h) *
    (x[floor h + 1] - x[floor h])`` (Hyndman-Fan type 7).
    """

    mean: float
    variance: float
    median: float
    info_from_variance: float
    n: int
    sorted_draws: np.ndarray = field(repr=False)

    def quantile(self, alpha: float) -> float:
        return _quantile(self.sorted_draws, alpha)

    @property
    def se(self) -> float:
        """sqrt(n) times the posterior standard deviation."""
        return math.sqrt(self.n * self.variance)


MIN_DRAWS = 100


class TooFewDrawsError(ValueError):
    pass


def _quantile(sorted_draws: np.ndarray, alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return float(np.quantile(sorted_draws, alpha, method="linear"))


def summarize(chain: Chain, n: int) -> ChainSummary:
    """Mean, unbiased variance, median and ``1 / (n * variance)``.

    Raises
    ------
    TooFewDrawsError
        With fewer than 100 retained draws.
    """
    draws = np.asarray(chain.draws if isinstance(chain, Chain) else chain, dtype=np.float64)
    if draws.size < MIN_DRAWS:
        raise TooFewDrawsError(f"need at least {MIN_DRAWS} draws, got {draws.size}")
    s = np.sort(draws)
    mean = float(np.mean(draws))
    var = float(np.var(draws, ddof=1))
    info = 1.0 / (n * var) if var > 0 else math.inf
    return ChainSummary(mean, var, _quantile(s, 0.5), info, int(n), s)


def chain_quantile(chain: Chain, alpha: float) -> float:
    """Empirical ``alpha`` quantile of the draws (type 7)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    draws = chain.draws if isinstance(chain, Chain) else np.asarray(chain)
    return _quantile(np.sort(draws), alpha)


def chain_kappa(chain: Chain, alpha: float, theta_hat: float, n: int) -> float:
    """``sqrt(n) * (quantile(alpha) - theta_hat)``."""
    return math.sqrt(n) * (chain_quantile(chain, alpha) - theta_hat)

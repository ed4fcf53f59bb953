"""Simulated right-censored Cox data with baseline cumulative hazard exp(t) - 1.

Event times are drawn by inverse transform. Given covariate ``z`` the
survival function is ``S(t) = exp(-exp(theta*z) * (exp(t) - 1))``, so with
``U ~ Uniform(0, 1]``::

    T = log(1 - exp(-theta*z) * log(U))

Censoring is ``C ~ Uniform[0, t_n]`` independent of ``T`` and ``Z``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

_MASK64 = (1 << 64) - 1
_TUNE_LO, _TUNE_HI = 1e-3, 50.0


def splitmix64(x: int) -> int:
    """SplitMix64 finalizer: one round of add-golden-gamma, xor-shift-multiply."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def mix_seed(seed: int, *keys: int) -> int:
    """Derive a 64-bit substream seed from ``seed`` and integer keys.

    Each key is folded in as ``h = splitmix64(h ^ splitmix64(key))`` starting
    from ``h = splitmix64(seed)``. Used to give every (n, replication) pair
    an independent, reproducible RNG stream.
    """
    h = splitmix64(int(seed) & _MASK64)
    for k in keys:
        h = splitmix64(h ^ splitmix64(int(k) & _MASK64))
    return h


@dataclass(frozen=True)
class CoxSimConfig:
    n: int
    censor_horizon: float
    theta_true: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        if not self.censor_horizon > 0:
            raise ValueError("censor_horizon must be positive")
        if not 0 <= self.seed <= _MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")


def draw_event_times(z, theta: float, rng: np.random.Generator) -> np.ndarray:
    """Latent event times for covariates ``z`` by inverse transform."""
    z = np.asarray(z, dtype=np.float64)
    u = 1.0 - rng.random(z.shape)  # (0, 1], keeps log finite
    return np.log1p(-np.exp(-theta * z) * np.log(u))


def _draw(n: int, theta: float, rng: np.random.Generator, reps: int | None = None):
    shape = (n,) if reps is None else (reps, n)
    z = rng.random(shape)
    t = draw_event_times(z, theta, rng)
    v = rng.random(shape)  # censoring time = horizon * v
    return z, t, v


def simulate_cox(cfg: CoxSimConfig) -> Dataset:
    """Draw one dataset; bit-identical for identical configs."""
    rng = np.random.default_rng(cfg.seed)
    z, t, v = _draw(cfg.n, cfg.theta_true, rng)
    c = cfg.censor_horizon * v
    event = t <= c
    return Dataset.from_arrays(np.where(event, t, c), event, z)


class TuningError(RuntimeError):
    pass


def tune_censor_horizon(theta_true: float, n: int, target_event_fraction: float = 0.9,
                        seed: int = 0, pilot_reps: int = 200, tol: float = 0.01) -> float:
    """Find ``t_n`` giving an average event fraction close to the target.

    The pilot draws ``pilot_reps`` datasets of size ``n`` once; bisection over
    ``[1e-3, 50]`` then reuses those draws (common random numbers), so the
    estimated fraction is exactly monotone in the horizon.

    Raises
    ------
    TuningError
        If the target cannot be bracketed or is not met within ``tol``.
    """
    if not 0.01 < target_event_fraction < 0.99 + 1e-12:
        raise ValueError("target_event_fraction must lie in (0.01, 0.99]")
    if pilot_reps < 200:
        raise ValueError("pilot_reps must be at least 200")
    rng = np.random.default_rng(seed)
    _, t, v = _draw(n, theta_true, rng, reps=pilot_reps)
    t, v = t.ravel(), v.ravel()

    def frac(h):
        return np.count_nonzero(t <= h * v) / t.size

    lo, hi = _TUNE_LO, _TUNE_HI
    f_lo, f_hi = frac(lo), frac(hi)
    if f_hi < target_event_fraction - tol or f_lo > target_event_fraction + tol:
        raise TuningError(
            f"target event fraction {target_event_fraction} not reachable for "
            f"censor horizon in [{lo}, {hi}] (fractions {f_lo:.4f}..{f_hi:.4f})")
    if f_hi < target_event_fraction:
        return hi
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if frac(mid) < target_event_fraction:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * hi:
            break
    # the step function may jump past the target; keep the closer side
    best = min((lo, hi), key=lambda h: abs(frac(h) - target_event_fraction))
    if abs(frac(best) - target_event_fraction) > tol:
        raise TuningError("bisection did not reach the requested tolerance")
    return best


def pilot_event_fraction(theta_true: float, n: int, censor_horizon: float,
                         seed: int = 0, pilot_reps: int = 200) -> float:
    """Monte Carlo event fraction at a given horizon, same draws as tuning."""
    rng = np.random.default_rng(seed)
    _, t, v = _draw(n, theta_true, rng, reps=pilot_reps)
    return float(np.count_nonzero(t <= censor_horizon * v) / t.size)

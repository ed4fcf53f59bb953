"""Cox proportional hazards profile (partial) likelihood for a scalar covariate.

For a fixed coefficient the baseline cumulative hazard profiles out in closed
form (the Breslow estimator), leaving the partial likelihood

    log pl(theta) = sum over events i of
                    theta * z_i - log sum_{j: Y_j >= t_i} exp(theta * z_j)

Risk-set sums come from one reverse cumulative sum over the time-sorted data,
so every evaluation is O(n). Tied event times share a risk set (Breslow ties).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, event_count, sort_by_time

MAX_NEWTON_ITER = 100
DIVERGENCE_BOUND = 50.0


class IdentifiabilityError(ValueError):
    """The partial likelihood carries no information about theta."""


class MonotoneLikelihoodError(ArithmeticError):
    """Newton iterates ran off to infinity (maximum at the boundary)."""


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous nondecreasing step function starting at 0."""

    jump_times: np.ndarray
    jump_sizes: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.jump_times) <= 0):
            raise ValueError("jump times must be strictly ascending")
        if np.any(self.jump_sizes <= 0):
            raise ValueError("jump sizes must be positive")

    @property
    def values(self) -> np.ndarray:
        """Cumulative value just after each jump."""
        return np.cumsum(self.jump_sizes)

    def __call__(self, t):
        idx = np.searchsorted(self.jump_times, t, side="right")
        cum = np.concatenate(([0.0], self.values))
        out = cum[idx]
        return float(out) if np.ndim(out) == 0 else out


class CoxProfile:
    """Cox partial likelihood of a (sorted) dataset.

    Parameters
    ----------
    data : Dataset
        Sorted on construction if it is not already.

    Raises
    ------
    ValueError
        If the dataset has no events.
    """

    def __init__(self, data: Dataset):
        data = sort_by_time(data)
        if event_count(data) == 0:
            raise ValueError("at least one event is required")
        self.data = data
        self.n = data.n
        self.n_events = event_count(data)
        # log pl is unchanged by shifting z; center at the midrange for conditioning
        self._zcenter = 0.5 * (data.z.min() + data.z.max())
        self._z = data.z - self._zcenter
        self._ev_idx = np.flatnonzero(data.event)
        # first sorted position whose time equals the event time: R_i starts there
        self._risk_start = np.searchsorted(data.time, data.time[self._ev_idx], side="left")
        self._z_ev_sum = float(self._z[self._ev_idx].sum())
        self._zmin = float(self._z.min())
        self._zmax = float(self._z.max())

    def _weights(self, theta: float):
        # exp(theta*z - shift) with shift = max_j theta*z_j, so every weight <= 1
        shift = theta * (self._zmax if theta >= 0 else self._zmin)
        return np.exp(theta * self._z - shift), shift

    def _risk_sums(self, values: np.ndarray) -> np.ndarray:
        rev = np.cumsum(values[::-1])[::-1]
        return rev[self._risk_start]

    def log_profile_lik(self, theta: float) -> float:
        theta = float(theta)
        w, shift = self._weights(theta)
        s0 = self._risk_sums(w)
        with np.errstate(divide="ignore"):
            log_s0 = np.log(s0)
        return theta * self._z_ev_sum - float(np.sum(log_s0)) - self.n_events * shift

    __call__ = log_profile_lik

    def score_and_curvature(self, theta: float) -> tuple[float, float]:
        """First and second derivatives of the log partial likelihood."""
        theta = float(theta)
        w, _ = self._weights(theta)
        s0 = self._risk_sums(w)
        zbar = self._risk_sums(w * self._z) / s0
        z2bar = self._risk_sums(w * self._z ** 2) / s0
        score = self._z_ev_sum - float(zbar.sum())
        var = np.maximum(z2bar - zbar ** 2, 0.0)
        return score, -float(var.sum())

    def _flat(self) -> bool:
        # constant in theta iff the covariate is constant over every risk set
        zmax_from = np.maximum.accumulate(self._z[::-1])[::-1]
        zmin_from = np.minimum.accumulate(self._z[::-1])[::-1]
        spread = zmax_from[self._risk_start] - zmin_from[self._risk_start]
        return bool(np.all(spread == 0))

    def mle(self, tol: float = 1e-10) -> float:
        """Maximize the partial likelihood by safeguarded Newton from 0.

        A Newton step is halved until the log-likelihood does not decrease.

        Raises
        ------
        IdentifiabilityError
            If the likelihood is constant in theta.
        MonotoneLikelihoodError
            If the iterates leave ``[-50, 50]``.
        """
        if self._flat():
            raise IdentifiabilityError("likelihood constant in theta")
        theta = 0.0
        ll = self.log_profile_lik(theta)
        for _ in range(MAX_NEWTON_ITER):
            score, curv = self.score_and_curvature(theta)
            if curv == 0.0:
                # not flat (checked above), so the risk-set weights underflowed
                raise MonotoneLikelihoodError(
                    f"curvature vanished at theta={theta:.4g}: monotone likelihood")
            step = -score / curv
            # a tiny score alone is not enough: in a monotone tail it decays
            # exponentially while the Newton step stays of order one
            if abs(score) < tol and abs(step) < 1e-6:
                break
            for _ in range(60):
                cand = theta + step
                ll_cand = self.log_profile_lik(cand)
                if ll_cand >= ll - 1e-12 * max(1.0, abs(ll)):
                    break
                step *= 0.5
            theta, ll = cand, ll_cand
            if abs(theta) > DIVERGENCE_BOUND:
                raise MonotoneLikelihoodError(
                    "Newton iterates diverged (|theta| > 50): monotone likelihood")
        score, _ = self.score_and_curvature(theta)
        if abs(score) >= 1e-8:
            raise ArithmeticError(f"Newton did not converge (score {score:.3g})")
        return theta

    def breslow(self, theta: float) -> StepFunction:
        """Breslow estimator of the baseline cumulative hazard at ``theta``."""
        theta = float(theta)
        w, shift = self._weights(theta)
        # per-event jump 1 / sum_{R_i} exp(theta z_j), undoing shift and centering
        jumps = np.exp(-shift - theta * self._zcenter) / self._risk_sums(w)
        t_ev = self.data.time[self._ev_idx]
        times, inverse = np.unique(t_ev, return_inverse=True)
        sizes = np.bincount(inverse, weights=jumps, minlength=times.size)
        return StepFunction(times, sizes)

"""Proportional odds model for right-censored data, profiled over the odds function.

The conditional survival satisfies ``-logit S(t | z) = log eta(t) + z*theta``
with ``eta`` nondecreasing. Restricting ``eta`` to a step function with jumps
``s_1..s_l`` at the distinct event times gives the per-subject likelihood

    event:     exp(-z theta) s{y} / ((eta(y) + exp(-z theta)) (eta(y-) + exp(-z theta)))
    censored:  exp(-z theta) / (eta(y) + exp(-z theta))

and ``log pl(theta)`` is its maximum over the jumps. The inner problem is
solved in ``u = log s`` by damped Newton iterations with backtracking; each
gradient/Hessian evaluation only needs reverse cumulative sums over the
event-time grid.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import linalg, optimize

from .data import Dataset, event_count, sort_by_time

LOG_JUMP_LIMIT = 30.0
MAX_NEWTON_STEP = 5.0


class DegenerateNPMLEError(ArithmeticError):
    """The inner supremum is not attained (a jump diverges)."""


class PoProfile:
    """Profile likelihood of the proportional odds model.

    Parameters
    ----------
    data : Dataset
        Sorted on construction. Tied event times share one jump.
    inner_tol : float
        Convergence threshold on the max-norm of the gradient in log-jumps.
    inner_max_iter : int
        Newton iteration cap for one inner maximization.

    Notes
    -----
    An instance keeps the last inner solution to warm-start the next call of
    :meth:`log_profile_lik`; do not share one instance between threads.
    """

    def __init__(self, data: Dataset, inner_tol: float = 1e-8, inner_max_iter: int = 500):
        data = sort_by_time(data)
        if event_count(data) == 0:
            raise ValueError("at least one event is required")
        self.data = data
        self.n = data.n
        self.n_events = event_count(data)
        self.inner_tol = inner_tol
        self.inner_max_iter = inner_max_iter

        y, ev = data.time, data.event
        self.event_times, self._d = np.unique(y[ev], return_counts=True)
        self.n_jumps = self.event_times.size
        # number of jumps at or before / strictly before each y_i
        self._k_le = np.searchsorted(self.event_times, y, side="right")
        self._k_lt = np.searchsorted(self.event_times, y, side="left")
        self._ev = ev
        self._k_lt_ev = self._k_lt[ev]
        # without a censoring at or after the last event time the last jump
        # can grow without bound and the supremum is not attained
        self.degenerate = not np.any(~ev & (y >= self.event_times[-1]))
        self._warm: np.ndarray | None = None
        self.last_grad_norm = math.nan
        self.last_iterations = 0

    def initial_log_jumps(self) -> np.ndarray:
        """Nelson-Aalen style start: events over number at risk."""
        at_risk = self.n - np.searchsorted(self.data.time, self.event_times, side="left")
        return np.log(self._d / at_risk)

    # cumulative eta at y_i and y_i- for every subject
    def _eta(self, s: np.ndarray):
        cum = np.concatenate(([0.0], np.cumsum(s)))
        return cum[self._k_le], cum[self._k_lt_ev]

    def loglik(self, theta: float, jumps) -> float:
        """Full log-likelihood at ``theta`` for jump sizes ``jumps``.

        Raises
        ------
        ValueError
            If any jump is not strictly positive or the length is wrong.
        """
        s = np.asarray(jumps, dtype=np.float64)
        if s.shape != (self.n_jumps,):
            raise ValueError(f"expected {self.n_jumps} jumps, got shape {s.shape}")
        if not np.all(s > 0):
            raise ValueError("jump sizes must be strictly positive")
        return self._loglik_u(float(theta), np.log(s), s)

    def _loglik_u(self, theta, u, s=None):
        if s is None:
            s = np.exp(u)
        e = np.exp(-self.data.z * theta)
        h, h_minus = self._eta(s)
        return (float(np.dot(self._d, u)) - theta * float(self.data.z.sum())
                - float(np.sum(np.log(h + e)))
                - float(np.sum(np.log(h_minus + e[self._ev]))))

    def _rev_bins(self, idx, weights):
        # out[k] = sum of weights with idx > k, for k = 0..l-1 (jump k is jump k+1 in 1-based)
        b = np.bincount(idx, weights=weights, minlength=self.n_jumps + 1)
        return np.cumsum(b[::-1])[::-1][1:]

    def gradient(self, theta: float, u: np.ndarray) -> np.ndarray:
        """Gradient of the log-likelihood with respect to the log-jumps."""
        return self._grad_hess(float(theta), np.asarray(u, dtype=np.float64), hess=False)[0]

    def _grad_hess(self, theta, u, hess=True):
        s = np.exp(u)
        e = np.exp(-self.data.z * theta)
        h, h_minus = self._eta(s)
        a = 1.0 / (h + e)
        b = 1.0 / (h_minus + e[self._ev])
        ab = self._rev_bins(self._k_le, a) + self._rev_bins(self._k_lt_ev, b)
        g = self._d - s * ab
        if not hess:
            return g, None
        cd = self._rev_bins(self._k_le, a * a) + self._rev_bins(self._k_lt_ev, b * b)
        idx = np.arange(self.n_jumps)
        H = np.outer(s, s) * cd[np.maximum.outer(idx, idx)]
        H[idx, idx] -= s * ab
        return g, H

    def profile_inner(self, theta: float, init=None) -> tuple[float, np.ndarray]:
        """Maximize over the jumps at fixed ``theta``.

        Parameters
        ----------
        theta : float
        init : array_like, optional
            Starting log-jumps; defaults to :meth:`initial_log_jumps`.

        Returns
        -------
        value : float
            ``log pl(theta)``.
        jumps : ndarray
            The maximizing jump sizes.

        Raises
        ------
        DegenerateNPMLEError
            If no censored observation lies at or after the last event time,
            if a log-jump exceeds 30, or if the iteration cap is hit.
        """
        theta = float(theta)
        if self.degenerate:
            raise DegenerateNPMLEError(
                "degenerate NPMLE: no censored observation at or after the last event time")
        u = self.initial_log_jumps() if init is None else np.array(init, dtype=np.float64)
        f = self._loglik_u(theta, u)
        for it in range(1, self.inner_max_iter + 1):
            g, H = self._grad_hess(theta, u)
            gnorm = float(np.max(np.abs(g)))
            if gnorm < self.inner_tol:
                self.last_grad_norm, self.last_iterations = gnorm, it - 1
                return f, np.exp(u)
            step = _ascent_direction(g, H)
            big = np.max(np.abs(step))
            if big > MAX_NEWTON_STEP:
                step *= MAX_NEWTON_STEP / big
            t = 1.0
            slope = float(g @ step)
            # near the optimum the Armijo gain drops below rounding error in f
            slack = 1e-13 * max(1.0, abs(f))
            while True:
                u_new = u + t * step
                f_new = self._loglik_u(theta, u_new)
                if f_new >= f + 1e-4 * t * slope - slack or t < 1e-10:
                    break
                t *= 0.5
            if t < 1e-10 and f_new < f:
                # no progress along the direction; fall back to a plain gradient step
                u_new = u + 1e-3 * g / max(gnorm, 1.0)
                f_new = self._loglik_u(theta, u_new)
            u, f = u_new, f_new
            if np.max(u) > LOG_JUMP_LIMIT:
                raise DegenerateNPMLEError(
                    f"degenerate NPMLE at theta={theta:.6g}: a jump diverges beyond e^30")
        raise DegenerateNPMLEError(
            f"degenerate NPMLE at theta={theta:.6g}: no convergence in "
            f"{self.inner_max_iter} iterations")

    def log_profile_lik(self, theta: float) -> float:
        """``log pl(theta)``, warm-started from the previous solution."""
        value, jumps = self.profile_inner(theta, init=self._warm)
        self._warm = np.log(jumps)
        return value

    __call__ = log_profile_lik

    def mle(self, lo: float = -10.0, hi: float = 10.0, grid_points: int = 41) -> float:
        """Maximize the profile likelihood over theta.

        A coarse grid over ``[lo, hi]`` brackets the maximum, then a bounded
        golden-section/parabolic search refines it.

        Raises
        ------
        ArithmeticError
            If the grid maximum sits on an end of ``[lo, hi]``.
        DegenerateNPMLEError
            Propagated from the inner maximization.
        """
        grid = np.linspace(lo, hi, grid_points)
        mid = int(np.argmin(np.abs(grid)))
        values = np.empty_like(grid)
        # walk outwards from zero so warm starts follow a continuous path
        self._warm = None
        for i in range(mid, grid.size):
            values[i] = self.log_profile_lik(grid[i])
        self._warm = None
        for i in range(mid - 1, -1, -1):
            values[i] = self.log_profile_lik(grid[i])
        k = int(np.argmax(values))
        if k == 0 or k == grid.size - 1:
            raise ArithmeticError(f"no maximum bracketed in [{lo}, {hi}]")
        self._warm = None
        self.log_profile_lik(grid[k])
        res = optimize.minimize_scalar(lambda t: -self.log_profile_lik(t),
                                       bounds=(grid[k - 1], grid[k + 1]),
                                       method="bounded", options={"xatol": 1e-10})
        return float(res.x)


def _ascent_direction(g, H):
    """Newton direction for maximization, Levenberg-damped if H is not negative definite."""
    A = -H
    lam = 0.0
    scale = max(1.0, float(np.max(np.abs(np.diag(A)))))
    for _ in range(60):
        try:
            c = linalg.cho_factor(A + lam * np.eye(A.shape[0]), check_finite=False)
            return linalg.cho_solve(c, g, check_finite=False)
        except linalg.LinAlgError:
            lam = 1e-8 * scale if lam == 0.0 else lam * 10.0
    return g.copy()

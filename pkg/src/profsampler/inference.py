"""Information estimates and interval estimates for theta.

Two routes are compared throughout:

* numeric: the observed profile information from a discretized second
  derivative of ``log pl`` at the MLE, and the Wald interval built from it;
* mcmc: the inverse scaled variance of profile-sampler draws and the
  equal-tailed credible interval from their quantiles.

Standard errors are reported on the ``sqrt(n)`` scale, ``se = 1/sqrt(info)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from scipy.special import ndtri

from .sampler import (Chain, ChainConfig, ChainSummary, Prior, chain_quantile,
                      log_posterior, run_chain, summarize, MIN_DRAWS, TooFewDrawsError)


class NegativeCurvatureError(ArithmeticError):
    pass


def auto_step(n: int, c: float = 1.0) -> float:
    return c / math.sqrt(n)


def discretized_information(logpl: Callable[[float], float], theta_hat: float, n: int,
                            step="auto", *, symmetric: bool = False, c: float = 1.0,
                            logpl_hat: float | None = None) -> float:
    """Observed profile information from a discretized second derivative.

    One-sided (default)::

        I = -2 * (logpl(theta_hat + s) - logpl(theta_hat)) / (n * s**2)

    Symmetric::

        I = -(logpl(theta_hat + s) + logpl(theta_hat - s) - 2 logpl(theta_hat)) / (n * s**2)

    Parameters
    ----------
    logpl : callable
        Log profile likelihood.
    theta_hat : float
        Its maximizer.
    n : int
        Sample size.
    step : float or "auto"
        ``"auto"`` means ``s = c / sqrt(n)``.
    symmetric : bool
        Use the central difference.
    c : float
        Step constant for ``"auto"``.
    logpl_hat : float, optional
        ``logpl(theta_hat)`` if already known.

    Raises
    ------
    NegativeCurvatureError
        If the estimate is not positive.
    """
    s = auto_step(n, c) if step == "auto" else float(step)
    if not s > 0:
        raise ValueError("step must be positive")
    f0 = logpl(theta_hat) if logpl_hat is None else logpl_hat
    if symmetric:
        num = logpl(theta_hat + s) + logpl(theta_hat - s) - 2.0 * f0
    else:
        num = 2.0 * (logpl(theta_hat + s) - f0)
    info = -num / (n * s * s)
    if not info > 0:
        raise NegativeCurvatureError(
            f"negative curvature estimate ({info:.4g}); theta_hat is not a maximizer "
            "or the step is too large")
    return info


def normal_quantile(p: float) -> float:
    return float(ndtri(p))


def wald_interval(theta_hat: float, info: float, n: int, alpha: float = 0.05) -> tuple[float, float]:
    """``theta_hat -/+ z_{1-alpha/2} / sqrt(n * info)``."""
    if not info > 0:
        raise ValueError("info must be positive")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    half = normal_quantile(1.0 - alpha / 2.0) / math.sqrt(n * info)
    return theta_hat - half, theta_hat + half


def credible_interval(chain: Chain, alpha: float = 0.05) -> tuple[float, float]:
    """Equal-tailed interval ``(q(alpha/2), q(1 - alpha/2))`` of the draws."""
    if len(chain) < MIN_DRAWS:
        raise TooFewDrawsError(f"need at least {MIN_DRAWS} draws, got {len(chain)}")
    return chain_quantile(chain, alpha / 2.0), chain_quantile(chain, 1.0 - alpha / 2.0)


@dataclass
class FitResult:
    theta_hat: float
    n: int
    n_events: int
    info_numeric: float
    step: float
    se_numeric: float
    info_mcmc: float | None = None
    se_mcmc: float | None = None
    chain_summary: ChainSummary | None = None
    accept_rate: float | None = None
    proposal_sd: float | None = None
    seed: int | None = None
    # alpha -> route ("wald" / "mcmc") -> (lower, upper)
    intervals: dict[float, dict[str, tuple[float, float]]] = field(default_factory=dict)
    chain: Chain | None = field(default=None, repr=False)

    def as_dict(self) -> dict[str, object]:
        out: dict[str, object] = {
            "theta_hat": self.theta_hat,
            "n": self.n,
            "n_events": self.n_events,
            "step": self.step,
            "info_numeric": self.info_numeric,
            "se_numeric": self.se_numeric,
        }
        if self.chain_summary is not None:
            out.update({
                "info_mcmc": self.info_mcmc,
                "se_mcmc": self.se_mcmc,
                "chain_mean": self.chain_summary.mean,
                "chain_median": self.chain_summary.median,
                "chain_variance": self.chain_summary.variance,
                "accept_rate": self.accept_rate,
                "proposal_sd": self.proposal_sd,
            })
        for alpha in sorted(self.intervals):
            level = _level_tag(alpha)
            for route in ("wald", "mcmc"):
                if route in self.intervals[alpha]:
                    lo, hi = self.intervals[alpha][route]
                    out[f"{route}_lower_{level}"] = lo
                    out[f"{route}_upper_{level}"] = hi
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    def to_text(self) -> str:
        """Flat ``key = value`` block, one pair per line."""
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.as_dict().items())

    def csv_header(self) -> str:
        return ",".join(self.as_dict())

    def csv_row(self) -> str:
        return ",".join(_fmt(v) for v in self.as_dict().values())


def _level_tag(alpha: float) -> str:
    return f"{100 * (1 - alpha):g}".replace(".", "p")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def fit(model, *, chain_cfg: ChainConfig | None = None, prior: Prior = Prior(),
        alphas: Sequence[float] = (0.05,), step="auto", step_constant: float = 1.0,
        symmetric: bool = False, theta_hat: float | None = None) -> FitResult:
    """MLE, numeric information and Wald intervals; with ``chain_cfg`` also
    runs the profile sampler from the MLE and adds the MCMC route.

    ``model`` needs ``log_profile_lik``, ``mle``, ``n`` and ``n_events``.
    """
    n = model.n
    if theta_hat is None:
        theta_hat = model.mle()
    f_hat = model.log_profile_lik(theta_hat)
    s = auto_step(n, step_constant) if step == "auto" else float(step)
    info_n = discretized_information(model.log_profile_lik, theta_hat, n, s,
                                     symmetric=symmetric, logpl_hat=f_hat)
    res = FitResult(theta_hat=theta_hat, n=n, n_events=model.n_events,
                    info_numeric=info_n, step=s, se_numeric=1.0 / math.sqrt(info_n))
    for a in alphas:
        res.intervals[a] = {"wald": wald_interval(theta_hat, info_n, n, a)}
    if chain_cfg is None:
        return res
    if chain_cfg.init is None:
        chain_cfg = replace(chain_cfg, init=theta_hat)
    chain = run_chain(log_posterior(model.log_profile_lik, prior), chain_cfg)
    summary = summarize(chain, n)
    res.chain_summary = summary
    res.info_mcmc = summary.info_from_variance
    res.se_mcmc = summary.se
    res.accept_rate = chain.accept_rate
    res.proposal_sd = chain.proposal_sd_used
    res.seed = chain_cfg.seed
    res.chain = chain
    for a in alphas:
        res.intervals[a]["mcmc"] = credible_interval(chain, a)
    return res


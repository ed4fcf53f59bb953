"""Monte Carlo study of the profile sampler for Cox regression.

For each sample size the censoring horizon is tuned once so that about 90%
of subjects have an observed event; each replication then simulates a
dataset, fits the MLE, runs the profile sampler from it and compares the
MCMC route (chain mean, chain variance, credible interval) with the numeric
route (MLE, discretized information, Wald interval).

Replication ``r`` at sample size ``n`` draws its data from
``mix_seed(seed, n, r, 0)`` and its chain from ``mix_seed(seed, n, r, 1)``;
results are folded in replication order, so they do not depend on the
number of worker processes.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .cox import CoxProfile
from .data import event_count
from .inference import fit
from .sampler import ChainConfig, Prior
from .simulate import CoxSimConfig, mix_seed, simulate_cox, tune_censor_horizon

TUNE_KEY = 0x7475_6E65  # "tune"
MAX_FAILURE_FRACTION = 0.05

TABLE1_HEADER = "n,MLE,CM,rmsd_E,SE_M,SE_N,rmsd_V,CP95"
TABLE2_HEADER = "n,n_absdiff_est,sqrtn_absdiff_se,n_absdiff_lb,n_absdiff_ub"
EXTENDED_HEADER = ("n,reps,n_ok,n_failed,censor_horizon,event_fraction,accept_rate,"
                   "CP95_wald,LB_M,LB_N,UB_M,UB_N")


class StudyAbortedError(RuntimeError):
    pass


@dataclass(frozen=True)
class ReplicationResult:
    rep: int
    ok: bool
    error: str = ""
    theta_hat: float = math.nan
    cm: float = math.nan
    se_m: float = math.nan
    se_n: float = math.nan
    lb_m: float = math.nan
    ub_m: float = math.nan
    lb_n: float = math.nan
    ub_n: float = math.nan
    event_fraction: float = math.nan
    accept_rate: float = math.nan

    def covers(self, theta: float, route: str = "mcmc") -> bool:
        lo, hi = (self.lb_m, self.ub_m) if route == "mcmc" else (self.lb_n, self.ub_n)
        return lo <= theta <= hi


@dataclass(frozen=True)
class SimSummary:
    """Aggregates over the successful replications at one sample size.

    ``n_absdiff_*`` and ``sqrtn_absdiff_se`` compare route averages, e.g.
    ``n_absdiff_est = n * |mean(MLE) - mean(CM)|``.
    """

    n: int
    reps: int
    n_ok: int
    n_failed: int
    censor_horizon: float
    mle_mean: float
    cm_mean: float
    rmsd_e: float
    se_m_mean: float
    se_n_mean: float
    rmsd_v: float
    cp95: float
    cp95_wald: float
    lb_m_mean: float
    lb_n_mean: float
    ub_m_mean: float
    ub_n_mean: float
    event_fraction: float
    accept_rate: float

    @property
    def n_absdiff_est(self) -> float:
        return self.n * abs(self.mle_mean - self.cm_mean)

    @property
    def sqrtn_absdiff_se(self) -> float:
        return math.sqrt(self.n) * abs(self.se_m_mean - self.se_n_mean)

    @property
    def n_absdiff_lb(self) -> float:
        return self.n * abs(self.lb_m_mean - self.lb_n_mean)

    @property
    def n_absdiff_ub(self) -> float:
        return self.n * abs(self.ub_m_mean - self.ub_n_mean)

    @property
    def scaled(self) -> dict[str, float]:
        return {"n_absdiff_est": self.n_absdiff_est,
                "sqrtn_absdiff_se": self.sqrtn_absdiff_se,
                "n_absdiff_lb": self.n_absdiff_lb,
                "n_absdiff_ub": self.n_absdiff_ub}


def run_replication(n: int, rep: int, censor_horizon: float, theta_true: float,
                    chain_cfg: ChainConfig, seed: int, prior: Prior = Prior(),
                    step="auto", alpha: float = 0.05) -> ReplicationResult:
    """One simulate-fit-sample cycle; fitting failures are returned, not raised."""
    data = simulate_cox(CoxSimConfig(n=n, censor_horizon=censor_horizon,
                                     theta_true=theta_true, seed=mix_seed(seed, n, rep, 0)))
    cfg = replace(chain_cfg, seed=mix_seed(seed, n, rep, 1), init=None)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = fit(CoxProfile(data), chain_cfg=cfg, prior=prior, alphas=(alpha,), step=step)
    except (ArithmeticError, ValueError) as exc:
        return ReplicationResult(rep, False, f"{type(exc).__name__}: {exc}")
    lb_m, ub_m = res.intervals[alpha]["mcmc"]
    lb_n, ub_n = res.intervals[alpha]["wald"]
    return ReplicationResult(
        rep, True, "", res.theta_hat, res.chain_summary.mean, res.se_mcmc, res.se_numeric,
        lb_m, ub_m, lb_n, ub_n, event_count(data) / n, res.accept_rate)


def _replication_task(args):
    return run_replication(*args)


def aggregate(n: int, censor_horizon: float, theta_true: float,
              results: Sequence[ReplicationResult]) -> SimSummary:
    ok = [r for r in sorted(results, key=lambda r: r.rep) if r.ok]
    if not ok:
        raise StudyAbortedError(f"every replication failed at n={n}")

    def col(name):
        return np.array([getattr(r, name) for r in ok])

    mle, cm, se_m, se_n = col("theta_hat"), col("cm"), col("se_m"), col("se_n")
    return SimSummary(
        n=n, reps=len(results), n_ok=len(ok), n_failed=len(results) - len(ok),
        censor_horizon=censor_horizon,
        mle_mean=float(mle.mean()), cm_mean=float(cm.mean()),
        rmsd_e=float(np.sqrt(np.mean((mle - cm) ** 2))),
        se_m_mean=float(se_m.mean()), se_n_mean=float(se_n.mean()),
        rmsd_v=float(np.sqrt(np.mean((se_m - se_n) ** 2))),
        cp95=float(np.mean([r.covers(theta_true, "mcmc") for r in ok])),
        cp95_wald=float(np.mean([r.covers(theta_true, "wald") for r in ok])),
        lb_m_mean=float(col("lb_m").mean()), lb_n_mean=float(col("lb_n").mean()),
        ub_m_mean=float(col("ub_m").mean()), ub_n_mean=float(col("ub_n").mean()),
        event_fraction=float(col("event_fraction").mean()),
        accept_rate=float(col("accept_rate").mean()),
    )


def run_study(ns: Sequence[int], reps: int, theta_true: float = 1.0,
              chain_cfg: ChainConfig = ChainConfig(), seed: int = 0, *,
              workers: int = 1, prior: Prior = Prior(), step="auto", alpha: float = 0.05,
              target_event_fraction: float = 0.9,
              return_replications: bool = False):
    """Run the study for every sample size in ``ns``.

    Returns a list of :class:`SimSummary` (and, with ``return_replications``,
    also a dict ``n -> list[ReplicationResult]``).

    Raises
    ------
    StudyAbortedError
        If more than 5% of the replications at some ``n`` fail.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if any(n < 10 for n in ns):
        raise ValueError("every sample size must be >= 10")
    summaries, per_n = [], {}
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for n in ns:
            t_n = tune_censor_horizon(theta_true, n, target_event_fraction,
                                      seed=mix_seed(seed, n, TUNE_KEY))
            tasks = [(n, r, t_n, theta_true, chain_cfg, seed, prior, step, alpha)
                     for r in range(reps)]
            if pool is None:
                results = [_replication_task(t) for t in tasks]
            else:
                results = list(pool.map(_replication_task, tasks,
                                        chunksize=max(1, reps // (4 * workers))))
            failed = sum(not r.ok for r in results)
            if failed > MAX_FAILURE_FRACTION * reps:
                raise StudyAbortedError(
                    f"{failed} of {reps} replications failed at n={n}: "
                    + next(r.error for r in results if not r.ok))
            summaries.append(aggregate(n, t_n, theta_true, results))
            per_n[n] = results
    finally:
        if pool is not None:
            pool.shutdown()
    return (summaries, per_n) if return_replications else summaries


def emit_tables(summaries: Sequence[SimSummary], out_dir) -> list[Path]:
    """Write ``table1.csv``, ``table2.csv`` and ``table1_extended.csv``."""
    if not summaries:
        raise ValueError("no summaries to write")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t1 = [TABLE1_HEADER] + [
        f"{s.n},{s.mle_mean:.4f},{s.cm_mean:.4f},{s.rmsd_e:.4f},{s.se_m_mean:.4f},"
        f"{s.se_n_mean:.4f},{s.rmsd_v:.4f},{s.cp95:.4f}" for s in summaries]
    t2 = [TABLE2_HEADER] + [
        f"{s.n},{s.n_absdiff_est:.4f},{s.sqrtn_absdiff_se:.4f},{s.n_absdiff_lb:.4f},"
        f"{s.n_absdiff_ub:.4f}" for s in summaries]
    ext = [EXTENDED_HEADER] + [
        f"{s.n},{s.reps},{s.n_ok},{s.n_failed},{s.censor_horizon:.4f},{s.event_fraction:.4f},"
        f"{s.accept_rate:.4f},{s.cp95_wald:.4f},{s.lb_m_mean:.4f},{s.lb_n_mean:.4f},"
        f"{s.ub_m_mean:.4f},{s.ub_n_mean:.4f}" for s in summaries]
    paths = []
    for name, lines in (("table1.csv", t1), ("table2.csv", t2), ("table1_extended.csv", ext)):
        p = out / name
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths.append(p)
    return paths


def write_manifest(path, *, seed: int, settings: dict, summaries: Sequence[SimSummary],
                   wall_time: float) -> Path:
    """Plain-text run record: seed, settings, failure counts, wall time."""
    lines = [f"seed = {seed}"]
    lines += [f"{k} = {v}" for k, v in settings.items()]
    for s in summaries:
        d = asdict(s)
        lines.append(f"n{s.n}.failures = {d['n_failed']}")
        lines.append(f"n{s.n}.censor_horizon = {d['censor_horizon']:.10g}")
    lines.append(f"wall_time_seconds = {wall_time:.3f}")
    p = Path(path)
    p.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return p

"""Independent Monte Carlo trials of a session and their aggregates."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import stats

from ..info_core import JointPmf
from .session import SimParams, measure_sum_rate, run_session, trial_params

THREADS_ENV = "BYZCODE_THREADS"


@dataclass(frozen=True)
class TrialResult:
    trial: int
    honest_error: bool
    session_error_kind: str
    sum_rate: float
    final_cover: str
    traitor_retained: bool

    def csv_row(self) -> list:
        return [self.trial, int(self.honest_error), self.session_error_kind, f"{self.sum_rate:.6f}", self.final_cover]


def worker_count(trials: int, workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(THREADS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(workers, trials))


def _one(trial: int, p: JointPmf, params: SimParams, traitors, strategy: str, q_tilde) -> TrialResult:
    rep = run_session(p, trial_params(params, trial), traitors, strategy, q_tilde)
    retained = any(s & rep.traitors for s in rep.final_cover)
    return TrialResult(trial, rep.honest_error, rep.session_error_kind, measure_sum_rate(rep),
                       rep.final_cover.label(), retained)


def run_trials(p: JointPmf, params: SimParams, trials: int, traitors=(), strategy: str = "honest",
               q_tilde: JointPmf | None = None, workers: int | None = None) -> list[TrialResult]:
    """Run ``trials`` sessions; trial ``i`` is seeded from ``(params.seed, i)``.

    Results come back in trial order whatever the worker count, so the output
    depends only on the inputs.
    """
    fn = partial(_one, p=p, params=params, traitors=frozenset(traitors), strategy=strategy, q_tilde=q_tilde)
    n = worker_count(trials, workers)
    if n == 1:
        return [fn(i) for i in range(trials)]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, range(trials), chunksize=max(1, trials // (4 * n))))


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    ci = stats.binomtest(successes, n).proportion_ci(confidence, method="wilson")
    return (float(ci.low), float(ci.high))


def mean_interval(values, confidence: float = 0.95) -> tuple[float, float]:
    x = np.asarray(values, dtype=float)
    if x.size < 2 or np.all(x == x[0]):
        m = float(x.mean()) if x.size else float("nan")
        return (m, m)
    lo, hi = stats.t.interval(confidence, x.size - 1, loc=x.mean(), scale=stats.sem(x))
    return (float(lo), float(hi))


def summarize(results: list[TrialResult]) -> dict:
    n = len(results)
    errors = sum(r.honest_error for r in results)
    rates = [r.sum_rate for r in results]
    kinds: dict[str, int] = {}
    for r in results:
        kinds[r.session_error_kind] = kinds.get(r.session_error_kind, 0) + 1
    return {
        "trials": n,
        "honest_error_rate": errors / n if n else float("nan"),
        "honest_error_ci95": list(wilson_interval(errors, n)),
        "mean_sum_rate": float(np.mean(rates)) if n else float("nan"),
        "sum_rate_ci95": list(mean_interval(rates)),
        "traitor_retained_rate": sum(r.traitor_retained for r in results) / n if n else float("nan"),
        "session_error_counts": dict(sorted(kinds.items())),
    }

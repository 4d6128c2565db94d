"""Monte Carlo ensembles of Stefan trajectories with censored statistics."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ModelConfig, StopKind
from .stefan import SimulationBlowUp, simulate

THREADS_ENV = "STEFAN_SPREAD_THREADS"
BLOWUP = "BlowUp"
SURVIVED = "None"


def worker_count(n_tasks: int | None = None) -> int:
    env = os.environ.get(THREADS_ENV, "").strip()
    n = os.cpu_count() or 1
    if env:
        try:
            n = max(1, int(env))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
    if n_tasks is not None:
        n = max(1, min(n, n_tasks))
    return n


@dataclass
class PathRecord:
    path_index: int
    spread: np.ndarray
    stop_kind: str
    stop_step: int | None
    stop_time: float | None
    triggering_value: float | None

    @property
    def n_accepted(self) -> int:
        return len(self.spread)


def _run_path(cfg: ModelConfig, p: int) -> PathRecord:
    try:
        tr = simulate(cfg, p)
    except SimulationBlowUp as exc:
        return PathRecord(p, np.empty(0), BLOWUP, exc.step_index, None, None)
    st = tr.stop
    if st is None:
        return PathRecord(p, tr.spread, SURVIVED, None, None, None)
    return PathRecord(p, tr.spread, st.kind.value, st.step_index, st.time, st.triggering_value)


@dataclass
class EnsembleSummary:
    n_paths: int
    times: np.ndarray
    n_alive: np.ndarray
    mean: np.ndarray
    q10: np.ndarray
    q50: np.ndarray
    q90: np.ndarray
    histogram: dict[str, int]
    records: list[PathRecord] = field(repr=False, default_factory=list)

    @property
    def survival(self) -> np.ndarray:
        return self.n_alive / self.n_paths

    def summary_columns(self) -> dict[str, np.ndarray]:
        return {
            "step": np.arange(len(self.times)),
            "t": self.times,
            "n_alive": self.n_alive,
            "survival": self.survival,
            "mean": self.mean,
            "q10": self.q10,
            "q50": self.q50,
            "q90": self.q90,
        }


def summarize(records: list[PathRecord], times: np.ndarray) -> EnsembleSummary:
    """Censored statistics: path ``p`` counts at ``t_j`` iff ``j`` precedes its stop."""
    n = len(records)
    nt1 = len(times)
    S = np.full((n, nt1), np.nan)
    for i, rec in enumerate(records):
        L = min(rec.n_accepted, nt1)
        S[i, :L] = rec.spread[:L]
    alive = ~np.isnan(S)
    n_alive = alive.sum(axis=0)
    mean = np.full(nt1, np.nan)
    qs = np.full((3, nt1), np.nan)
    cols = n_alive > 0
    if np.any(cols):
        sub = S[:, cols]
        mean[cols] = np.nansum(sub, axis=0) / n_alive[cols]
        qs[:, cols] = np.nanquantile(sub, [0.1, 0.5, 0.9], axis=0)
    hist = {k.value: 0 for k in StopKind}
    hist[SURVIVED] = 0
    hist[BLOWUP] = 0
    for rec in records:
        hist[rec.stop_kind] += 1
    return EnsembleSummary(n, times, n_alive, mean, qs[0], qs[1], qs[2], hist, records)


def run_ensemble(cfg: ModelConfig, n_paths: int, threads: int | None = None) -> EnsembleSummary:
    """``n_paths`` trajectories on streams ``(seed, p)``; results slot by path index."""
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    workers = worker_count(n_paths) if threads is None else max(1, min(threads, n_paths))
    slots: list[PathRecord | None] = [None] * n_paths
    if workers == 1:
        for p in range(n_paths):
            slots[p] = _run_path(cfg, p)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = {p: pool.submit(_run_path, cfg, p) for p in range(n_paths)}
            for p, fut in futs.items():
                slots[p] = fut.result()
    return summarize(slots, cfg.grid.times)

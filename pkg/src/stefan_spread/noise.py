"""Discrete space-time white noise on the fixed grid.

A Walsh white noise puts an independent ``N(0, dt*dy)`` mass on every
space-time cell.  Each path owns a Philox generator keyed by
``(seed, path_index, stream)`` so ensembles are reproducible without any
coordination between workers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .core import DomainError, GridSpec

STREAM_V1 = 1
STREAM_V2 = 2
STREAM_SHARED = 0
STREAM_MEANFIELD = 3


@dataclass(frozen=True)
class NoiseSlice:
    dW: np.ndarray
    step_index: int


def make_rng(seed: int, path_index: int = 0, stream: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(path_index), int(stream)))
    return np.random.Generator(np.random.Philox(ss))


def is_time_only(profile: Mapping[str, Any]) -> bool:
    return bool(profile.get("time_only", False))


def sample_slice(rng: np.random.Generator, grid: GridSpec, step_index: int = 0,
                 time_only: bool = False) -> NoiseSlice:
    """Draw the noise increments of one time step.

    Space-time mode gives ``ny`` independent ``N(0, dt*dy)`` values.  Time-only
    mode draws one ``N(0, dt)`` value shared by every cell.
    """
    if time_only:
        dW = np.full(grid.ny, rng.standard_normal() * np.sqrt(grid.dt))
    else:
        dW = rng.standard_normal(grid.ny) * np.sqrt(grid.dt * grid.dy)
    return NoiseSlice(dW=dW, step_index=step_index)


class NoiseStream:
    """Sequential slices for one path, drawn in blocks.

    Block draws consume the generator exactly like repeated
    :func:`sample_slice` calls, so both give identical increments.
    """

    def __init__(self, rng: np.random.Generator, grid: GridSpec, time_only: bool = False,
                 block: int = 256):
        self.rng = rng
        self.grid = grid
        self.time_only = time_only
        self.block = block
        self._buf = np.empty((0, grid.ny))
        self._pos = 0
        self.step_index = 0

    def _refill(self):
        g = self.grid
        if self.time_only:
            col = self.rng.standard_normal(self.block) * np.sqrt(g.dt)
            self._buf = np.repeat(col[:, None], g.ny, axis=1)
        else:
            self._buf = self.rng.standard_normal((self.block, g.ny)) * np.sqrt(g.dt * g.dy)
        self._pos = 0

    def next(self) -> NoiseSlice:
        if self._pos >= len(self._buf):
            self._refill()
        dW = self._buf[self._pos]
        self._pos += 1
        self.step_index += 1
        return NoiseSlice(dW=dW, step_index=self.step_index - 1)

    def path(self, nsteps: int) -> np.ndarray:
        return np.stack([self.next().dW for _ in range(nsteps)]) if nsteps else np.empty((0, self.grid.ny))


def noise_path(seed: int, grid: GridSpec, path_index: int = 0, stream: int = 0,
               time_only: bool = False) -> np.ndarray:
    """All ``nt`` slices of one stream as an ``(nt, ny)`` array."""
    return NoiseStream(make_rng(seed, path_index, stream), grid, time_only).path(grid.nt)


def sigma_values(profile: Mapping[str, Any], y, lam: float) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    kind = profile.get("kind", "sine")
    if kind == "sine":
        return float(profile.get("amplitude", 1.0)) * np.sin(np.pi * y / lam)
    if kind == "constant":
        return np.full_like(y, float(profile.get("value", 1.0)))
    raise ValueError(f"unknown sigma profile kind {kind!r}")


def sigma_at(profile: Mapping[str, Any], y, lam: float):
    """Noise diffusion ``sigma(y)``; ``y`` must lie in ``[0, lam]``."""
    arr = np.asarray(y, dtype=float)
    if np.any(arr < 0) or np.any(arr > lam):
        raise DomainError(f"y outside [0, {lam}]")
    out = sigma_values(profile, arr, lam)
    return float(out) if out.ndim == 0 else out


def check_sigma(profile: Mapping[str, Any], lam: float, grid: GridSpec) -> list[str]:
    """Boundary conditions on sigma: zero at both ends, finite slope at 0.

    A constant profile is only legal with ``relax_boundary`` set; it is meant
    for the time-only mean-field comparisons.
    """
    errs = []
    if profile.get("relax_boundary", False):
        return errs
    ends = sigma_values(profile, np.array([0.0, lam]), lam)
    if abs(ends[0]) > 1e-12 or abs(ends[1]) > 1e-12:
        errs.append(
            "sigma_profile violates sigma1 condition: sigma(0) = sigma(lambda) = 0 required "
            f"(got {ends[0]:.3g}, {ends[1]:.3g}); set relax_boundary for time-only noise"
        )
    slope = (sigma_values(profile, np.array([grid.dy]), lam)[0] - ends[0]) / grid.dy
    if not np.isfinite(slope):
        errs.append("sigma_profile violates sigma1 condition: right derivative at 0 not finite")
    return errs


def forcing(dW: np.ndarray, sigma: np.ndarray, dy: float, sign: float = 1.0,
            time_only: bool = False) -> np.ndarray:
    """Per-node source added in one step: ``sign * sigma * dW / dy``.

    In time-only mode ``dW`` already carries ``N(0, dt)`` and is not divided by
    the cell width.
    """
    if time_only:
        return sign * sigma * dW
    return (sign / dy) * sigma * dW

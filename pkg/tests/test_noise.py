from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from stefan_spread.core import DomainError, GridSpec
from stefan_spread.noise import (
    NoiseStream,
    check_sigma,
    forcing,
    make_rng,
    noise_path,
    sample_slice,
    sigma_at,
    sigma_values,
)

GRID = GridSpec(ny=31, nt=200, lam=1.0, horizon=0.5)


def test_block_draws_match_slices():
    a = NoiseStream(make_rng(3, 7, 1), GRID, block=17).path(60)
    rng = make_rng(3, 7, 1)
    b = np.stack([sample_slice(rng, GRID, k).dW for k in range(60)])
    np.testing.assert_array_equal(a, b)


def test_time_only_block_matches_slices():
    a = NoiseStream(make_rng(3, 0, 0), GRID, time_only=True, block=5).path(12)
    rng = make_rng(3, 0, 0)
    b = np.stack([sample_slice(rng, GRID, k, time_only=True).dW for k in range(12)])
    np.testing.assert_array_equal(a, b)
    assert np.all(a == a[:, :1])


def test_streams_reproducible_and_distinct():
    p = noise_path(1, GRID, 0, 1)
    np.testing.assert_array_equal(p, noise_path(1, GRID, 0, 1))
    assert not np.array_equal(p, noise_path(1, GRID, 0, 2))
    assert not np.array_equal(p, noise_path(1, GRID, 1, 1))
    assert not np.array_equal(p, noise_path(2, GRID, 0, 1))


def test_cell_variance():
    p = noise_path(5, GRID)
    target = GRID.dt * GRID.dy
    # chi-square bound on the sample variance, 99.9% two-sided
    n = p.size
    lo, hi = stats.chi2.ppf([0.0005, 0.9995], n) / n
    assert lo * target < np.mean(p**2) < hi * target
    assert stats.kstest(p.ravel() / np.sqrt(target), "norm").pvalue > 1e-3


def test_step_index():
    s = NoiseStream(make_rng(0), GRID)
    assert [s.next().step_index for _ in range(3)] == [0, 1, 2]


def test_sigma_profiles():
    y = GRID.y
    np.testing.assert_allclose(sigma_values({"kind": "sine", "amplitude": 0.3}, y, 1.0),
                               0.3 * np.sin(np.pi * y))
    assert np.all(sigma_values({"kind": "constant", "value": 2.0}, y, 1.0) == 2.0)
    with pytest.raises(ValueError):
        sigma_values({"kind": "cubic"}, y, 1.0)
    with pytest.raises(DomainError):
        sigma_at({"kind": "sine"}, 1.2, 1.0)
    assert sigma_at({"kind": "sine"}, 0.5, 1.0) == pytest.approx(1.0)


def test_check_sigma():
    assert check_sigma({"kind": "sine", "amplitude": 1.0}, 1.0, GRID) == []
    assert check_sigma({"kind": "constant", "value": 1.0}, 1.0, GRID)
    assert check_sigma({"kind": "constant", "value": 1.0, "relax_boundary": True}, 1.0, GRID) == []


def test_forcing_scaling():
    dW = np.ones(4)
    sig = np.full(4, 2.0)
    np.testing.assert_allclose(forcing(dW, sig, 0.5, -1.0), -4.0)
    np.testing.assert_allclose(forcing(dW, sig, 0.5, 1.0, time_only=True), 2.0)

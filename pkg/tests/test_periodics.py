"""Fourier-grid utilities: spectra, derivatives, interpolation, tails."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from phamp.periodics import (eval_fourier, from_spectrum, load_grid,
                             save_grid, spectral_derivative, tail_norm,
                             to_spectrum)


def grid(n):
    return np.arange(n) / n


def test_spectrum_roundtrip():
    rng = np.random.default_rng(0)
    v = rng.standard_normal((3, 64))
    np.testing.assert_allclose(from_spectrum(to_spectrum(v), 64), v,
                               atol=1e-13)


def test_derivative_of_trig_polynomial():
    n = 128
    th = grid(n)
    v = np.sin(2 * np.pi * th) + 0.3 * np.cos(6 * np.pi * th)
    want = 2 * np.pi * np.cos(2 * np.pi * th) - 0.9 * np.pi * np.sin(6 * np.pi * th) * 2
    np.testing.assert_allclose(spectral_derivative(v), want, atol=1e-10)


def test_eval_fourier_interpolates_grid_nodes():
    rng = np.random.default_rng(1)
    n = 32
    v = rng.standard_normal((2, n))
    spec = to_spectrum(v)
    for i in (0, 5, 17, 31):
        np.testing.assert_allclose(eval_fourier(spec, i / n), v[:, i],
                                   atol=1e-12)


def test_eval_fourier_matches_dense_series():
    n = 16
    th = grid(n)
    v = np.cos(2 * np.pi * 3 * th) + 0.5
    spec = to_spectrum(v)
    for theta in (0.13, 0.77, 1.4, -0.2):
        np.testing.assert_allclose(eval_fourier(spec, theta),
                                   np.cos(2 * np.pi * 3 * theta) + 0.5,
                                   atol=1e-12)


def test_tail_norm_counts_top_decade_of_modes():
    n = 256
    th = grid(n)
    # single mode well below the top 10% of wavenumbers: zero tail
    low = np.cos(2 * np.pi * 5 * th)
    assert tail_norm(low) < 1e-14
    # single mode inside the top decade: tail equals its amplitude
    k_hi = int(0.95 * (n // 2))
    hi = 0.25 * np.cos(2 * np.pi * k_hi * th)
    assert abs(tail_norm(hi) - 0.25) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_derivative_annihilates_mean_and_is_linear(seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(64)
    d = spectral_derivative(v)
    assert abs(np.mean(d)) < 1e-12
    np.testing.assert_allclose(spectral_derivative(2.0 * v), 2.0 * d,
                               atol=1e-12)


def test_grid_io_roundtrip_is_exact(tmp_path):
    rng = np.random.default_rng(2)
    v = rng.standard_normal((4, 8)) * 1e5
    p = tmp_path / "g.txt"
    save_grid(p, v)
    w = load_grid(p)
    assert np.array_equal(v, w)

"""Periodic-grid representation of 1-periodic vector functions.

A function g: R/Z -> R^d is stored by its samples at theta_i = i/N on a
uniform grid with N a power of two.  Conversion to/from Fourier
coefficients uses the real FFT; the spectrum is laid out as c_k for
k = 0..N/2 with the convention

    g(theta) = sum_k c_k exp(2 pi i k theta),    c_{-k} = conj(c_k).

Tail-norm convention: the tail of the spectrum is the one-sided range
k = floor(0.9*N/2) .. N/2 and each coefficient is counted with a factor
2 (the Nyquist coefficient included).  With this convention the grid
sampled from cos(2 pi (N/2-1) theta) has tail norm exactly 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PeriodicGrid",
    "to_spectrum",
    "from_spectrum",
    "tail_norm",
    "spectral_derivative",
    "eval_fourier",
    "save_grid",
    "load_grid",
]


def _check_n(n: int) -> None:
    if n < 2 or (n & (n - 1)) != 0:
        raise ValueError(f"grid size must be a power of two >= 2, got {n}")


def to_spectrum(values: np.ndarray) -> np.ndarray:
    """Fourier coefficients c_k, k = 0..N/2, along the last axis."""
    n = values.shape[-1]
    _check_n(n)
    return np.fft.rfft(values, axis=-1) / n


def from_spectrum(spectrum: np.ndarray, n: int) -> np.ndarray:
    """Samples at theta_i = i/N from one-sided coefficients."""
    _check_n(n)
    return np.fft.irfft(spectrum * n, n=n, axis=-1)


def tail_norm(values: np.ndarray) -> float:
    """2 * sum |c_k| over the last 10% of coefficients (max over components)."""
    c = to_spectrum(values)
    n = values.shape[-1]
    k0 = int(np.floor(0.9 * (n // 2)))
    t = 2.0 * np.sum(np.abs(c[..., k0:]), axis=-1)
    return float(np.max(t))


def spectral_derivative(values: np.ndarray) -> np.ndarray:
    """d/dtheta by multiplying c_k with 2 pi i k (Nyquist mode dropped)."""
    n = values.shape[-1]
    c = to_spectrum(values)
    k = np.arange(c.shape[-1], dtype=float)
    c = c * (2j * np.pi * k)
    c[..., -1] = 0.0  # derivative of the Nyquist cosine mode is odd: not representable
    return from_spectrum(c, n)


def eval_fourier(spectrum: np.ndarray, theta) -> np.ndarray:
    """Evaluate the trig interpolant at arbitrary theta.

    spectrum has shape (..., N/2+1); theta is scalar or shape (M,).
    Returns shape (...,) or (..., M).
    """
    theta = np.asarray(theta, dtype=float)
    scalar = theta.ndim == 0
    th = np.atleast_1d(theta)
    nk = spectrum.shape[-1]
    k = np.arange(nk)
    ph = np.exp(2j * np.pi * np.outer(k, th))  # (nk, M)
    # real-signal reconstruction: c_0 + 2 Re sum_{k>0} c_k e^{ikx}, Nyquist once
    w = np.full(nk, 2.0)
    w[0] = 1.0
    w[-1] = 1.0
    out = np.real(np.tensordot(spectrum * w, ph, axes=([-1], [0])))
    return out[..., 0] if scalar else out


@dataclass
class PeriodicGrid:
    """Samples of a 1-periodic function; shape (dim, N) or (N,)."""

    values: np.ndarray
    _spectrum: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        _check_n(self.n)

    @property
    def n(self) -> int:
        return self.values.shape[-1]

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[0]

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            self._spectrum = to_spectrum(self.values)
        return self._spectrum

    def tail_norm(self) -> float:
        return tail_norm(self.values)

    def derivative(self) -> "PeriodicGrid":
        return PeriodicGrid(spectral_derivative(self.values))

    def __call__(self, theta):
        return eval_fourier(self.spectrum, theta)


def save_grid(path, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=float)
    n = values.shape[-1]
    dim = 1 if values.ndim == 1 else values.shape[0]
    rows = values.reshape(dim, n).T
    with open(path, "w") as fh:
        fh.write(f"# N={n} dim={dim}\n")
        np.savetxt(fh, rows, fmt="%.17g")


def load_grid(path) -> np.ndarray:
    with open(path) as fh:
        header = fh.readline().strip()
        fields = dict(tok.split("=") for tok in header.lstrip("# ").split())
        n, dim = int(fields["N"]), int(fields["dim"])
        rows = np.loadtxt(fh, ndmin=2)
    if rows.shape != (n, dim):
        raise ValueError(f"grid file {path}: expected {(n, dim)}, got {rows.shape}")
    values = rows.T
    return values[0] if dim == 1 else values

"""Discrete sine analysis/synthesis on uniform interior grids of ``[0, ell]``."""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from ._summation import compensated_accumulate


@dataclass(frozen=True)
class SpatialGrid:
    """Interior nodes ``x_j = j ell / (m + 1)``, ``j = 1..m``."""

    ell: float
    m: int

    def __post_init__(self):
        if not (math.isfinite(self.ell) and self.ell > 0):
            raise ValueError("ell must be positive")
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 3:
            raise ValueError(f"grid needs m >= 3 interior points, got {self.m!r}")
        object.__setattr__(self, "ell", float(self.ell))
        object.__setattr__(self, "m", int(self.m))

    @property
    def spacing(self):
        return self.ell / (self.m + 1)

    @property
    def nodes(self):
        return np.arange(1, self.m + 1) * self.spacing

    @property
    def nodes_with_boundary(self):
        x = np.arange(0, self.m + 2) * self.spacing
        x[-1] = self.ell
        return x

    def sine_matrix(self, n_modes):
        """``S[n-1, j-1] = sin(n pi j / (m+1))`` with the argument reduced mod ``2 pi``."""
        n = np.arange(1, n_modes + 1)[:, None]
        j = np.arange(1, self.m + 1)[None, :]
        period = 2 * (self.m + 1)
        return np.sin(math.pi * ((n * j) % period) / (self.m + 1))


@dataclass(frozen=True)
class SineSpectrum:
    """Coefficients of ``g(x) = sum_n coeffs[n-1] sin(n pi x / ell)``."""

    ell: float
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size < 1:
            raise ValueError("a spectrum needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValueError("spectrum coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "ell", float(self.ell))

    def __len__(self):
        return self.coeffs.size

    def padded(self, n_modes):
        out = np.zeros(n_modes)
        k = min(n_modes, self.coeffs.size)
        out[:k] = self.coeffs[:k]
        return out

    @classmethod
    def zeros(cls, ell, n_modes=1):
        return cls(ell, np.zeros(n_modes))

    @classmethod
    def single_mode(cls, ell, n, amplitude=1.0):
        c = np.zeros(n)
        c[n - 1] = amplitude
        return cls(ell, c)


def _check_backend(backend):
    if backend not in ("direct", "fft"):
        raise ValueError(f"unknown transform backend {backend!r}")


def analyze_array(samples, m, n_modes, backend="direct"):
    """Sine coefficients of sample rows ``samples[..., j]``; returns ``[..., n]``."""
    _check_backend(backend)
    samples = np.asarray(samples, dtype=float)
    if samples.shape[-1] != m:
        raise ValueError(f"expected {m} samples per row, got {samples.shape[-1]}")
    if n_modes > m:
        raise ValueError(f"n_modes={n_modes} exceeds the {m} grid points (aliasing)")
    if backend == "fft":
        return scipy.fft.dst(samples, type=1, axis=-1)[..., :n_modes] / (m + 1)
    S = SpatialGrid(1.0, m).sine_matrix(n_modes)
    terms = (samples[..., j, None] * S[:, j] for j in range(m))
    return (2.0 / (m + 1)) * compensated_accumulate(terms)


def synthesize_array(coeffs, m, backend="direct"):
    """Grid values ``sum_n coeffs[..., n] sin(n pi j/(m+1))`` for ``j = 1..m``."""
    _check_backend(backend)
    coeffs = np.asarray(coeffs, dtype=float)
    n_modes = coeffs.shape[-1]
    if backend == "fft" and n_modes <= m:
        padded = np.zeros(coeffs.shape[:-1] + (m,))
        padded[..., :n_modes] = coeffs
        return 0.5 * scipy.fft.dst(padded, type=1, axis=-1)
    S = SpatialGrid(1.0, m).sine_matrix(n_modes)
    # ascending n
    terms = (coeffs[..., n, None] * S[n] for n in range(n_modes))
    return compensated_accumulate(terms)


def analyze(samples, grid: SpatialGrid, n_modes: int, backend="direct") -> SineSpectrum:
    """Discrete sine coefficients ``g_n = 2/(m+1) sum_j s_j sin(n pi j/(m+1))``."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 1:
        raise ValueError("analyze takes one row of samples; use analyze_array for stacks")
    return SineSpectrum(grid.ell, analyze_array(samples, grid.m, n_modes, backend))


def synthesize(spectrum: SineSpectrum, grid: SpatialGrid, backend="direct") -> np.ndarray:
    if not math.isclose(spectrum.ell, grid.ell, rel_tol=1e-12):
        raise ValueError(f"spectrum length {spectrum.ell} does not match grid length {grid.ell}")
    return synthesize_array(spectrum.coeffs, grid.m, backend)

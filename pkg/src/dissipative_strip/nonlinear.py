"""Nonlinear strip problem with a source ``F(x, t, u)``.

The solution satisfies the integral equation

    u = u_lin - int_0^t G(t - s) * F(., s, u(., s)) ds,

where ``u_lin`` is the unforced response to the initial data.  Two solvers
are provided: global Picard iteration of that map on ``[0, T]``, and a
step-by-step march that applies the exact modal propagator with a
predictor-corrector for the source.  They share the modal Duhamel weights.
"""

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .linear import (DEFAULT_MODE_LIMIT, ForcingSpec, SolutionField, duhamel_modal,
                     homogeneous_modal, quadrature_nodes)
from .modal import Params, mode_arrays, step_operator
from .sine import SineSpectrum, SpatialGrid, analyze_array, synthesize_array


class SourceSpec:
    """Base class for sources ``F(x, t, u)``."""

    depends_on_u = True

    def evaluate(self, x, t, u):
        raise NotImplementedError


class NoSource(SourceSpec):
    depends_on_u = False

    def evaluate(self, x, t, u):
        return np.zeros_like(x)


@dataclass(frozen=True)
class LinearForcing(SourceSpec):
    forcing: ForcingSpec
    depends_on_u = False

    def evaluate(self, x, t, u):
        return np.asarray(self.forcing.evaluate(x, t), dtype=float) * np.ones_like(x)


@dataclass(frozen=True)
class PSGE(SourceSpec):
    """Perturbed sine-Gordon source ``sin(u) + bias_sign * gamma``.

    ``bias_sign = -1`` gives ``sin(u) - gamma``.
    """

    gamma: float
    bias_sign: float = -1.0

    def __post_init__(self):
        if self.bias_sign not in (-1.0, 1.0):
            raise ValueError("bias_sign must be +1 or -1")

    def evaluate(self, x, t, u):
        return np.sin(u) + self.bias_sign * self.gamma


@dataclass(frozen=True)
class Custom(SourceSpec):
    function: Callable[[np.ndarray, float, np.ndarray], np.ndarray]

    def evaluate(self, x, t, u):
        return np.asarray(self.function(x, t, u), dtype=float) * np.ones_like(x)


def psge_bound(source: SourceSpec) -> float:
    """Uniform bound ``1 + |gamma|`` on the PSGE source."""
    if not isinstance(source, PSGE):
        raise TypeError(f"psge_bound needs a PSGE source, got {type(source).__name__}")
    return 1.0 + abs(source.gamma)


class PicardDidNotConverge(RuntimeError):
    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


class NonFiniteState(FloatingPointError):
    def __init__(self, message, last_time):
        super().__init__(message)
        self.last_time = last_time


@dataclass(frozen=True)
class PicardConfig:
    tol: float = 1e-10
    max_iter: int = 50
    quadrature_dt: float = 1e-2
    n_modes: int = None

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not self.quadrature_dt > 0:
            raise ValueError("quadrature_dt must be positive")


@dataclass(frozen=True)
class MarchConfig:
    dt: float = 1e-2
    corrector_iters: int = 2
    n_modes: int = None
    backend: str = "fft"
    output_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.corrector_iters < 1:
            raise ValueError("corrector_iters must be >= 1")
        if self.output_every < 1:
            raise ValueError("output_every must be >= 1")


def _mode_count(requested, grid, g0, g1):
    if requested is not None:
        return int(requested)
    return max(min(grid.m, DEFAULT_MODE_LIMIT), len(g0), len(g1))


def _source_modal(source, x, t, u_grid, m, n_force, n_modes, backend="direct"):
    F = source.evaluate(x, t, u_grid)
    out = np.zeros(n_modes)
    out[:n_force] = analyze_array(F, m, n_force, backend)
    return out


def solve_picard(params: Params, g0: SineSpectrum, g1: SineSpectrum, source: SourceSpec,
                 grid: SpatialGrid, T: float, cfg: PicardConfig = PicardConfig()):
    """Successive substitution on the integral equation over ``[0, T]``.

    Starts from ``u_lin`` and stops once the sup-norm change of an iterate is
    at most ``cfg.tol``.  A source that ignores ``u`` makes the map constant,
    so its first iterate is returned directly.

    Returns ``(SolutionField, trace)`` where ``trace[k]`` is the sup change at
    iteration ``k + 1``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    source = source or NoSource()
    n_modes = _mode_count(cfg.n_modes, grid, g0, g1)
    n_force = min(n_modes, grid.m)
    n_steps = max(1, math.ceil(T / cfg.quadrature_dt - 1e-9))
    nodes, _ = quadrature_nodes(np.linspace(0.0, T, n_steps + 1), cfg.quadrature_dt)
    modes = mode_arrays(params, n_modes)
    x = grid.nodes

    u_lin, _ = homogeneous_modal(params, g0, g1, n_modes, nodes)
    U = synthesize_array(u_lin, grid.m)
    trace = []
    for _ in range(cfg.max_iter):
        F = np.empty_like(U)
        for k, t in enumerate(nodes):
            F[k] = source.evaluate(x, float(t), U[k])
        if not np.all(np.isfinite(F)):
            raise PicardDidNotConverge("source became non-finite", trace)
        f = np.zeros((nodes.size, n_modes))
        f[:, :n_force] = analyze_array(F, grid.m, n_force)
        w, _ = duhamel_modal(modes, nodes, f)
        U_new = synthesize_array(u_lin - w, grid.m)
        diff = float(np.max(np.abs(U_new - U)))
        trace.append(diff)
        U = U_new
        if not math.isfinite(diff):
            break
        if diff <= cfg.tol or not source.depends_on_u:
            return SolutionField(grid, nodes, U), trace
    raise PicardDidNotConverge(
        f"Picard iteration did not reach tol={cfg.tol} in {len(trace)} iterations "
        f"(last change {trace[-1]:.3e}); try a shorter horizon", trace)


def solve_march(params: Params, g0: SineSpectrum, g1: SineSpectrum, source: SourceSpec,
                grid: SpatialGrid, T: float, cfg: MarchConfig = MarchConfig()) -> SolutionField:
    """Time-march the modal state ``(u_n, u_n')`` with exact propagators.

    Each step predicts with the source frozen at the step start, then
    re-evaluates the end-of-step source ``cfg.corrector_iters`` times.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    source = source or NoSource()
    n_modes = _mode_count(cfg.n_modes, grid, g0, g1)
    n_force = min(n_modes, grid.m)
    n_steps = max(1, math.ceil(T / cfg.dt - 1e-9))
    dt = T / n_steps
    op = step_operator(mode_arrays(params, n_modes), dt)
    x = grid.nodes
    m = grid.m
    backend = cfg.backend

    u = g0.padded(n_modes)
    v = g1.padded(n_modes)
    U = synthesize_array(u, m, backend)
    times = [0.0]
    rows = [U]
    for k in range(n_steps):
        t0 = k * dt
        t1 = (k + 1) * dt if k + 1 < n_steps else T
        f0 = _source_modal(source, x, t0, U, m, n_force, n_modes, backend)
        u1, v1 = op.apply(u, v, -f0, -f0)
        for _ in range(cfg.corrector_iters):
            f1 = _source_modal(source, x, t1, synthesize_array(u1, m, backend), m, n_force, n_modes, backend)
            u1, v1 = op.apply(u, v, -f0, -f1)
        if not (np.all(np.isfinite(u1)) and np.all(np.isfinite(v1))):
            raise NonFiniteState(f"state became non-finite after t={t0}", last_time=t0)
        u, v = u1, v1
        U = synthesize_array(u, m, backend)
        if (k + 1) % cfg.output_every == 0 or k + 1 == n_steps:
            times.append(t1)
            rows.append(U)
    return SolutionField(grid, np.array(times), np.array(rows))

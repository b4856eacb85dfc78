"""Linear strip problem solved mode by mode.

Each sine mode obeys ``u_n'' + 2 h_n u_n' + b_n^2 u_n = -f_n(t)``, so

    u_n(t) = g0_n K_n(t) + g1_n H_n(t) - int_0^t H_n(t - s) f_n(s) ds.

x-derivatives are never formed by differencing the series; the operator
``(d_t + a - eps d_xx)`` is applied per mode as ``d/dt + 2 h_n``, which is
what turns ``H_n`` into ``K_n``.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .modal import DEFAULT_TERM_CAP, ModeArrays, Params, mode_arrays, propagators, step_operator
from .sine import SineSpectrum, SpatialGrid, analyze_array, synthesize_array

DEFAULT_MODE_LIMIT = 256


@dataclass(frozen=True)
class ExponentialDecay:
    """``|f(x, t)| <= C exp(-delta t)``."""

    C: float
    delta: float


@dataclass(frozen=True)
class AlgebraicDecay:
    """``|f(x, t)| <= h / (k + t)^(1 + alpha)``."""

    h: float
    k: float
    alpha: float


DecayClass = Union[None, ExponentialDecay, AlgebraicDecay]


@dataclass(frozen=True)
class ForcingSpec:
    """A source ``f(x, t)``; ``evaluate(x, t)`` gets the node array and a scalar time.

    ``decay`` is descriptive metadata; nothing here enforces it.
    """

    evaluate: Callable[[np.ndarray, float], np.ndarray]
    decay: DecayClass = None


@dataclass(frozen=True)
class LinearProblem:
    params: Params
    g0: SineSpectrum
    g1: SineSpectrum
    forcing: Optional[ForcingSpec] = None

    def __post_init__(self):
        for name in ("g0", "g1"):
            spec = getattr(self, name)
            if not math.isclose(spec.ell, self.params.ell, rel_tol=1e-12):
                raise ValueError(f"{name} is defined on [0, {spec.ell}], params have ell={self.params.ell}")

    @property
    def data_modes(self):
        return max(len(self.g0), len(self.g1))


@dataclass(frozen=True)
class SolutionField:
    """``values[k, j] = u(x_j, times[k])`` at the interior grid nodes."""

    grid: SpatialGrid
    times: np.ndarray
    values: np.ndarray
    sup_norms: np.ndarray = field(init=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (times.size, self.grid.m):
            raise ValueError(f"values shape {values.shape} != ({times.size}, {self.grid.m})")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sup_norms", np.max(np.abs(values), axis=1))

    def with_boundary(self):
        """Values on ``x = 0, x_1, ..., x_m, ell``; the end columns are exactly zero."""
        out = np.zeros((self.times.size, self.grid.m + 2))
        out[:, 1:-1] = self.values
        return out

    def at(self, t):
        k = int(np.argmin(np.abs(self.times - t)))
        if not math.isclose(self.times[k], t, rel_tol=1e-12, abs_tol=1e-12):
            raise KeyError(f"t={t} is not a stored time")
        return self.values[k]


def _check_times(times):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a nonempty 1-D sequence")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be nonnegative and strictly increasing")
    return times


def _resolve_modes(n_modes):
    if n_modes > DEFAULT_TERM_CAP:
        raise ValueError(f"{n_modes} modes requested; the kernel cap is {DEFAULT_TERM_CAP}")
    return n_modes


def homogeneous_modal(params, g0, g1, n_modes, times):
    """Modal amplitudes and velocities ``(u_n(t_k), u_n'(t_k))`` of the unforced problem."""
    modes = mode_arrays(params, n_modes)
    c0 = g0.padded(n_modes)
    c1 = g1.padded(n_modes)
    t = np.asarray(times, dtype=float)[:, None]
    H, Hd, K = propagators(modes.h, modes.b_sq, modes.omega_sq, t)
    # (K, H) propagate position; (-b^2 H, H') propagate velocity
    u = c0 * K + c1 * H
    v = c0 * (-modes.b_sq * H) + c1 * Hd
    return u, v


def duhamel_modal(modes: ModeArrays, nodes, f_nodes):
    """Solve ``w'' + 2 h w' + b^2 w = f`` from rest, ``f`` piecewise linear between nodes.

    ``nodes`` starts at 0; ``f_nodes[k]`` holds the modal forcing at ``nodes[k]``.
    Returns ``(w, w')`` at every node.
    """
    nodes = np.asarray(nodes, dtype=float)
    f_nodes = np.asarray(f_nodes, dtype=float)
    if nodes[0] != 0.0:
        raise ValueError("Duhamel integration starts at t = 0")
    w = np.zeros((nodes.size, len(modes)))
    wd = np.zeros_like(w)
    cache = {}
    for k in range(nodes.size - 1):
        dt = nodes[k + 1] - nodes[k]
        op = cache.get(dt)
        if op is None:
            op = cache[dt] = step_operator(modes, dt)
        w[k + 1], wd[k + 1] = op.apply(w[k], wd[k], f_nodes[k], f_nodes[k + 1])
    return w, wd


def quadrature_nodes(times, quadrature_dt):
    """Nodes containing 0 and every output time, spaced at most ``quadrature_dt``.

    Returns ``(nodes, index)`` with ``nodes[index[i]] == times[i]``.
    """
    if not quadrature_dt > 0:
        raise ValueError("quadrature_dt must be positive")
    times = _check_times(times)
    anchors = times if times[0] == 0.0 else np.concatenate(([0.0], times))
    pieces = [anchors[:1]]
    for lo, hi in zip(anchors[:-1], anchors[1:]):
        k = max(1, math.ceil((hi - lo) / quadrature_dt - 1e-9))
        seg = lo + (hi - lo) * np.arange(1, k + 1) / k
        seg[-1] = hi
        pieces.append(seg)
    nodes = np.concatenate(pieces)
    index = np.searchsorted(nodes, times)
    return nodes, index


def modal_forcing(forcing, grid, nodes, n_modes):
    """Sample ``f`` on the grid at each node and project onto the first ``n_modes`` sines."""
    x = grid.nodes
    samples = np.empty((len(nodes), grid.m))
    for k, t in enumerate(nodes):
        samples[k] = forcing(x, float(t))
    if not np.all(np.isfinite(samples)):
        bad = nodes[np.argmax(~np.all(np.isfinite(samples), axis=1))]
        raise ValueError(f"forcing produced non-finite values at t={bad}")
    return analyze_array(samples, grid.m, n_modes)


def solve_homogeneous(problem: LinearProblem, grid: SpatialGrid, times, n_modes=None) -> SolutionField:
    """Unforced solution ``u_{g1} + (d_t + a - eps d_xx) u_{g0}`` on the grid.

    Uses all data modes unless ``n_modes`` says otherwise (shorter spectra are
    zero-padded).
    """
    times = _check_times(times)
    if not math.isclose(grid.ell, problem.params.ell, rel_tol=1e-12):
        raise ValueError("grid and params disagree on ell")
    n_modes = _resolve_modes(n_modes or problem.data_modes)
    u, _ = homogeneous_modal(problem.params, problem.g0, problem.g1, n_modes, times)
    return SolutionField(grid, times, synthesize_array(u, grid.m))


def forced_modal(problem, grid, times, quadrature_dt, n_modes):
    times = _check_times(times)
    nodes, index = quadrature_nodes(times, quadrature_dt)
    modes = mode_arrays(problem.params, n_modes)
    n_force = min(n_modes, grid.m)
    f = np.zeros((nodes.size, n_modes))
    f[:, :n_force] = modal_forcing(problem.forcing.evaluate, grid, nodes, n_force)
    w, wd = duhamel_modal(modes, nodes, f)
    u, v = homogeneous_modal(problem.params, problem.g0, problem.g1, n_modes, times)
    return u - w[index], v - wd[index]


def solve_forced(problem: LinearProblem, grid: SpatialGrid, times, quadrature_dt=1e-2,
                 n_modes=None) -> SolutionField:
    """Full linear solution ``u_0 + u_f`` with ``u_f = -int G(t - s) * f(s) ds``.

    The forcing is projected onto ``min(m, 256)`` modes by default; data
    spectra keep all their modes.
    """
    if problem.forcing is None:
        raise ValueError("solve_forced needs a forcing; use solve_homogeneous")
    if not math.isclose(grid.ell, problem.params.ell, rel_tol=1e-12):
        raise ValueError("grid and params disagree on ell")
    times = _check_times(times)
    if n_modes is None:
        n_modes = max(problem.data_modes, min(grid.m, DEFAULT_MODE_LIMIT))
    n_modes = _resolve_modes(n_modes)
    u, _ = forced_modal(problem, grid, times, quadrature_dt, n_modes)
    return SolutionField(grid, times, synthesize_array(u, grid.m))


@dataclass(frozen=True)
class SmallTimeReport:
    """Per-time sup errors of the initial limits.

    ``sup_u``: ``sup |u_{g1}|``; ``sup_velocity_error``: ``sup |d_t u_{g1} - g1|``;
    ``sup_star_error``: ``sup |u*_{g0} - g0|``.
    """

    times: np.ndarray
    sup_u: np.ndarray
    sup_velocity_error: np.ndarray
    sup_star_error: np.ndarray


def small_time_limits(problem: LinearProblem, grid: SpatialGrid, t_list, n_modes=None) -> SmallTimeReport:
    t = np.asarray(t_list, dtype=float)
    if np.any(t <= 0):
        raise ValueError("small-time probes must be positive")
    n_modes = n_modes or problem.data_modes
    modes = mode_arrays(problem.params, n_modes)
    c0 = problem.g0.padded(n_modes)
    c1 = problem.g1.padded(n_modes)
    H, Hd, K = propagators(modes.h, modes.b_sq, modes.omega_sq, t[:, None])
    g0 = synthesize_array(c0, grid.m)
    g1 = synthesize_array(c1, grid.m)
    u_g1 = synthesize_array(c1 * H, grid.m)
    du_g1 = synthesize_array(c1 * Hd, grid.m)
    star = synthesize_array(c0 * K, grid.m)
    return SmallTimeReport(
        times=t,
        sup_u=np.max(np.abs(u_g1), axis=1),
        sup_velocity_error=np.max(np.abs(du_g1 - g1), axis=1),
        sup_star_error=np.max(np.abs(star - g0), axis=1),
    )

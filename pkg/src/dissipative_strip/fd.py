"""Finite-difference reference solver, independent of the spectral code.

The third-order equation is written as the first-order system

    u_t = v,    v_t = eps v_xx + c^2 u_xx - a v - F,

discretised with second-order central differences in x and the theta
scheme in time.  Unknowns are interleaved ``(u_1, v_1, u_2, v_2, ...)`` so
each step is one banded solve.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse

from .linear import SolutionField
from .modal import Params
from .sine import SpatialGrid

# interleaved stencil: v_j couples to u_{j +- 1} (offsets -3, +1) and v_{j +- 1} (+-2)
_LOWER, _UPPER = 3, 2


@dataclass(frozen=True)
class FDConfig:
    m: int
    dt: float
    theta: float = 0.5

    def __post_init__(self):
        if self.m < 3:
            raise ValueError("m must be >= 3")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not 0.5 <= self.theta <= 1.0:
            raise ValueError("theta must lie in [0.5, 1]")


def _system_matrix(params, m):
    dx = params.ell / (m + 1)
    n = 2 * m
    A = scipy.sparse.lil_matrix((n, n))
    cu = params.c**2 / dx**2
    cv = params.epsilon / dx**2
    for j in range(m):
        iu, iv = 2 * j, 2 * j + 1
        A[iu, iv] = 1.0
        A[iv, iu] = -2.0 * cu
        A[iv, iv] = -2.0 * cv - params.a
        if j > 0:
            A[iv, iu - 2] = cu
            A[iv, iv - 2] = cv
        if j < m - 1:
            A[iv, iu + 2] = cu
            A[iv, iv + 2] = cv
    return A.tocsr()


def _to_banded(M):
    M = M.toarray()
    n = M.shape[0]
    ab = np.zeros((_LOWER + _UPPER + 1, n))
    for i in range(n):
        for j in range(max(0, i - _LOWER), min(n, i + _UPPER + 1)):
            ab[_UPPER + i - j, j] = M[i, j]
    return ab


def solve_fd(params: Params, g0_samples, g1_samples, source, cfg: FDConfig, T: float,
             output_every: int = 1) -> SolutionField:
    """theta-scheme solution on the interior nodes ``x_j = j ell/(m+1)``.

    ``source`` follows the ``SourceSpec`` protocol (``evaluate(x, t, u)`` and
    ``depends_on_u``); ``None`` means no source.  A u-dependent source is
    handled with one predictor and one corrector solve per step.
    """
    m = cfg.m
    grid = SpatialGrid(params.ell, m)
    x = grid.nodes
    g0 = np.asarray(g0_samples, dtype=float)
    g1 = np.asarray(g1_samples, dtype=float)
    if g0.shape != (m,) or g1.shape != (m,):
        raise ValueError(f"initial samples must have length m={m}")
    if not T > 0:
        raise ValueError("T must be positive")
    n_steps = max(1, math.ceil(T / cfg.dt - 1e-9))
    dt = T / n_steps
    theta = cfg.theta

    A = _system_matrix(params, m)
    eye = scipy.sparse.identity(2 * m, format="csr")
    lhs = _to_banded(eye - theta * dt * A)
    rhs_op = eye + (1.0 - theta) * dt * A

    y = np.empty(2 * m)
    y[0::2] = g0
    y[1::2] = g1

    def load(t, u):
        s = np.zeros(2 * m)
        if source is not None:
            s[1::2] = -source.evaluate(x, t, u)
        return s

    def solve(rhs):
        try:
            out = scipy.linalg.solve_banded((_LOWER, _UPPER), lhs, rhs, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise np.linalg.LinAlgError(f"singular theta-scheme system (theta={theta}, dt={dt})") from exc
        return out

    depends = source is not None and getattr(source, "depends_on_u", True)
    times = [0.0]
    rows = [y[0::2].copy()]
    s0 = load(0.0, y[0::2])
    for k in range(n_steps):
        t1 = (k + 1) * dt if k + 1 < n_steps else T
        base = rhs_op @ y + (1.0 - theta) * dt * s0
        s1 = load(t1, y[0::2])
        y_new = solve(base + theta * dt * s1)
        if depends:
            s1 = load(t1, y_new[0::2])
            y_new = solve(base + theta * dt * s1)
        if not np.all(np.isfinite(y_new)):
            raise FloatingPointError(f"FD state became non-finite after t={k * dt}")
        y, s0 = y_new, s1
        if (k + 1) % output_every == 0 or k + 1 == n_steps:
            times.append(t1)
            rows.append(y[0::2].copy())
    return SolutionField(grid, np.array(times), np.array(rows))


@dataclass(frozen=True)
class FDScenario:
    """Inputs for a refinement study; ``g0``/``g1`` map node arrays to samples."""

    params: Params
    g0: Callable[[np.ndarray], np.ndarray]
    g1: Callable[[np.ndarray], np.ndarray]
    source: object
    T: float
    exact: Optional[Callable[[np.ndarray, float], np.ndarray]] = None


def convergence_order(scenario: FDScenario, levels: Sequence[FDConfig]):
    """Observed orders between successive refinement levels.

    With ``scenario.exact`` the sup error at ``T`` is used, giving one order
    per pair of levels.  Without it, differences of successive levels are
    compared on the coarse nodes (grids must be nested), giving one order per
    triple.  Each level should refine both ``dx`` and ``dt`` by the same ratio.
    """
    if len(levels) < 3:
        raise ValueError("need at least three refinement levels")
    results = []
    for cfg in levels:
        x = SpatialGrid(scenario.params.ell, cfg.m).nodes
        sol = solve_fd(scenario.params, scenario.g0(x), scenario.g1(x), scenario.source, cfg,
                       scenario.T, output_every=10**9)
        results.append((x, sol.values[-1]))
    ratios = [(levels[i + 1].m + 1) / (levels[i].m + 1) for i in range(len(levels) - 1)]

    if scenario.exact is not None:
        errors = [float(np.max(np.abs(u - scenario.exact(x, scenario.T)))) for x, u in results]
        return [math.log(errors[i] / errors[i + 1]) / math.log(ratios[i]) for i in range(len(errors) - 1)]

    coarse_m = levels[0].m
    def on_coarse(i):
        step = (levels[i].m + 1) // (coarse_m + 1)
        if (coarse_m + 1) * step != levels[i].m + 1:
            raise ValueError("self-convergence needs nested grids: (m+1) must scale by integers")
        return results[i][1][step - 1::step]
    diffs = [float(np.max(np.abs(on_coarse(i) - on_coarse(i + 1)))) for i in range(len(levels) - 1)]
    return [math.log(diffs[i] / diffs[i + 1]) / math.log(ratios[i + 1]) for i in range(len(diffs) - 1)]

import math

import numpy as np
import pytest

from dissipative_strip.fd import FDConfig, solve_fd
from dissipative_strip.linear import (ForcingSpec, LinearProblem, SolutionField, forced_modal,
                                      quadrature_nodes, small_time_limits, solve_forced,
                                      solve_homogeneous)
from dissipative_strip.decay import fit_exponential_rate
from dissipative_strip.modal import Params, decay_constants, mode_arrays
from dissipative_strip.nonlinear import NoSource
from dissipative_strip.sine import SineSpectrum, SpatialGrid, analyze
from oracles import ode_response

UNIT = Params(1.0, 1.0, 1.0, math.pi)
GRID = SpatialGrid(math.pi, 63)
SIN1 = SineSpectrum.single_mode(math.pi, 1)
ZERO = SineSpectrum.zeros(math.pi)


def test_velocity_data_closed_form():
    t = np.linspace(0, 5, 11)
    sol = solve_homogeneous(LinearProblem(UNIT, ZERO, SIN1), GRID, t)
    exact = (t * np.exp(-t))[:, None] * np.sin(GRID.nodes)
    assert np.max(np.abs(sol.values - exact)) <= 1e-14


def test_displacement_data_closed_form():
    t = np.linspace(0, 5, 11)
    sol = solve_homogeneous(LinearProblem(UNIT, SIN1, ZERO), GRID, t)
    exact = ((1 + t) * np.exp(-t))[:, None] * np.sin(GRID.nodes)
    assert np.max(np.abs(sol.values - exact)) <= 1e-14


def test_homogeneous_agrees_with_fd():
    m = 201
    grid = SpatialGrid(math.pi, m)
    sol = solve_homogeneous(LinearProblem(UNIT, ZERO, SIN1), grid, [2.0])
    fd = solve_fd(UNIT, np.zeros(m), np.sin(grid.nodes), None, FDConfig(m, 1e-3), 2.0, output_every=2000)
    assert np.max(np.abs(sol.values[-1] - fd.values[-1])) <= 1e-4


def test_zero_data_is_zero():
    sol = solve_homogeneous(LinearProblem(UNIT, ZERO, ZERO), GRID, [0, 1, 2])
    assert not sol.values.any() and not sol.sup_norms.any()


def test_boundary_columns_are_exact_zeros():
    sol = solve_homogeneous(LinearProblem(UNIT, SIN1, SIN1), GRID, [0.5, 1.0])
    full = sol.with_boundary()
    assert np.all(full[:, 0] == 0.0) and np.all(full[:, -1] == 0.0)


def test_steady_state_under_constant_forcing():
    f = ForcingSpec(lambda x, t: np.sin(x))
    sol = solve_forced(LinearProblem(UNIT, ZERO, ZERO, f), GRID, [30.0], quadrature_dt=1e-2)
    assert np.max(np.abs(sol.values[-1] + np.sin(GRID.nodes))) <= 1e-6


def test_zero_forcing_matches_homogeneous_bitwise():
    rng = np.random.default_rng(3)
    g0 = SineSpectrum(math.pi, rng.standard_normal(20))
    g1 = SineSpectrum(math.pi, rng.standard_normal(20))
    t = np.linspace(0, 2, 9)
    zero = ForcingSpec(lambda x, t: np.zeros_like(x))
    forced = solve_forced(LinearProblem(UNIT, g0, g1, zero), GRID, t, n_modes=20)
    free = solve_homogeneous(LinearProblem(UNIT, g0, g1), GRID, t, n_modes=20)
    assert forced.values.tobytes() == free.values.tobytes()


def test_forced_matches_fd_oracle():
    m = 201
    grid = SpatialGrid(math.pi, m)
    f = ForcingSpec(lambda x, t: math.exp(-t) * np.sin(2 * x))
    sol = solve_forced(LinearProblem(UNIT, ZERO, ZERO, f), grid, [2.0], quadrature_dt=1e-3)

    class Src(NoSource):
        def evaluate(self, x, t, u):
            return math.exp(-t) * np.sin(2 * x)

    fd = solve_fd(UNIT, np.zeros(m), np.zeros(m), Src(), FDConfig(m, 1e-3), 2.0, output_every=2000)
    assert np.max(np.abs(sol.values[-1] - fd.values[-1])) <= 1e-3


def test_modal_residual_against_ode_solver():
    # each mode must solve u'' + 2h u' + b^2 u = -f_n with f_n linear between nodes
    params = Params(0.4, 1.2, 1.7, 2.5)
    grid = SpatialGrid(2.5, 31)
    g1 = SineSpectrum(2.5, [0.3, -0.2, 0.1])
    f = ForcingSpec(lambda x, t: math.cos(3 * t) * x * (2.5 - x))
    qdt = 1e-2
    times = np.array([0.5, 1.0, 2.0])
    u, v = forced_modal(LinearProblem(params, SineSpectrum.zeros(2.5), g1, f), grid, times, qdt, 8)
    modes = mode_arrays(params, 8)
    nodes, _ = quadrature_nodes(times, qdt)
    fn = np.array([analyze(f.evaluate(grid.nodes, t), grid, 8).coeffs for t in nodes])
    for n in range(8):
        forcing = lambda s, n=n: -np.interp(s, nodes, fn[:, n])
        y0 = [0.0, g1.padded(8)[n]]
        ref = ode_response(modes.h[n], modes.b_sq[n], y0, times, forcing)
        scale = max(1.0, np.max(np.abs(ref[0])))
        assert np.max(np.abs(u[:, n] - ref[0])) <= 1e-8 * scale
        assert np.max(np.abs(v[:, n] - ref[1])) <= 1e-8 * max(1.0, np.max(np.abs(ref[1])))


def test_second_order_in_quadrature_step():
    f = ForcingSpec(lambda x, t: math.sin(5 * t) * np.sin(x))
    problem = LinearProblem(UNIT, ZERO, ZERO, f)
    ref = solve_forced(problem, GRID, [2.0], quadrature_dt=1e-4).values[-1]
    errs = [np.max(np.abs(solve_forced(problem, GRID, [2.0], quadrature_dt=dt).values[-1] - ref))
            for dt in (0.1, 0.05)]
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.2)


def test_superposition():
    rng = np.random.default_rng(8)
    g0 = SineSpectrum(math.pi, rng.standard_normal(10))
    g1 = SineSpectrum(math.pi, rng.standard_normal(10))
    f = ForcingSpec(lambda x, t: np.exp(-t) * x * (math.pi - x))
    t = [0.5, 1.5]
    total = solve_forced(LinearProblem(UNIT, g0, g1, f), GRID, t)
    parts = (solve_homogeneous(LinearProblem(UNIT, g0, ZERO), GRID, t, n_modes=63).values
             + solve_homogeneous(LinearProblem(UNIT, ZERO, g1), GRID, t, n_modes=63).values
             + solve_forced(LinearProblem(UNIT, ZERO, ZERO, f), GRID, t).values)
    assert np.max(np.abs(total.values - parts)) <= 1e-12


def test_homogeneous_decay_rate_at_least_beta():
    rng = np.random.default_rng(11)
    params = Params(0.5, 0.8, 1.3, 2.0)
    n = np.arange(1, 16)
    g0 = SineSpectrum(2.0, rng.standard_normal(15) / n**3)
    g1 = SineSpectrum(2.0, rng.standard_normal(15) / n**3)
    t = np.linspace(0, 30, 301)
    sol = solve_homogeneous(LinearProblem(params, g0, g1), SpatialGrid(2.0, 63), t)
    rate, _ = fit_exponential_rate(sol.sup_norms, t, (15, 30))
    assert rate >= decay_constants(params).beta - 0.02


def test_small_time_single_mode_velocity():
    rep = small_time_limits(LinearProblem(UNIT, SIN1, SIN1), GRID, [1e-3, 1e-4])
    # H'(t) = (1 - t) e^{-t}, so |H' - 1| ~ 2t
    assert rep.sup_velocity_error[0] == pytest.approx(abs((1 - 1e-3) * math.exp(-1e-3) - 1) * np.max(np.sin(GRID.nodes)),
                                                      rel=1e-9)
    assert 5 <= rep.sup_velocity_error[0] / rep.sup_velocity_error[1] <= 20
    exact_star = abs((1 + 1e-3) * math.exp(-1e-3) - 1)
    assert rep.sup_star_error[0] == pytest.approx(exact_star * np.max(np.sin(GRID.nodes)), rel=1e-6)


def test_small_time_zero_data():
    rep = small_time_limits(LinearProblem(UNIT, ZERO, ZERO), GRID, [1e-2, 1e-3])
    assert not (rep.sup_u.any() or rep.sup_velocity_error.any() or rep.sup_star_error.any())


@pytest.mark.parametrize("times", [[1.0, 0.5], [-1.0], []])
def test_rejects_bad_times(times):
    with pytest.raises(ValueError):
        solve_homogeneous(LinearProblem(UNIT, SIN1, SIN1), GRID, times)


def test_rejects_mismatched_length_and_nonfinite_forcing():
    with pytest.raises(ValueError, match="ell"):
        LinearProblem(UNIT, SineSpectrum.zeros(1.0), ZERO)
    bad = ForcingSpec(lambda x, t: np.full_like(x, np.nan) if t > 0.5 else np.zeros_like(x))
    with pytest.raises(ValueError, match="non-finite"):
        solve_forced(LinearProblem(UNIT, ZERO, ZERO, bad), GRID, [1.0])
    with pytest.raises(ValueError):
        solve_forced(LinearProblem(UNIT, ZERO, ZERO), GRID, [1.0])


def test_solution_field_lookup():
    sol = SolutionField(GRID, [0.0, 0.5], np.zeros((2, 63)))
    assert sol.at(0.5).shape == (63,)
    with pytest.raises(KeyError):
        sol.at(0.25)
    with pytest.raises(ValueError):
        SolutionField(GRID, [0.0], np.zeros((2, 63)))

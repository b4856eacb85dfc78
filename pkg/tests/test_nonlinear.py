import math

import numpy as np
import pytest

from dissipative_strip.linear import ForcingSpec, LinearProblem, solve_forced
from dissipative_strip.modal import Params
from dissipative_strip.nonlinear import (PSGE, Custom, LinearForcing, MarchConfig, NonFiniteState,
                                         PicardConfig, PicardDidNotConverge, psge_bound, solve_march,
                                         solve_picard)
from dissipative_strip.sine import SineSpectrum, SpatialGrid

UNIT = Params(1.0, 1.0, 1.0, math.pi)
GRID = SpatialGrid(math.pi, 63)
ZERO = SineSpectrum.zeros(math.pi)
G1 = SineSpectrum.single_mode(math.pi, 1, 0.1)


@pytest.mark.parametrize("gamma, bound", [(0.0, 1.0), (0.5, 1.5), (-2.0, 3.0)])
def test_psge_bound(gamma, bound):
    assert psge_bound(PSGE(gamma)) == bound


def test_psge_bound_rejects_other_sources():
    with pytest.raises(TypeError):
        psge_bound(Custom(lambda x, t, u: u))


def test_psge_sign_convention():
    u = np.array([0.0, math.pi / 2])
    assert list(PSGE(0.5).evaluate(None, 0.0, u)) == [-0.5, 0.5]
    assert list(PSGE(0.5, bias_sign=1.0).evaluate(None, 0.0, u)) == [0.5, 1.5]
    with pytest.raises(ValueError):
        PSGE(0.5, bias_sign=2.0)


def test_zero_fixed_point_converges_at_once():
    sol, trace = solve_picard(UNIT, ZERO, ZERO, PSGE(0.0), GRID, 1.0)
    assert trace == [0.0]
    assert not sol.values.any()


def test_march_zero_data_zero_source():
    sol = solve_march(UNIT, ZERO, ZERO, PSGE(0.0), GRID, 2.0)
    assert not sol.values.any()
    assert not solve_march(UNIT, ZERO, ZERO, None, GRID, 1.0).values.any()


def test_picard_and_march_agree_for_psge():
    sol_p, trace = solve_picard(UNIT, ZERO, G1, PSGE(0.5), GRID, 1.0, PicardConfig(quadrature_dt=1e-3))
    sol_m = solve_march(UNIT, ZERO, G1, PSGE(0.5), GRID, 1.0, MarchConfig(dt=1e-3))
    assert np.allclose(sol_p.times, sol_m.times, rtol=0, atol=1e-12)
    assert np.max(np.abs(sol_p.values - sol_m.values)) <= 1e-4
    assert all(b < a for a, b in zip(trace[1:], trace[2:]))


def test_linear_source_one_picard_iteration():
    f = ForcingSpec(lambda x, t: math.exp(-t) * np.sin(2 * x))
    sol, trace = solve_picard(UNIT, ZERO, G1, LinearForcing(f), GRID, 1.0, PicardConfig(quadrature_dt=1e-2))
    ref = solve_forced(LinearProblem(UNIT, ZERO, G1, f), GRID, sol.times, quadrature_dt=1e-2)
    assert len(trace) == 1
    assert np.max(np.abs(sol.values - ref.values)) <= 1e-12


def test_march_matches_linear_solver():
    f = ForcingSpec(lambda x, t: math.exp(-t) * np.sin(2 * x))
    sol = solve_march(UNIT, ZERO, ZERO, LinearForcing(f), GRID, 2.0, MarchConfig(dt=1e-2))
    ref = solve_forced(LinearProblem(UNIT, ZERO, ZERO, f), GRID, sol.times, quadrature_dt=1e-2)
    assert np.max(np.abs(sol.values - ref.values)) <= 1e-6


def test_march_second_order():
    src = PSGE(0.5)
    ref = solve_march(UNIT, ZERO, G1, src, GRID, 1.0, MarchConfig(dt=1e-3, output_every=1000)).values[-1]
    errs = [np.max(np.abs(solve_march(UNIT, ZERO, G1, src, GRID, 1.0,
                                      MarchConfig(dt=dt, output_every=10**6)).values[-1] - ref))
            for dt in (0.1, 0.05)]
    assert math.log2(errs[0] / errs[1]) == pytest.approx(2.0, abs=0.3)


def test_march_output_thinning_keeps_final_time():
    sol = solve_march(UNIT, ZERO, G1, PSGE(0.5), GRID, 1.0, MarchConfig(dt=0.1, output_every=3))
    assert list(np.round(sol.times, 12)) == [0.0, 0.3, 0.6, 0.9, 1.0]


def test_picard_non_convergence_reports_trace():
    with pytest.raises(PicardDidNotConverge) as info:
        solve_picard(UNIT, ZERO, G1, PSGE(0.5), GRID, 1.0, PicardConfig(max_iter=2))
    assert len(info.value.trace) == 2


def test_march_detects_blow_up():
    explode = Custom(lambda x, t, u: -1e200 * (1 + u * u))
    with pytest.raises(NonFiniteState), np.errstate(over="ignore", invalid="ignore"):
        solve_march(UNIT, ZERO, G1, explode, GRID, 1.0, MarchConfig(dt=0.1))


@pytest.mark.parametrize("kw", [dict(dt=0), dict(corrector_iters=0), dict(output_every=0)])
def test_march_config_validation(kw):
    with pytest.raises(ValueError):
        MarchConfig(**kw)


@pytest.mark.parametrize("kw", [dict(tol=0), dict(max_iter=0), dict(quadrature_dt=-1)])
def test_picard_config_validation(kw):
    with pytest.raises(ValueError):
        PicardConfig(**kw)

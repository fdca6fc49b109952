"""Stroboscopic pulse-train maps on the phase-amplitude coordinates."""

import numpy as np
import pytest

from phamp.globalize import coordinates_of
from phamp.response import local_response
from phamp.strobe import (MAP_KINDS, FixedPointResult, StimulusSpec,
                          StrobePoint, apply_map, fixed_point, global_state,
                          iterate, prf_arf_finite)


def wrap(d):
    return (d + 0.5) % 1.0 - 0.5


def test_stimulus_validation():
    with pytest.raises(ValueError):
        StimulusSpec(eps=0.1, v=(1, 0, 0), n=0, t_s=0.001, t_p=1.0)
    with pytest.raises(ValueError):
        StimulusSpec(eps=0.1, v=(1, 0, 0), n=5, t_s=-1.0, t_p=1.0)
    stim = StimulusSpec(eps=0.1, v=(2, 0, 0), n=4, t_s=0.5, t_p=3.0)
    assert stim.t_total == pytest.approx(4 * 0.5 + 3.0)
    np.testing.assert_allclose(stim.direction, [2, 0, 0])


def test_zero_amplitude_train_is_free_flight(solved):
    """With eps = 0 every map must reduce to the time-T_total flow,
    i.e. theta advances by T_total/T and sigma_i contract."""
    sol = solved("rt")
    K = sol.K
    stim = StimulusSpec(eps=0.0, v=(1, 0, 0), n=3, t_s=0.01, t_p=2.0)
    start = StrobePoint(0.2, 0.05, 0.1)
    want_th = (0.2 + stim.t_total / K.T) % 1.0
    for kind in ("pa", "pa-lin"):
        out = apply_map(kind, StrobePoint(0.2, 0.05, 0.1), stim, K, sol.flow)
        assert abs(wrap(out.theta - want_th)) < 1e-6
        assert abs(out.sigma2 - 0.1 * np.exp(K.lam2 * stim.t_total)) < 1e-6
    out = apply_map("phase", StrobePoint(0.2, 0.0, 0.0), stim, K, sol.flow)
    assert abs(wrap(out.theta - want_th)) < 1e-9


def test_state_and_exact_pa_maps_agree(solved):
    """The state-space train and the exact phase-amplitude train are the
    same dynamics in different coordinates."""
    sol = solved("rt")
    K = sol.K
    stim = StimulusSpec(eps=-0.05, v=(1, 0, 0), n=5, t_s=0.001, t_p=8.394)
    start = StrobePoint(0.0, 0.0, 0.0,
                        x=global_state(K, 0.0, 0.0, 0.0, sol.flow))
    s_state = apply_map("state", StrobePoint(0.0, 0.0, 0.0, x=start.x.copy()),
                        stim, K, sol.flow)
    s_pa = apply_map("pa", start, stim, K, sol.flow)
    th, _, a2 = coordinates_of(K, s_state.x, flow=sol.flow)
    assert abs(wrap(th - s_pa.theta)) < 1e-6
    assert abs(a2 - s_pa.sigma2) < 1e-4


def test_linearized_map_tracks_exact_map_for_small_kicks(solved):
    sol = solved("rt")
    K = sol.K
    stim = StimulusSpec(eps=-0.01, v=(1, 0, 0), n=5, t_s=0.001, t_p=8.394)
    p_exact = apply_map("pa", StrobePoint(0.1, 0.0, 0.0), stim, K, sol.flow)
    p_lin = apply_map("pa-lin", StrobePoint(0.1, 0.0, 0.0), stim, K, sol.flow)
    assert abs(wrap(p_exact.theta - p_lin.theta)) < 5e-4
    assert abs(p_exact.sigma2 - p_lin.sigma2) < 5e-3


def test_iterate_returns_trajectory_with_states(solved):
    sol = solved("rt")
    stim = StimulusSpec(eps=-0.05, v=(1, 0, 0), n=2, t_s=0.001, t_p=8.394)
    traj = iterate("pa", StrobePoint(0.0, 0.0, 0.0), stim, sol.K, 3,
                   flow=sol.flow)
    assert len(traj) == 4
    for p in traj:
        assert p.x is not None and np.all(np.isfinite(p.x))


def test_phase_map_fixed_point(solved):
    sol = solved("rt")
    stim = StimulusSpec(eps=-0.1, v=(1, 0, 0), n=100, t_s=0.001, t_p=8.394)
    fp = fixed_point("phase", stim, sol.K, flow=sol.flow)
    assert fp.converged
    # self-consistency: applying the map reproduces the point
    out = apply_map("phase", StrobePoint(fp.theta, 0.0, 0.0), stim, sol.K,
                    sol.flow)
    assert abs(wrap(out.theta - fp.theta)) < 1e-7


def test_finite_kick_approaches_gradient_limit(solved):
    sol = solved("rt")
    K = sol.K
    theta, s1, s2 = 0.3, 0.02, 0.05
    g = local_response(K, theta, s1, s2)
    v = np.array([1.0, 0.0, 0.0])
    A = 1e-4
    dth, da1, da2 = prf_arf_finite(K, A, v, theta, s1, s2, flow=sol.flow)
    assert abs(dth / A - g.grad_theta @ v) < 1e-3 * max(1.0, abs(g.grad_theta @ v))
    assert abs(da2 / A - g.grad_sigma2 @ v) < 1e-2 * max(1.0, abs(g.grad_sigma2 @ v))
    assert prf_arf_finite(K, 0.0, v, theta, s1, s2, flow=sol.flow) == (0, 0, 0)

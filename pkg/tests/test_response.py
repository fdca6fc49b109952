"""Phase/amplitude response gradients: local inversion, series
expansion, adjoint and variational transport."""

import numpy as np
import pytest

from oracles import classical_iprc
from phamp.globalize import coordinates_of, response_at_state
from phamp.response import (local_response, propagate_response,
                            response_series, transport_response)

from test_solver import random_domain_points


def test_rows_invert_dk(solved):
    sol = solved("rt")
    rng = np.random.default_rng(21)
    for theta, s1, s2 in random_domain_points(sol, rng, 20):
        g = local_response(sol.K, theta, s1, s2)
        J = sol.K.jacobian(theta, s1, s2)
        np.testing.assert_allclose(g.rows @ J, np.eye(3), atol=1e-8)


def test_iprc_matches_classical_adjoint(solved):
    sol = solved("rt")
    K = sol.K
    thetas = np.array([0.05, 0.2, 0.45, 0.6, 0.85])
    grads, xs = classical_iprc(sol.model, K.fd.x0, K.T, thetas)
    for theta, z_ref, x_ref in zip(thetas, grads, xs):
        g = local_response(K, float(theta), 0.0, 0.0)
        assert np.linalg.norm(g.x - x_ref) < 1e-6 * max(1.0, np.linalg.norm(x_ref))
        rel = np.linalg.norm(g.grad_theta - z_ref) / np.linalg.norm(z_ref)
        assert rel < 1e-5


def test_gradient_normalizations_on_cycle(solved):
    """grad Theta . X = 1/T on the cycle, and grad Sigma_i . K_i = 1."""
    sol = solved("rt")
    K = sol.K
    for theta in (0.0, 0.33, 0.66):
        g = local_response(K, theta, 0.0, 0.0)
        assert abs(g.grad_theta @ sol.model(g.x) - 1.0 / K.T) < 1e-9 / K.T
        J = K.jacobian(theta, 0.0, 0.0)
        assert abs(g.grad_sigma1 @ J[:, 1] - 1.0) < 1e-8
        assert abs(g.grad_sigma2 @ J[:, 2] - 1.0) < 1e-8


def test_response_series_matches_pointwise_inverse(solved):
    sol = solved("rt")
    series = response_series(sol.K)
    rng = np.random.default_rng(22)
    for theta, s1, s2 in random_domain_points(sol, rng, 10, shrink=0.3):
        want = local_response(sol.K, theta, s1, s2).rows
        got = series(theta, s1, s2)
        assert np.max(np.abs(got - want)) < 1e-6 * max(1.0, np.max(np.abs(want)))


def test_backward_adjoint_and_forward_variational_agree(solved):
    """Transporting a local response backward three periods by the
    adjoint equations agrees with the forward variational identity."""
    sol = solved("rt")
    K, flow = sol.K, sol.flow
    dt = 3.0 * K.T
    # sigma_1 grows by e^{|lam1| 3T} ~ 1e4 going backward, so start from
    # small sigma_1 to keep the backward orbit inside the basin
    for theta, s1, s2 in ((0.1, 1e-4, 0.02), (0.6, -5e-5, 0.04)):
        g_loc = local_response(K, theta, s1, s2)
        back = propagate_response(sol.model, g_loc, dt, K.lam1, K.lam2, flow)
        fwd = transport_response(sol.model, back.x, dt, g_loc,
                                 K.lam1, K.lam2, flow)
        for a, b in ((back.grad_theta, fwd.grad_theta),
                     (back.grad_sigma1, fwd.grad_sigma1),
                     (back.grad_sigma2, fwd.grad_sigma2)):
            assert np.linalg.norm(a - b) / np.linalg.norm(b) < 1e-4


def test_response_at_state_reduces_to_local_inside_domain(solved):
    sol = solved("rt")
    K = sol.K
    theta, s1, s2 = 0.4, 0.1, -0.05
    x = K(theta, s1, s2)
    g = response_at_state(K, x, flow=sol.flow)
    want = local_response(K, theta, s1, s2)
    for a, b in ((g.grad_theta, want.grad_theta),
                 (g.grad_sigma1, want.grad_sigma1),
                 (g.grad_sigma2, want.grad_sigma2)):
        assert np.linalg.norm(a - b) / np.linalg.norm(b) < 1e-6


def test_gradients_match_finite_difference_of_coordinates(solved):
    """grad Theta . v from the series matches a central difference of
    the retrieved phase under a small kick along v."""
    sol = solved("rt")
    K, flow = sol.K, sol.flow
    theta, s1, s2 = 0.25, 0.08, 0.0
    g = local_response(K, theta, s1, s2)
    h = 1e-4
    v = np.array([1.0, 0.0, 0.0])
    tp, a1p, a2p = coordinates_of(K, g.x + h * v, flow=flow)
    tm, a1m, a2m = coordinates_of(K, g.x - h * v, flow=flow)
    dth = ((tp - tm + 0.5) % 1.0 - 0.5) / (2 * h)
    assert abs(dth - g.grad_theta @ v) < 1e-4 * max(1.0, abs(dth))
    assert abs((a1p - a1m) / (2 * h) - g.grad_sigma1 @ v) < 1e-3

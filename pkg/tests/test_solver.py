"""Fourier-Taylor invariance solver and its accuracy domain."""

import numpy as np
import pytest

from phamp.jets import term_exponents
from phamp.solver import AccuracyDomain, Parameterization


def random_domain_points(sol, rng, count, shrink=0.5):
    """(theta, s1, s2) samples with radius <= shrink * boundary radius."""
    pts = []
    while len(pts) < count:
        theta = rng.random()
        phi = 2.0 * np.pi * rng.random()
        r = shrink * sol.domain.radius(theta, phi) * rng.random()
        pts.append((theta, r * np.cos(phi), r * np.sin(phi)))
    return pts


def test_cycle_order_matches_orbit(solved):
    sol = solved("rt")
    K, flow = sol.K, sol.flow
    x0 = K(0.0, 0.0, 0.0)
    for theta in (0.1, 0.37, 0.81):
        np.testing.assert_allclose(K(theta, 0.0, 0.0),
                                   flow(x0, theta * K.T), atol=1e-7)


def test_invariance_residual_inside_domain(solved):
    sol = solved("rt")
    rng = np.random.default_rng(11)
    for theta, s1, s2 in random_domain_points(sol, rng, 20):
        e = np.linalg.norm(sol.K.residual(theta, s1, s2))
        assert e <= sol.model.e_tol


def test_conjugacy_one_period(solved):
    """Flowing one period equals the coordinate update
    (theta, s_i) -> (theta, s_i e^{lam_i T})."""
    sol = solved("rt")
    K, flow = sol.K, sol.flow
    rng = np.random.default_rng(12)
    for theta, s1, s2 in random_domain_points(sol, rng, 20):
        lhs = flow(K(theta, s1, s2), K.T)
        rhs = K(theta, s1 * np.exp(K.lam1 * K.T), s2 * np.exp(K.lam2 * K.T))
        assert np.linalg.norm(lhs - rhs) < 1e-6


def test_jacobian_matches_finite_differences(solved):
    sol = solved("rt")
    K = sol.K
    theta, s1, s2 = 0.3, 0.2, -0.1
    J = K.jacobian(theta, s1, s2)
    h = 1e-6
    J_fd = np.column_stack([
        (K(theta + h, s1, s2) - K(theta - h, s1, s2)) / (2 * h),
        (K(theta, s1 + h, s2) - K(theta, s1 - h, s2)) / (2 * h),
        (K(theta, s1, s2 + h) - K(theta, s1, s2 - h)) / (2 * h)])
    assert np.max(np.abs(J - J_fd)) < 1e-4 * max(1.0, np.max(np.abs(J)))


def test_save_load_roundtrip(solved, tmp_path):
    sol = solved("rt")
    sol.K.save(tmp_path)
    K2 = Parameterization.load(tmp_path, sol.model)
    assert np.array_equal(K2.coeffs, sol.K.coeffs)
    assert K2.T == sol.K.T and K2.lam1 == sol.K.lam1


def test_domain_shrinks_with_tighter_tolerance(solved):
    sol = solved("rt")
    loose = AccuracyDomain(sol.K, e_tol=sol.model.e_tol)
    tight = AccuracyDomain(sol.K, e_tol=0.5 * sol.model.e_tol)
    for theta, phi in ((0.0, 0.3), (0.4, 2.0), (0.7, 4.5)):
        assert tight.radius(theta, phi) <= loose.radius(theta, phi) * (1 + 1e-6)


def test_domain_radius_is_positive(solved):
    sol = solved("rt")
    for theta in (0.0, 0.25, 0.5, 0.75):
        b = sol.domain.boundary(theta)
        assert np.all(np.hypot(b[:, 0], b[:, 1]) > 0.0)


def test_synthetic_solution_is_exactly_first_order(solved):
    """A field linearly conjugate to the normal form has no genuine
    order >= 2 content: those coefficients must vanish at machine scale
    relative to the order-1 amplitudes."""
    sol = solved("synth")
    g = sol.K.diagnostics
    al, be = term_exponents(sol.K.L)
    high = (al + be) >= 2
    scale = np.max(g.coeff_max[~high])
    assert np.max(g.coeff_max[high]) < 1e-9 * scale


def test_synthetic_residual_at_machine_scale(solved):
    sol = solved("synth")
    g = sol.K.diagnostics
    assert np.max(g.order_l1) < 1e-9
    assert np.max(g.tail) < 1e-12

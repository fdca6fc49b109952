"""Independent reference computations used by the test suite.

Everything here is deliberately built on scipy's stock integrator
(DOP853 via solve_ivp), not on the package's own stepper, so that
agreement between the two is meaningful evidence of correctness.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

__all__ = ["flow_scipy", "monodromy_scipy", "classical_iprc", "fd_jacobian"]

_IVP_KW = dict(method="DOP853", rtol=1e-12, atol=1e-12)


def flow_scipy(model, x, dt):
    """Time-dt flow of the model field, integrated with scipy."""
    sol = solve_ivp(lambda t, y: model(y), (0.0, dt), np.asarray(x, float),
                    **_IVP_KW)
    return sol.y[:, -1]


def _aug_rhs(model):
    def rhs(t, y):
        x, phi = y[:3], y[3:].reshape(3, 3)
        return np.concatenate([model(x), (model.jac(x) @ phi).ravel()])
    return rhs


def monodromy_scipy(model, x0, T, t_eval=None):
    """(states, fundamental matrices) along one period from x0."""
    y0 = np.concatenate([np.asarray(x0, float), np.eye(3).ravel()])
    sol = solve_ivp(_aug_rhs(model), (0.0, T), y0, t_eval=t_eval, **_IVP_KW)
    xs = sol.y[:3].T
    phis = sol.y[3:].T.reshape(-1, 3, 3)
    return xs, phis


def classical_iprc(model, x0, T, thetas):
    """Phase-response curve on the cycle by the classical adjoint method.

    The gradient of the (unit-normalized) phase at gamma(theta T) is the
    left Floquet eigenvector of the monodromy matrix for multiplier 1,
    transported by Phi(t)^{-T} and normalized so grad . field = 1/T.
    Returns (len(thetas), 3) gradients and the cycle states.
    """
    thetas = np.asarray(thetas, dtype=float)
    xs, phis = monodromy_scipy(model, x0, T, t_eval=thetas * T)
    _, phis_full = monodromy_scipy(model, x0, T)
    M = phis_full[-1]
    w, V = np.linalg.eig(M.T)
    k = int(np.argmin(np.abs(w - 1.0)))
    z0 = np.real(V[:, k])
    z0 = z0 / (z0 @ model(np.asarray(x0, float))) / T
    grads = np.array([np.linalg.solve(phi.T, z0) for phi in phis])
    return grads, xs


def fd_jacobian(f, x, h=1e-6):
    """Central-difference Jacobian of a vector map."""
    x = np.asarray(x, dtype=float)
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.array(cols).T

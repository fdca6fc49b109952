"""Adaptive high-order Runge-Kutta integration compiled with numba.

The stepper is an explicit embedded 8th-order Dormand-Prince pair (the
dop853 tableau, with its combined 5th/3rd-order error estimate), run at
tolerance 1e-14 by default.  Three specialized drivers are provided:

* plain state flow,
* state + variational (fundamental matrix) flow,
* state + adjoint covectors (for response propagation along orbits).

All drivers accept t1 < t0 for backward integration.  Model right-hand
sides are numba kernels ``rhs(t, y, p, out)`` / ``jac(t, y, p, J)``.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dc

__all__ = ["Flow", "IntegrationError"]


class IntegrationError(RuntimeError):
    """Adaptive step-size underflow (typically finite-time blowup)."""

_A = np.ascontiguousarray(_dc.A[:12, :12])
_B = np.ascontiguousarray(_dc.B)
_C = np.ascontiguousarray(_dc.C[:12])
_E3 = np.ascontiguousarray(_dc.E3)
_E5 = np.ascontiguousarray(_dc.E5)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
_MAX_STEPS = 2_000_000     # attempts per call; turns runaway stiffness into an error


@njit(cache=True, inline="always")
def _error_norm(K, y, y_new, h, rtol, atol):
    n = y.shape[0]
    err5_sq = 0.0
    err3_sq = 0.0
    for i in range(n):
        scale = atol + rtol * max(abs(y[i]), abs(y_new[i]))
        e5 = 0.0
        e3 = 0.0
        for s in range(13):
            e5 += K[s, i] * _E5[s]
            e3 += K[s, i] * _E3[s]
        err5_sq += (e5 / scale) ** 2
        err3_sq += (e3 / scale) ** 2
    denom = err5_sq + 0.01 * err3_sq
    if denom <= 0.0:
        return 0.0
    return abs(h) * err5_sq / np.sqrt(denom * n)


@njit(cache=True)
def _advance_plain(rhs, p, t0, y, t1, rtol, atol, h_init):
    """Integrate y' = rhs to t1; returns (y(t1), last step size)."""
    n = y.shape[0]
    y = y.copy()
    t = t0
    span = t1 - t0
    if span == 0.0:
        return y, h_init
    direction = 1.0 if span > 0.0 else -1.0
    h = h_init if h_init * direction > 0.0 else 1e-6 * span
    K = np.empty((13, n))
    ys = np.empty(n)
    y_new = np.empty(n)
    rhs(t, y, p, K[0])
    steps = 0
    while (t1 - t) * direction > 0.0:
        steps += 1
        if steps > _MAX_STEPS:
            raise Exception("step budget exhausted in adaptive integrator")
        if abs(h) > abs(t1 - t):
            h = t1 - t
        # stages
        for s in range(1, 12):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += _A[s, j] * K[j, i]
                ys[i] = y[i] + h * acc
            rhs(t + _C[s] * h, ys, p, K[s])
        for i in range(n):
            acc = 0.0
            for j in range(12):
                acc += _B[j] * K[j, i]
            y_new[i] = y[i] + h * acc
        rhs(t + h, y_new, p, K[12])
        err = _error_norm(K, y, y_new, h, rtol, atol)
        if err <= 1.0:
            t = t + h
            for i in range(n):
                y[i] = y_new[i]
                K[0, i] = K[12, i]
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** (-0.125))
            h = h * max(_MIN_FACTOR, factor)
        else:
            h = h * max(_MIN_FACTOR, _SAFETY * err ** (-0.125))
            if abs(h) < 1e-14 * max(abs(t), 1.0):
                raise Exception("step size underflow in adaptive integrator")
    return y, h


@njit(cache=True)
def _advance_path(rhs, p, t0, y0, ts, rtol, atol):
    """Sample the orbit at the (monotone) times ts; returns (len(ts), n)."""
    n = y0.shape[0]
    out = np.empty((ts.shape[0], n))
    y = y0.copy()
    t = t0
    h = 1e-6 * (ts[-1] - t0) if ts[-1] != t0 else 1e-8
    for k in range(ts.shape[0]):
        y, h = _advance_plain(rhs, p, t, y, ts[k], rtol, atol, h)
        t = ts[k]
        out[k] = y
    return out


@njit(cache=True)
def _var_rhs(rhs, jac, p, t, Y, out, J):
    rhs(t, Y[:3], p, out[:3])
    jac(t, Y[:3], p, J)
    for i in range(3):
        for j in range(3):
            acc = 0.0
            for l in range(3):
                acc += J[i, l] * Y[3 + 3 * l + j]
            out[3 + 3 * i + j] = acc


@njit(cache=True)
def _advance_var(rhs, jac, p, t0, Y, t1, rtol, atol, h_init):
    """12-dim flow of (x, Phi) with Phi' = DX(x) Phi."""
    n = 12
    Y = Y.copy()
    t = t0
    span = t1 - t0
    if span == 0.0:
        return Y, h_init
    direction = 1.0 if span > 0.0 else -1.0
    h = h_init if h_init * direction > 0.0 else 1e-6 * span
    K = np.empty((13, n))
    ys = np.empty(n)
    y_new = np.empty(n)
    J = np.empty((3, 3))
    _var_rhs(rhs, jac, p, t, Y, K[0], J)
    steps = 0
    while (t1 - t) * direction > 0.0:
        steps += 1
        if steps > _MAX_STEPS:
            raise Exception("step budget exhausted in variational integrator")
        if abs(h) > abs(t1 - t):
            h = t1 - t
        for s in range(1, 12):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += _A[s, j] * K[j, i]
                ys[i] = Y[i] + h * acc
            _var_rhs(rhs, jac, p, t + _C[s] * h, ys, K[s], J)
        for i in range(n):
            acc = 0.0
            for j in range(12):
                acc += _B[j] * K[j, i]
            y_new[i] = Y[i] + h * acc
        _var_rhs(rhs, jac, p, t + h, y_new, K[12], J)
        err = _error_norm(K, Y, y_new, h, rtol, atol)
        if err <= 1.0:
            t = t + h
            for i in range(n):
                Y[i] = y_new[i]
                K[0, i] = K[12, i]
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** (-0.125))
            h = h * max(_MIN_FACTOR, factor)
        else:
            h = h * max(_MIN_FACTOR, _SAFETY * err ** (-0.125))
            if abs(h) < 1e-14 * max(abs(t), 1.0):
                raise Exception("step size underflow in variational integrator")
    return Y, h


@njit(cache=True)
def _var_path(rhs, jac, p, t0, Y0, ts, rtol, atol):
    out = np.empty((ts.shape[0], 12))
    Y = Y0.copy()
    t = t0
    h = 1e-6 * (ts[-1] - t0) if ts[-1] != t0 else 1e-8
    for k in range(ts.shape[0]):
        Y, h = _advance_var(rhs, jac, p, t, Y, ts[k], rtol, atol, h)
        t = ts[k]
        out[k] = Y
    return out


@njit(cache=True)
def _adj_rhs(rhs, jac, p, lam1, lam2, t, Y, out, J):
    rhs(t, Y[:3], p, out[:3])
    jac(t, Y[:3], p, J)
    # w_theta' = -DX^T w_theta ; w_i' = (lam_i - DX^T) w_i
    for i in range(3):
        a0 = 0.0
        a1 = 0.0
        a2 = 0.0
        for l in range(3):
            a0 -= J[l, i] * Y[3 + l]
            a1 -= J[l, i] * Y[6 + l]
            a2 -= J[l, i] * Y[9 + l]
        out[3 + i] = a0
        out[6 + i] = a1 + lam1 * Y[6 + i]
        out[9 + i] = a2 + lam2 * Y[9 + i]


@njit(cache=True)
def _advance_adj(rhs, jac, p, lam1, lam2, t0, Y, t1, rtol, atol, h_init):
    """12-dim flow of (x, grad_theta, grad_sigma1, grad_sigma2)."""
    n = 12
    Y = Y.copy()
    t = t0
    span = t1 - t0
    if span == 0.0:
        return Y, h_init
    direction = 1.0 if span > 0.0 else -1.0
    h = h_init if h_init * direction > 0.0 else 1e-6 * span
    K = np.empty((13, n))
    ys = np.empty(n)
    y_new = np.empty(n)
    J = np.empty((3, 3))
    _adj_rhs(rhs, jac, p, lam1, lam2, t, Y, K[0], J)
    steps = 0
    while (t1 - t) * direction > 0.0:
        steps += 1
        if steps > _MAX_STEPS:
            raise Exception("step budget exhausted in adjoint integrator")
        if abs(h) > abs(t1 - t):
            h = t1 - t
        for s in range(1, 12):
            for i in range(n):
                acc = 0.0
                for j in range(s):
                    acc += _A[s, j] * K[j, i]
                ys[i] = Y[i] + h * acc
            _adj_rhs(rhs, jac, p, lam1, lam2, t + _C[s] * h, ys, K[s], J)
        for i in range(n):
            acc = 0.0
            for j in range(12):
                acc += _B[j] * K[j, i]
            y_new[i] = Y[i] + h * acc
        _adj_rhs(rhs, jac, p, lam1, lam2, t + h, y_new, K[12], J)
        err = _error_norm(K, Y, y_new, h, rtol, atol)
        if err <= 1.0:
            t = t + h
            for i in range(n):
                Y[i] = y_new[i]
                K[0, i] = K[12, i]
            factor = _MAX_FACTOR if err == 0.0 else min(_MAX_FACTOR, _SAFETY * err ** (-0.125))
            h = h * max(_MIN_FACTOR, factor)
        else:
            h = h * max(_MIN_FACTOR, _SAFETY * err ** (-0.125))
            if abs(h) < 1e-14 * max(abs(t), 1.0):
                raise Exception("step size underflow in adjoint integrator")
    return Y, h


class Flow:
    """Convenience wrapper binding a model's numba kernels to the drivers."""

    def __init__(self, model, rtol: float = 1e-14, atol: float = 1e-14):
        self.model = model
        self.p = model.param_array()
        self.rtol = rtol
        self.atol = atol

    def __call__(self, x, dt: float, h_init: float = 0.0):
        try:
            y, _ = _advance_plain(self.model.rhs_nb, self.p, 0.0,
                                  np.asarray(x, dtype=float), float(dt),
                                  self.rtol, self.atol, h_init)
        except Exception as err:
            raise IntegrationError(str(err)) from None
        return y

    def path(self, x, ts):
        ts = np.asarray(ts, dtype=float)
        return _advance_path(self.model.rhs_nb, self.p, 0.0, np.asarray(x, dtype=float),
                             ts, self.rtol, self.atol)

    def with_variational(self, x, dt: float, phi0=None):
        Y = np.empty(12)
        Y[:3] = x
        Y[3:] = (np.eye(3) if phi0 is None else np.asarray(phi0, dtype=float)).ravel()
        try:
            Y, _ = _advance_var(self.model.rhs_nb, self.model.jac_nb, self.p, 0.0, Y,
                                float(dt), self.rtol, self.atol, 0.0)
        except Exception as err:
            raise IntegrationError(str(err)) from None
        return Y[:3], Y[3:].reshape(3, 3)

    def variational_path(self, x, ts):
        ts = np.asarray(ts, dtype=float)
        Y0 = np.empty(12)
        Y0[:3] = x
        Y0[3:] = np.eye(3).ravel()
        out = _var_path(self.model.rhs_nb, self.model.jac_nb, self.p, 0.0, Y0, ts,
                        self.rtol, self.atol)
        return out[:, :3], out[:, 3:].reshape(-1, 3, 3)

    def with_adjoint(self, x, w_theta, w_sig1, w_sig2, dt: float, lam1: float, lam2: float):
        Y = np.empty(12)
        Y[:3] = x
        Y[3:6] = w_theta
        Y[6:9] = w_sig1
        Y[9:12] = w_sig2
        try:
            Y, _ = _advance_adj(self.model.rhs_nb, self.model.jac_nb, self.p,
                                float(lam1), float(lam2), 0.0, Y, float(dt),
                                self.rtol, self.atol, 0.0)
        except Exception as err:
            raise IntegrationError(str(err)) from None
        return Y[:3], Y[3:6], Y[6:9], Y[9:12]

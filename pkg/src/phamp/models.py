"""Built-in 3D vector fields and the model registration interface.

Each model carries three evaluator flavours:

* ``field`` — a generic implementation written against the jet algebra
  helpers, so it evaluates on floats, on (N,)-sample grids, and on Jet2
  objects (this is what turns X(K(theta, sigma)) into Taylor-Fourier
  coefficients without symbolic differentiation);
* ``jacobian`` — the analytically coded DX, broadcasting over grids;
* ``rhs_nb``/``jac_nb`` — scalar numba kernels used by the adaptive
  integrator.

Calibrated constants (values the original model sources leave open):

* RT ``iapp = 5.0`` — reproduces the period T = 8.395 of the reference
  oscillation.
* HH ``iapp = 20.0`` — reproduces T = 7.586.
* WC_Syn coupling: (c1, c2, c3, c4) = (a, b, c, d) = (8, 16, 7, 3) with
  sigmoid slopes a_E = a_I = 2; this is the combination that reproduces
  the reference period 24.43, exponents (-0.445, -0.246) and equilibrium
  (0.272, 0.033, 0.198).  (tau_r from the published constant list is
  unused by the 3-variable system.)
* QIF uses +Delta/(pi tau_m) in the firing-rate equation (the standard
  Lorentzian mean-field form; it is the sign consistent with the
  reference equilibrium (R, V, S) = (0.018, -0.267, 0.018)).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np
from numba import njit

from .jets import jexp, jpow

__all__ = ["ModelSpec", "get_model", "make_linear_model", "MODEL_NAMES",
           "find_equilibrium"]


@dataclass(frozen=True)
class ModelSpec:
    name: str
    state_names: tuple[str, ...]
    voltage_index: int
    params: dict[str, float]
    param_order: tuple[str, ...]
    field: Callable
    jacobian: Callable
    rhs_nb: Callable
    jac_nb: Callable
    seed: np.ndarray
    period_hint: float
    omega_c: Callable
    b1: float = 1.0
    b2: float = 1.0
    e_tol: float = 1e-8

    @property
    def dimension(self) -> int:
        return 3

    def param_array(self) -> np.ndarray:
        return np.array([self.params[k] for k in self.param_order], dtype=float)

    def with_params(self, **overrides) -> "ModelSpec":
        unknown = set(overrides) - set(self.params)
        if unknown:
            raise KeyError(f"unknown parameters for model {self.name}: {sorted(unknown)}")
        import dataclasses

        return dataclasses.replace(self, params={**self.params, **overrides})

    def __call__(self, x):
        """Plain evaluation X(x) on a state vector or (3, N) grid."""
        x = np.asarray(x, dtype=float)
        out = np.stack([np.asarray(c, dtype=float) for c in self.field(tuple(x), self.params)])
        if not np.all(np.isfinite(out)):
            bad = int(np.argmax(~np.isfinite(out.reshape(3, -1)).all(axis=1)))
            raise FloatingPointError(f"non-finite field component {bad} for model {self.name}")
        return out

    def jac(self, x):
        """DX(x) as (3,3) for a state vector or (N,3,3) for a (3,N) grid."""
        x = np.asarray(x, dtype=float)
        rows = self.jacobian(tuple(x), self.params)
        if x.ndim == 1:
            return np.array([[np.asarray(e, dtype=float) + 0.0 for e in row] for row in rows], dtype=float)
        n = x.shape[1]
        out = np.empty((n, 3, 3))
        for i in range(3):
            for j in range(3):
                out[:, i, j] = rows[i][j]
        return out


# ---------------------------------------------------------------------------
# RT: thalamic neuron (V, h, r)
# ---------------------------------------------------------------------------

_RT_PARAMS = {
    "cm": 1.0, "gl": 0.05, "vl": -70.0, "gna": 3.0, "vna": 50.0,
    "gk": 5.0, "vk": -90.0, "gt": 5.0, "vt": 0.0, "iapp": 5.0,
}
_RT_ORDER = tuple(_RT_PARAMS)


def _rt_field(y, p):
    V, h, r = y
    minf = 1.0 / (1.0 + jexp(-(V + 37.0) / 7.0))
    hinf = 1.0 / (1.0 + jexp((V + 41.0) / 4.0))
    rinf = 1.0 / (1.0 + jexp((V + 84.0) / 4.0))
    pinf = 1.0 / (1.0 + jexp(-(V + 60.0) / 6.2))
    tau_r = 28.0 + jexp(-(V + 25.0) / 10.5)
    a_h = 0.128 * jexp(-(V + 46.0) / 18.0)
    b_h = 4.0 / (1.0 + jexp(-(V + 23.0) / 5.0))
    il = p["gl"] * (V - p["vl"])
    ina = p["gna"] * minf * minf * minf * h * (V - p["vna"])
    gate_k = 0.75 * (1.0 - h)
    ik = p["gk"] * gate_k * gate_k * gate_k * gate_k * (V - p["vk"])
    it = p["gt"] * pinf * pinf * r * (V - p["vt"])
    dv = (-il - ina - ik - it + p["iapp"]) / p["cm"]
    dh = (hinf - h) * (a_h + b_h)
    dr = (rinf - r) / tau_r
    return dv, dh, dr


def _rt_jacobian(y, p):
    V, h, r = y
    ex = np.exp
    minf = 1.0 / (1.0 + ex(-(V + 37.0) / 7.0))
    hinf = 1.0 / (1.0 + ex((V + 41.0) / 4.0))
    rinf = 1.0 / (1.0 + ex((V + 84.0) / 4.0))
    pinf = 1.0 / (1.0 + ex(-(V + 60.0) / 6.2))
    tau_r = 28.0 + ex(-(V + 25.0) / 10.5)
    a_h = 0.128 * ex(-(V + 46.0) / 18.0)
    sb = 1.0 / (1.0 + ex(-(V + 23.0) / 5.0))
    b_h = 4.0 * sb
    dminf = minf * (1.0 - minf) / 7.0
    dhinf = -hinf * (1.0 - hinf) / 4.0
    drinf = -rinf * (1.0 - rinf) / 4.0
    dpinf = pinf * (1.0 - pinf) / 6.2
    dtau_r = -ex(-(V + 25.0) / 10.5) / 10.5
    da_h = -a_h / 18.0
    db_h = 4.0 * sb * (1.0 - sb) / 5.0
    gate_k = 0.75 * (1.0 - h)
    cm = p["cm"]
    f11 = (-p["gl"]
           - p["gna"] * h * (3.0 * minf ** 2 * dminf * (V - p["vna"]) + minf ** 3)
           - p["gk"] * gate_k ** 4
           - p["gt"] * r * (2.0 * pinf * dpinf * (V - p["vt"]) + pinf ** 2)) / cm
    f12 = (-p["gna"] * minf ** 3 * (V - p["vna"])
           + p["gk"] * 4.0 * gate_k ** 3 * 0.75 * (V - p["vk"])) / cm
    f13 = -p["gt"] * pinf ** 2 * (V - p["vt"]) / cm
    f21 = dhinf * (a_h + b_h) + (hinf - h) * (da_h + db_h)
    f22 = -(a_h + b_h) + 0.0 * V
    f31 = drinf / tau_r - (rinf - r) * dtau_r / tau_r ** 2
    f33 = -1.0 / tau_r
    z = 0.0 * V
    return ((f11, f12, f13), (f21, f22, z), (f31, z, f33))


@njit(cache=True)
def _rt_rhs_nb(t, y, p, out):
    V, h, r = y[0], y[1], y[2]
    minf = 1.0 / (1.0 + np.exp(-(V + 37.0) / 7.0))
    hinf = 1.0 / (1.0 + np.exp((V + 41.0) / 4.0))
    rinf = 1.0 / (1.0 + np.exp((V + 84.0) / 4.0))
    pinf = 1.0 / (1.0 + np.exp(-(V + 60.0) / 6.2))
    tau_r = 28.0 + np.exp(-(V + 25.0) / 10.5)
    a_h = 0.128 * np.exp(-(V + 46.0) / 18.0)
    b_h = 4.0 / (1.0 + np.exp(-(V + 23.0) / 5.0))
    il = p[1] * (V - p[2])
    ina = p[3] * minf * minf * minf * h * (V - p[4])
    gk4 = 0.75 * (1.0 - h)
    ik = p[5] * gk4 * gk4 * gk4 * gk4 * (V - p[6])
    it = p[7] * pinf * pinf * r * (V - p[8])
    out[0] = (-il - ina - ik - it + p[9]) / p[0]
    out[1] = (hinf - h) * (a_h + b_h)
    out[2] = (rinf - r) / tau_r


@njit(cache=True)
def _rt_jac_nb(t, y, p, J):
    V, h, r = y[0], y[1], y[2]
    minf = 1.0 / (1.0 + np.exp(-(V + 37.0) / 7.0))
    hinf = 1.0 / (1.0 + np.exp((V + 41.0) / 4.0))
    rinf = 1.0 / (1.0 + np.exp((V + 84.0) / 4.0))
    pinf = 1.0 / (1.0 + np.exp(-(V + 60.0) / 6.2))
    tau_r = 28.0 + np.exp(-(V + 25.0) / 10.5)
    a_h = 0.128 * np.exp(-(V + 46.0) / 18.0)
    sb = 1.0 / (1.0 + np.exp(-(V + 23.0) / 5.0))
    b_h = 4.0 * sb
    dminf = minf * (1.0 - minf) / 7.0
    dhinf = -hinf * (1.0 - hinf) / 4.0
    drinf = -rinf * (1.0 - rinf) / 4.0
    dpinf = pinf * (1.0 - pinf) / 6.2
    dtau_r = -np.exp(-(V + 25.0) / 10.5) / 10.5
    da_h = -a_h / 18.0
    db_h = 4.0 * sb * (1.0 - sb) / 5.0
    gk4 = 0.75 * (1.0 - h)
    cm = p[0]
    J[0, 0] = (-p[1]
               - p[3] * h * (3.0 * minf * minf * dminf * (V - p[4]) + minf * minf * minf)
               - p[5] * gk4 ** 4
               - p[7] * r * (2.0 * pinf * dpinf * (V - p[8]) + pinf * pinf)) / cm
    J[0, 1] = (-p[3] * minf ** 3 * (V - p[4]) + p[5] * 4.0 * gk4 ** 3 * 0.75 * (V - p[6])) / cm
    J[0, 2] = -p[7] * pinf * pinf * (V - p[8]) / cm
    J[1, 0] = dhinf * (a_h + b_h) + (hinf - h) * (da_h + db_h)
    J[1, 1] = -(a_h + b_h)
    J[1, 2] = 0.0
    J[2, 0] = drinf / tau_r - (rinf - r) * dtau_r / (tau_r * tau_r)
    J[2, 1] = 0.0
    J[2, 2] = -1.0 / tau_r


# ---------------------------------------------------------------------------
# HH: reduced Hodgkin-Huxley (V, n, h)
# ---------------------------------------------------------------------------

_HH_PARAMS = {
    "cm": 1.0, "gl": 0.1, "vl": -75.6, "gna": 30.0, "vna": 55.0,
    "gk": 9.0, "vk": -77.0, "iapp": 20.0,
}
_HH_ORDER = tuple(_HH_PARAMS)


def _hh_field(y, p):
    V, n, h = y
    minf = 1.0 / (1.0 + jexp(-(V + 40.0) / 9.0))
    ninf = 1.0 / (1.0 + jexp(-(V + 53.0) / 15.0))
    hinf = 1.0 / (1.0 + jexp((V + 62.0) / 7.0))
    u_h = (67.0 + V) / 20.0
    u_n = (79.0 + V) / 50.0
    tau_h = 7.4 * jexp(-(u_h * u_h)) + 1.2
    tau_n = 4.7 * jexp(-(u_n * u_n)) + 1.1
    il = p["gl"] * (V - p["vl"])
    ina = p["gna"] * minf * minf * minf * h * (V - p["vna"])
    ik = p["gk"] * n * n * n * n * (V - p["vk"])
    dv = (-il - ina - ik + p["iapp"]) / p["cm"]
    dn = (ninf - n) / tau_n
    dh = (hinf - h) / tau_h
    return dv, dn, dh


def _hh_jacobian(y, p):
    V, n, h = y
    ex = np.exp
    minf = 1.0 / (1.0 + ex(-(V + 40.0) / 9.0))
    ninf = 1.0 / (1.0 + ex(-(V + 53.0) / 15.0))
    hinf = 1.0 / (1.0 + ex((V + 62.0) / 7.0))
    tau_h = 7.4 * ex(-(((67.0 + V) / 20.0) ** 2)) + 1.2
    tau_n = 4.7 * ex(-(((79.0 + V) / 50.0) ** 2)) + 1.1
    dminf = minf * (1.0 - minf) / 9.0
    dninf = ninf * (1.0 - ninf) / 15.0
    dhinf = -hinf * (1.0 - hinf) / 7.0
    dtau_h = -(tau_h - 1.2) * 2.0 * (67.0 + V) / 400.0
    dtau_n = -(tau_n - 1.1) * 2.0 * (79.0 + V) / 2500.0
    cm = p["cm"]
    f11 = (-p["gl"]
           - p["gna"] * h * (3.0 * minf ** 2 * dminf * (V - p["vna"]) + minf ** 3)
           - p["gk"] * n ** 4) / cm
    f12 = -p["gk"] * 4.0 * n ** 3 * (V - p["vk"]) / cm
    f13 = -p["gna"] * minf ** 3 * (V - p["vna"]) / cm
    f21 = dninf / tau_n - (ninf - n) * dtau_n / tau_n ** 2
    f22 = -1.0 / tau_n
    f31 = dhinf / tau_h - (hinf - h) * dtau_h / tau_h ** 2
    f33 = -1.0 / tau_h
    z = 0.0 * V
    return ((f11, f12, f13), (f21, f22, z), (f31, z, f33))


@njit(cache=True)
def _hh_rhs_nb(t, y, p, out):
    V, n, h = y[0], y[1], y[2]
    minf = 1.0 / (1.0 + np.exp(-(V + 40.0) / 9.0))
    ninf = 1.0 / (1.0 + np.exp(-(V + 53.0) / 15.0))
    hinf = 1.0 / (1.0 + np.exp((V + 62.0) / 7.0))
    uh = (67.0 + V) / 20.0
    un = (79.0 + V) / 50.0
    tau_h = 7.4 * np.exp(-uh * uh) + 1.2
    tau_n = 4.7 * np.exp(-un * un) + 1.1
    il = p[1] * (V - p[2])
    ina = p[3] * minf * minf * minf * h * (V - p[4])
    ik = p[5] * n * n * n * n * (V - p[6])
    out[0] = (-il - ina - ik + p[7]) / p[0]
    out[1] = (ninf - n) / tau_n
    out[2] = (hinf - h) / tau_h


@njit(cache=True)
def _hh_jac_nb(t, y, p, J):
    V, n, h = y[0], y[1], y[2]
    minf = 1.0 / (1.0 + np.exp(-(V + 40.0) / 9.0))
    ninf = 1.0 / (1.0 + np.exp(-(V + 53.0) / 15.0))
    hinf = 1.0 / (1.0 + np.exp((V + 62.0) / 7.0))
    uh = (67.0 + V) / 20.0
    un = (79.0 + V) / 50.0
    tau_h = 7.4 * np.exp(-uh * uh) + 1.2
    tau_n = 4.7 * np.exp(-un * un) + 1.1
    dminf = minf * (1.0 - minf) / 9.0
    dninf = ninf * (1.0 - ninf) / 15.0
    dhinf = -hinf * (1.0 - hinf) / 7.0
    dtau_h = -(tau_h - 1.2) * 2.0 * (67.0 + V) / 400.0
    dtau_n = -(tau_n - 1.1) * 2.0 * (79.0 + V) / 2500.0
    cm = p[0]
    J[0, 0] = (-p[1]
               - p[3] * h * (3.0 * minf * minf * dminf * (V - p[4]) + minf ** 3)
               - p[5] * n ** 4) / cm
    J[0, 1] = -p[5] * 4.0 * n ** 3 * (V - p[6]) / cm
    J[0, 2] = -p[3] * minf ** 3 * (V - p[4]) / cm
    J[1, 0] = dninf / tau_n - (ninf - n) * dtau_n / (tau_n * tau_n)
    J[1, 1] = -1.0 / tau_n
    J[1, 2] = 0.0
    J[2, 0] = dhinf / tau_h - (hinf - h) * dtau_h / (tau_h * tau_h)
    J[2, 1] = 0.0
    J[2, 2] = -1.0 / tau_h


# ---------------------------------------------------------------------------
# WC_Syn: Wilson-Cowan with synaptic dynamics (E, I, s)
# ---------------------------------------------------------------------------

_WC_PARAMS = {
    "P": 4.5, "Q": 0.0, "c1": 8.0, "c2": 16.0, "c3": 7.0, "c4": 3.0,
    "ae": 2.0, "the": 4.0, "ai": 2.0, "thi": 3.0,
    "tau_e": 3.0, "tau_i": 3.0, "tau_d": 6.0,
}
_WC_ORDER = tuple(_WC_PARAMS)


def _wc_field(y, p):
    E, I, s = y
    xe = p["c1"] * E - p["c2"] * s + p["P"]
    xi = p["c3"] * E - p["c4"] * s + p["Q"]
    de = 1.0 / (1.0 + jexp(-p["ae"] * (xe - p["the"])))
    di = 1.0 / (1.0 + jexp(-p["ai"] * (xi - p["thi"])))
    return ((-E + de) / p["tau_e"], (-I + di) / p["tau_i"], (-s + p["tau_d"] * I) / p["tau_d"])


def _wc_jacobian(y, p):
    E, I, s = y
    ex = np.exp
    xe = p["c1"] * E - p["c2"] * s + p["P"]
    xi = p["c3"] * E - p["c4"] * s + p["Q"]
    de = 1.0 / (1.0 + ex(-p["ae"] * (xe - p["the"])))
    di = 1.0 / (1.0 + ex(-p["ai"] * (xi - p["thi"])))
    dde = p["ae"] * de * (1.0 - de)
    ddi = p["ai"] * di * (1.0 - di)
    z = 0.0 * E
    return (
        ((-1.0 + dde * p["c1"]) / p["tau_e"], z, -dde * p["c2"] / p["tau_e"]),
        (ddi * p["c3"] / p["tau_i"], -1.0 / p["tau_i"] + z, -ddi * p["c4"] / p["tau_i"]),
        (z, 1.0 + z, -1.0 / p["tau_d"] + z),
    )


@njit(cache=True)
def _wc_rhs_nb(t, y, p, out):
    E, I, s = y[0], y[1], y[2]
    xe = p[2] * E - p[3] * s + p[0]
    xi = p[4] * E - p[5] * s + p[1]
    de = 1.0 / (1.0 + np.exp(-p[6] * (xe - p[7])))
    di = 1.0 / (1.0 + np.exp(-p[8] * (xi - p[9])))
    out[0] = (-E + de) / p[10]
    out[1] = (-I + di) / p[11]
    out[2] = (-s + p[12] * I) / p[12]


@njit(cache=True)
def _wc_jac_nb(t, y, p, J):
    E, I, s = y[0], y[1], y[2]
    xe = p[2] * E - p[3] * s + p[0]
    xi = p[4] * E - p[5] * s + p[1]
    de = 1.0 / (1.0 + np.exp(-p[6] * (xe - p[7])))
    di = 1.0 / (1.0 + np.exp(-p[8] * (xi - p[9])))
    dde = p[6] * de * (1.0 - de)
    ddi = p[8] * di * (1.0 - di)
    J[0, 0] = (-1.0 + dde * p[2]) / p[10]
    J[0, 1] = 0.0
    J[0, 2] = -dde * p[3] / p[10]
    J[1, 0] = ddi * p[4] / p[11]
    J[1, 1] = -1.0 / p[11]
    J[1, 2] = -ddi * p[5] / p[11]
    J[2, 0] = 0.0
    J[2, 1] = 1.0
    J[2, 2] = -1.0 / p[12]


# ---------------------------------------------------------------------------
# QIF: quadratic integrate-and-fire mean field (R, V, S)
# ---------------------------------------------------------------------------

_QIF_PARAMS = {"tau_m": 10.0, "delta": 0.3, "J": 21.0, "theta": 4.0, "tau_d": 5.0}
_QIF_ORDER = tuple(_QIF_PARAMS)


def _qif_field(y, p):
    R, V, S = y
    tm = p["tau_m"]
    dr = (p["delta"] / (np.pi * tm) + 2.0 * R * V) / tm
    dv = (V * V - (np.pi * tm * R) * (np.pi * tm * R) - p["J"] * tm * S + p["theta"]) / tm
    ds = (-S + R) / p["tau_d"]
    return dr, dv, ds


def _qif_jacobian(y, p):
    R, V, S = y
    tm = p["tau_m"]
    z = 0.0 * R
    return (
        (2.0 * V / tm, 2.0 * R / tm, z),
        (-2.0 * np.pi ** 2 * tm * R, 2.0 * V / tm, -p["J"] + z),
        (1.0 / p["tau_d"] + z, z, -1.0 / p["tau_d"] + z),
    )


@njit(cache=True)
def _qif_rhs_nb(t, y, p, out):
    R, V, S = y[0], y[1], y[2]
    tm = p[0]
    out[0] = (p[1] / (np.pi * tm) + 2.0 * R * V) / tm
    out[1] = (V * V - (np.pi * tm * R) ** 2 - p[2] * tm * S + p[3]) / tm
    out[2] = (-S + R) / p[4]


@njit(cache=True)
def _qif_jac_nb(t, y, p, J):
    R, V, S = y[0], y[1], y[2]
    tm = p[0]
    J[0, 0] = 2.0 * V / tm
    J[0, 1] = 2.0 * R / tm
    J[0, 2] = 0.0
    J[1, 0] = -2.0 * np.pi * np.pi * tm * R
    J[1, 1] = 2.0 * V / tm
    J[1, 2] = -p[2]
    J[2, 0] = 1.0 / p[4]
    J[2, 1] = 0.0
    J[2, 2] = -1.0 / p[4]


# ---------------------------------------------------------------------------
# synth: analytically conjugate test oscillator (x1, x2, x3)
#
# In polar-like coordinates theta' = 1/T, r2' = lam2 r2, x3' = lam1 x3 with
# the cycle embedded as the unit circle in the (x1, x2) plane; the
# phase-amplitude conjugacy is exactly linear, so every Taylor coefficient
# of order >= 2 vanishes.
# ---------------------------------------------------------------------------

_SY_PARAMS = {"T": 2.7, "lam1": -1.0, "lam2": -0.35}
_SY_ORDER = tuple(_SY_PARAMS)


def _sy_field(y, p):
    x1, x2, x3 = y
    w = 2.0 * np.pi / p["T"]
    inv_rho = jpow(x1 * x1 + x2 * x2, -0.5)
    g = p["lam2"] * (1.0 - inv_rho)
    return (-w * x2 + g * x1, w * x1 + g * x2, p["lam1"] * x3)


def _sy_jacobian(y, p):
    x1, x2, x3 = y
    w = 2.0 * np.pi / p["T"]
    rho2 = x1 * x1 + x2 * x2
    inv_rho = rho2 ** -0.5
    inv_rho3 = inv_rho / rho2
    lam2 = p["lam2"]
    z = 0.0 * x1
    return (
        (lam2 * (1.0 - inv_rho + x1 * x1 * inv_rho3), -w + lam2 * x1 * x2 * inv_rho3, z),
        (w + lam2 * x1 * x2 * inv_rho3, lam2 * (1.0 - inv_rho + x2 * x2 * inv_rho3), z),
        (z, z, p["lam1"] + z),
    )


@njit(cache=True)
def _sy_rhs_nb(t, y, p, out):
    x1, x2, x3 = y[0], y[1], y[2]
    w = 2.0 * np.pi / p[0]
    inv_rho = 1.0 / np.sqrt(x1 * x1 + x2 * x2)
    g = p[2] * (1.0 - inv_rho)
    out[0] = -w * x2 + g * x1
    out[1] = w * x1 + g * x2
    out[2] = p[1] * x3


@njit(cache=True)
def _sy_jac_nb(t, y, p, J):
    x1, x2, x3 = y[0], y[1], y[2]
    w = 2.0 * np.pi / p[0]
    rho2 = x1 * x1 + x2 * x2
    inv_rho = 1.0 / np.sqrt(rho2)
    inv_rho3 = inv_rho / rho2
    lam2 = p[2]
    J[0, 0] = lam2 * (1.0 - inv_rho + x1 * x1 * inv_rho3)
    J[0, 1] = -w + lam2 * x1 * x2 * inv_rho3
    J[0, 2] = 0.0
    J[1, 0] = w + lam2 * x1 * x2 * inv_rho3
    J[1, 1] = lam2 * (1.0 - inv_rho + x2 * x2 * inv_rho3)
    J[1, 2] = 0.0
    J[2, 0] = 0.0
    J[2, 1] = 0.0
    J[2, 2] = p[1]


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------


def _box_rt(x):
    return 0.0 <= x[1] <= 1.0 and 0.0 <= x[2] <= 1.0


def _box_hh(x):
    return 0.0 <= x[1] <= 1.0 and 0.0 <= x[2] <= 1.0 and x[0] < 60.0


def _box_wc(x):
    return 0.0 <= x[0] <= 1.0 and 0.0 <= x[1] <= 1.0 and 0.0 <= x[2] <= 1.0


def _box_qif(x):
    return x[0] >= 0.0 and x[2] >= 0.0 and -6.0 < x[1] < 6.0


def _box_all(x):
    return True


_REGISTRY: dict[str, ModelSpec] = {}


def _register(spec: ModelSpec) -> None:
    _REGISTRY[spec.name] = spec


_register(ModelSpec(
    name="rt", state_names=("V", "h", "r"), voltage_index=0,
    params=_RT_PARAMS, param_order=_RT_ORDER,
    field=_rt_field, jacobian=_rt_jacobian, rhs_nb=_rt_rhs_nb, jac_nb=_rt_jac_nb,
    seed=np.array([-65.0, 0.4, 0.05]), period_hint=8.4, omega_c=_box_rt,
    b1=0.5, b2=0.5, e_tol=1e-8,
))
_register(ModelSpec(
    name="hh", state_names=("V", "n", "h"), voltage_index=0,
    params=_HH_PARAMS, param_order=_HH_ORDER,
    field=_hh_field, jacobian=_hh_jacobian, rhs_nb=_hh_rhs_nb, jac_nb=_hh_jac_nb,
    seed=np.array([-60.0, 0.3, 0.3]), period_hint=7.6, omega_c=_box_hh,
    b1=2.0, b2=2.0, e_tol=1e-6,
))
_register(ModelSpec(
    name="wcsyn", state_names=("E", "I", "s"), voltage_index=0,
    params=_WC_PARAMS, param_order=_WC_ORDER,
    field=_wc_field, jacobian=_wc_jacobian, rhs_nb=_wc_rhs_nb, jac_nb=_wc_jac_nb,
    seed=np.array([0.4, 0.1, 0.3]), period_hint=24.4, omega_c=_box_wc,
    b1=1.0, b2=1.0, e_tol=1e-8,
))
_register(ModelSpec(
    name="qif", state_names=("R", "V", "S"), voltage_index=1,
    params=_QIF_PARAMS, param_order=_QIF_ORDER,
    field=_qif_field, jacobian=_qif_jacobian, rhs_nb=_qif_rhs_nb, jac_nb=_qif_jac_nb,
    seed=np.array([0.1, 1.0, 0.1]), period_hint=27.6, omega_c=_box_qif,
    b1=0.2, b2=1.0, e_tol=1e-8,
))
_register(ModelSpec(
    name="synth", state_names=("x1", "x2", "x3"), voltage_index=0,
    params=_SY_PARAMS, param_order=_SY_ORDER,
    field=_sy_field, jacobian=_sy_jacobian, rhs_nb=_sy_rhs_nb, jac_nb=_sy_jac_nb,
    seed=np.array([1.3, 0.0, 0.2]), period_hint=2.7, omega_c=_box_all,
    b1=1.0, b2=1.0, e_tol=1e-8,
))

MODEL_NAMES = tuple(_REGISTRY)


def get_model(name: str) -> ModelSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(MODEL_NAMES)}") from None


def find_equilibrium(model: ModelSpec, guess, tol: float = 1e-12) -> np.ndarray:
    """Equilibrium X(x) = 0 near the guess, by Newton with the exact
    Jacobian."""
    from scipy.optimize import root

    sol = root(model, np.asarray(guess, dtype=float), jac=model.jac,
               method="hybr", tol=tol)
    if not sol.success or np.linalg.norm(model(sol.x)) > 1e-8:
        raise RuntimeError(
            f"no equilibrium found near {guess} for model {model.name}")
    return sol.x


def make_linear_model(A: np.ndarray) -> ModelSpec:
    """Constant-coefficient test field x' = A x (no limit cycle)."""
    A = np.asarray(A, dtype=float)

    def fld(y, p):
        return tuple(A[i, 0] * y[0] + A[i, 1] * y[1] + A[i, 2] * y[2] for i in range(3))

    def jac(y, p):
        z = 0.0 * y[0]
        return tuple(tuple(A[i, j] + z for j in range(3)) for i in range(3))

    a_flat = A.ravel().copy()

    @njit(cache=False)
    def rhs_nb(t, y, p, out):
        for i in range(3):
            out[i] = p[3 * i] * y[0] + p[3 * i + 1] * y[1] + p[3 * i + 2] * y[2]

    @njit(cache=False)
    def jac_nb(t, y, p, J):
        for i in range(3):
            for j in range(3):
                J[i, j] = p[3 * i + j]

    params = {f"a{i}{j}": A[i, j] for i in range(3) for j in range(3)}
    return ModelSpec(
        name="linear", state_names=("x1", "x2", "x3"), voltage_index=0,
        params=params, param_order=tuple(params),
        field=fld, jacobian=jac, rhs_nb=rhs_nb, jac_nb=jac_nb,
        seed=np.zeros(3), period_hint=1.0, omega_c=_box_all,
    )

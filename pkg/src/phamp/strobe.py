"""Pulse-train perturbations and stroboscopic maps.

The stimulus is a T_total-periodic train of n delta pulses eps*v
separated by t_s, followed by a silent gap t_p.  One stroboscopic
iterate (per forcing period) is available in five descriptions:

* "state":  F(x) = phi_{t_p}( f^n(x) ) with f(x) = phi_{t_s}(x + eps v),
  by direct integration of the unperturbed field between kicks;
* "pa":     the same map expressed exactly in phase-amplitude
  coordinates, using coordinate retrieval after the train and the exact
  free flight theta += t_p/T, sigma_i *= e^{lam_i t_p};
* "pa-lin": the first-order kick map
      theta' = theta + eps grad Theta(K(theta, sigma)) . v + t_s/T,
      sigma_i' = (sigma_i + eps grad Sigma_i(K(theta, sigma)) . v) e^{lam_i t_s},
  with the response gradients evaluated anywhere in the basin;
* "slow":   the pa-lin map restricted to the slow manifold (sigma_1 = 0,
  only sigma_2 kept);
* "phase":  the classical kicked-phase circle map (sigma = 0, iPRC).

States K(theta, sigma) beyond the local domain are reached by flowing
K-bar backward whole periods; gradients there are obtained by the
forward variational transport along the same arc.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .integrate import Flow, IntegrationError
from .globalize import CoordinateError, coordinates_of
from .response import ResponseEval, local_response, transport_response
from .solver import Parameterization

__all__ = ["StimulusSpec", "StrobePoint", "FixedPointResult", "MAP_KINDS",
           "apply_map", "iterate", "fixed_point", "prf_arf_finite",
           "global_state", "global_response", "StrobeError"]

MAP_KINDS = ("state", "pa", "pa-lin", "slow", "phase")


class StrobeError(RuntimeError):
    pass


@dataclass(frozen=True)
class StimulusSpec:
    """Train of n pulses eps*v separated by t_s, then a gap t_p."""
    eps: float
    v: tuple[float, float, float]
    n: int
    t_s: float
    t_p: float

    def __post_init__(self):
        if self.t_s <= 0.0:
            raise ValueError("interpulse time t_s must be positive")
        if self.n < 1:
            raise ValueError("need at least one pulse per train")

    @property
    def t_total(self) -> float:
        return self.n * self.t_s + self.t_p

    @property
    def direction(self) -> np.ndarray:
        return np.asarray(self.v, dtype=float)


@dataclass
class StrobePoint:
    theta: float
    sigma1: float
    sigma2: float
    x: np.ndarray | None = None


@dataclass
class FixedPointResult:
    kind: str
    theta: float
    sigma1: float
    sigma2: float
    x: np.ndarray
    converged: bool
    iterations: int
    residual: float


# ---------------------------------------------------------------------------
# evaluation of K and its response gradients at arbitrary amplitudes
# ---------------------------------------------------------------------------

def _local_depth(K: Parameterization, theta: float, s1: float, s2: float,
                 e_tol: float, m_cap: int, hint: int = 0) -> int:
    """Smallest m >= 0 whose forward image (sigma_i e^{lam_i m T}) lies
    in the local accuracy domain.  `hint` (e.g. the previous kick's
    depth) just shortens the scan."""
    def ok(m):
        a1 = s1 * np.exp(K.lam1 * m * K.T)
        a2 = s2 * np.exp(K.lam2 * m * K.T)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                e = K.residual(theta, a1, a2)
        except FloatingPointError:
            return False    # far outside the series domain
        return bool(np.all(np.isfinite(e)) and np.linalg.norm(e) <= e_tol)

    m = min(max(int(hint), 0), m_cap)
    if ok(m):
        while m > 0 and ok(m - 1):
            m -= 1
        return m
    while m < m_cap:
        m += 1
        if ok(m):
            return m
    raise StrobeError(
        f"amplitudes ({s1:.3g}, {s2:.3g}) unreachable within {m_cap} "
        f"backward periods")


def global_state(K: Parameterization, theta: float, s1: float, s2: float,
                 flow: Flow | None = None, e_tol: float | None = None,
                 m_cap: int = 100) -> np.ndarray:
    """K(theta, sigma) for amplitudes possibly beyond the local domain."""
    flow = flow or Flow(K.model)
    e_tol = K.model.e_tol if e_tol is None else e_tol
    m = _local_depth(K, theta, s1, s2, e_tol, m_cap)
    x = K(theta, s1 * np.exp(K.lam1 * m * K.T), s2 * np.exp(K.lam2 * m * K.T))
    return flow(x, -m * K.T) if m > 0 else x


def global_response(K: Parameterization, theta: float, s1: float, s2: float,
                    flow: Flow | None = None, e_tol: float | None = None,
                    m_cap: int = 100) -> ResponseEval:
    """Response gradients at K(theta, sigma), anywhere in the basin.

    The state is reached by a backward whole-period flight; the
    gradients are then pulled back by the forward variational transport
    (Phi^T with the e^{-lam_i m T} factors), which keeps the relative
    error small where backward adjoint integration would amplify it.
    """
    flow = flow or Flow(K.model)
    e_tol = K.model.e_tol if e_tol is None else e_tol
    m = _local_depth(K, theta, s1, s2, e_tol, m_cap)
    return _response_at_depth(K, theta, s1, s2, m, flow)


def _response_at_depth(K: Parameterization, theta: float, s1: float,
                       s2: float, m: int, flow: Flow) -> ResponseEval:
    loc = local_response(K, theta, s1 * np.exp(K.lam1 * m * K.T),
                         s2 * np.exp(K.lam2 * m * K.T))
    if m == 0:
        loc.theta, loc.sigma1, loc.sigma2 = theta % 1.0, s1, s2
        return loc
    x = flow(loc.x, -m * K.T)
    out = transport_response(K.model, x, m * K.T, loc, K.lam1, K.lam2,
                             flow=flow)
    out.theta, out.sigma1, out.sigma2 = theta % 1.0, s1, s2
    return out


# ---------------------------------------------------------------------------
# one stroboscopic iterate per description
# ---------------------------------------------------------------------------

def _loose_tol(K: Parameterization) -> float:
    """Residual tolerance for state reconstruction inside the kick maps.

    A wider local domain shortens the backward flight by several periods,
    trading a ~1e-4 series-truncation error for exponentially smaller
    backward error amplification — far inside the first-order kick map's
    own accuracy class.
    """
    return max(K.model.e_tol, 1e-4)


def _state_train(x: np.ndarray, stim: StimulusSpec, flow: Flow) -> np.ndarray:
    v = stim.direction
    for _ in range(stim.n):
        x = flow(x + stim.eps * v, stim.t_s)
    return x


def _lin_train(K: Parameterization, flow: Flow, stim: StimulusSpec,
               th: float, s1: float, s2: float, slow_only: bool):
    """Train of first-order kicks in phase-amplitude coordinates.

    The response gradients are re-evaluated at K(theta, sigma) of the
    running iterate before every kick (the kicks displace the state by
    n*eps in total, so carrying the gradients across the train would
    lose the first-order accuracy of the map).
    """
    v = stim.direction
    tol = _loose_tol(K)
    e1, e2 = np.exp(K.lam1 * stim.t_s), np.exp(K.lam2 * stim.t_s)
    m = 0
    for _ in range(stim.n):
        m = _local_depth(K, th, s1, s2, tol, 100, hint=m)
        g = _response_at_depth(K, th, s1, s2, m, flow)
        th = (th + stim.eps * (g.grad_theta @ v) + stim.t_s / K.T) % 1.0
        if not slow_only:
            s1 = (s1 + stim.eps * (g.grad_sigma1 @ v)) * e1
        s2 = (s2 + stim.eps * (g.grad_sigma2 @ v)) * e2
    return th, s1, s2


def _free_flight(K: Parameterization, theta, s1, s2, dt: float):
    return ((theta + dt / K.T) % 1.0,
            s1 * np.exp(K.lam1 * dt), s2 * np.exp(K.lam2 * dt))


def apply_map(kind: str, point: StrobePoint, stim: StimulusSpec,
              K: Parameterization, flow: Flow | None = None) -> StrobePoint:
    """One train-plus-gap iteration of the chosen stroboscopic map."""
    flow = flow or Flow(K.model)
    v = stim.direction
    try:
        if kind == "state":
            x = point.x
            if x is None:
                x = global_state(K, point.theta, point.sigma1, point.sigma2,
                                 flow, e_tol=_loose_tol(K))
            x = flow(_state_train(x, stim, flow), stim.t_p)
            return StrobePoint(np.nan, np.nan, np.nan, x=x)

        if kind == "pa":
            # the kicked map is exact, so the train in coordinates equals
            # the train in states followed by coordinate retrieval; the
            # state is carried along as the iterate representative so
            # that retrieval round-off never feeds back into the orbit
            x = point.x
            if x is None:
                x = global_state(K, point.theta, point.sigma1, point.sigma2,
                                 flow, e_tol=_loose_tol(K))
            x = _state_train(x, stim, flow)
            th, s1, s2 = coordinates_of(K, x, flow=flow)
            th, s1, s2 = _free_flight(K, th, s1, s2, stim.t_p)
            return StrobePoint(th, s1, s2, x=flow(x, stim.t_p))

        if kind == "pa-lin":
            th, s1, s2 = _lin_train(K, flow, stim, point.theta, point.sigma1,
                                    point.sigma2, slow_only=False)
            th, s1, s2 = _free_flight(K, th, s1, s2, stim.t_p)
            return StrobePoint(th, s1, s2)

        if kind == "slow":
            th, _, s2 = _lin_train(K, flow, stim, point.theta, 0.0,
                                   point.sigma2, slow_only=True)
            th, _, s2 = _free_flight(K, th, 0.0, s2, stim.t_p)
            return StrobePoint(th, 0.0, s2)

        if kind == "phase":
            th = point.theta
            for _ in range(stim.n):
                g = local_response(K, th, 0.0, 0.0)
                th = (th + stim.eps * g.grad_theta @ v + stim.t_s / K.T) % 1.0
            th = (th + stim.t_p / K.T) % 1.0
            return StrobePoint(th, 0.0, 0.0)
    except (IntegrationError, CoordinateError) as err:
        raise StrobeError(f"{kind} map iterate failed: {err}") from None
    raise ValueError(f"unknown map kind {kind!r}; choose from {MAP_KINDS}")


def iterate(kind: str, start: StrobePoint, stim: StimulusSpec,
            K: Parameterization, iters: int, flow: Flow | None = None,
            with_states: bool = True) -> list[StrobePoint]:
    """Trajectory [start, map(start), ..., map^iters(start)] with both
    coordinate and state representations filled in."""
    flow = flow or Flow(K.model)
    p = StrobePoint(start.theta, start.sigma1, start.sigma2, start.x)
    _complete(K, flow, p, with_states)
    out = [p]
    for _ in range(iters):
        p = apply_map(kind, p, stim, K, flow)
        _complete(K, flow, p, with_states)
        out.append(p)
    return out


def _complete(K: Parameterization, flow: Flow, p: StrobePoint,
              with_states: bool) -> None:
    if np.isnan(p.theta) and p.x is not None:
        p.theta, p.sigma1, p.sigma2 = coordinates_of(K, p.x, flow=flow)
    elif p.x is None and with_states:
        p.x = global_state(K, p.theta, p.sigma1, p.sigma2, flow)


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------

def _to_vec(kind: str, p: StrobePoint) -> np.ndarray:
    if kind == "state":
        return np.asarray(p.x, dtype=float)
    if kind in ("pa", "pa-lin"):
        return np.array([p.theta, p.sigma1, p.sigma2])
    if kind == "slow":
        return np.array([p.theta, p.sigma2])
    return np.array([p.theta])


def _from_vec(kind: str, u: np.ndarray) -> StrobePoint:
    if kind == "state":
        return StrobePoint(np.nan, np.nan, np.nan, x=np.asarray(u))
    if kind in ("pa", "pa-lin"):
        return StrobePoint(u[0] % 1.0, u[1], u[2])
    if kind == "slow":
        return StrobePoint(u[0] % 1.0, 0.0, u[1])
    return StrobePoint(u[0] % 1.0, 0.0, 0.0)


def _wrap_diff(kind: str, du: np.ndarray) -> np.ndarray:
    du = du.copy()
    if kind != "state":        # first component is the phase, wrap to [-.5,.5)
        du[0] = (du[0] + 0.5) % 1.0 - 0.5
    return du


def fixed_point(kind: str, stim: StimulusSpec, K: Parameterization,
                guess: StrobePoint | None = None, flow: Flow | None = None,
                tol: float = 1e-8, max_iter: int = 400) -> FixedPointResult:
    """Fixed point of the chosen stroboscopic map.

    Direct iteration first (the maps are strong contractions near the
    attractor); if the tolerance is not met, Newton with a
    finite-difference Jacobian of the displacement map.
    """
    flow = flow or Flow(K.model)
    p = guess or StrobePoint(0.0, 0.0, 0.0)
    if kind == "state" and p.x is None:
        p.x = global_state(K, p.theta, p.sigma1, p.sigma2, flow,
                           e_tol=_loose_tol(K))
    u = _to_vec(kind, p)
    res = np.inf
    d_prev = None
    fallback = None            # last plainly-iterated point, for overshoots
    for it in range(1, max_iter + 1):
        try:
            u_new = _to_vec(kind, apply_map(kind, _from_vec(kind, u), stim, K,
                                            flow))
        except StrobeError:
            if fallback is None:
                raise
            # extrapolation overshot out of the basin: back off
            u = fallback
            fallback = None
            d_prev = None
            continue
        fallback = None
        d = _wrap_diff(kind, u_new - u)
        res = float(np.linalg.norm(d))
        u = u_new
        if res < tol:
            return _fp_result(kind, u, K, flow, True, it, res)
        # geometric extrapolation: the maps contract through a dominant
        # e^{lam2 T_total} mode, so accelerate once the ratio stabilizes
        if d_prev is not None:
            denom = float(d_prev @ d_prev)
            r = float(d @ d_prev) / denom if denom > 0.0 else 0.0
            if 0.0 < r < 0.95:
                fallback = u
                u = u + d * (r / (1.0 - r))
                d_prev = None
                continue
        d_prev = d

    # Newton on g(u) = map(u) - u
    def g(w):
        w_new = _to_vec(kind, apply_map(kind, _from_vec(kind, w), stim, K,
                                        flow))
        return _wrap_diff(kind, w_new - w)

    scale = np.maximum(np.abs(u), 1.0)
    for it2 in range(30):
        r = g(u)
        res = float(np.linalg.norm(r))
        if res < tol:
            return _fp_result(kind, u, K, flow, True, max_iter + it2, res)
        J = np.empty((u.size, u.size))
        for j in range(u.size):
            h = 1e-7 * scale[j]
            e = np.zeros(u.size)
            e[j] = h
            J[:, j] = (g(u + e) - r) / h
        u = u - np.linalg.solve(J, r)
    return _fp_result(kind, u, K, flow, False, max_iter + 30, res)


def _fp_result(kind, u, K, flow, converged, iterations, residual):
    p = _from_vec(kind, u)
    _complete(K, flow, p, with_states=True)
    return FixedPointResult(kind=kind, theta=p.theta, sigma1=p.sigma1,
                            sigma2=p.sigma2, x=p.x, converged=converged,
                            iterations=iterations, residual=residual)


# ---------------------------------------------------------------------------
# finite-amplitude response
# ---------------------------------------------------------------------------

def prf_arf_finite(K: Parameterization, amplitude: float, v, theta: float,
                   s1: float, s2: float, flow: Flow | None = None
                   ) -> tuple[float, float, float]:
    """Exact phase/amplitude shifts from the single kick x -> x + A v.

    Returns (dTheta, dSigma1, dSigma2); the infinitesimal limit A -> 0
    recovers the response gradients dotted with v.
    """
    flow = flow or Flow(K.model)
    if amplitude == 0.0:
        return 0.0, 0.0, 0.0
    x = global_state(K, theta, s1, s2, flow)
    try:
        th, a1, a2 = coordinates_of(
            K, x + amplitude * np.asarray(v, dtype=float), flow=flow)
    except (IntegrationError, CoordinateError) as err:
        raise StrobeError(f"kicked point left the basin: {err}") from None
    return ((th - theta + 0.5) % 1.0 - 0.5, a1 - s1, a2 - s2)

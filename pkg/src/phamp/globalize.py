"""Globalization of isochrons, isostables and the slow manifold.

The local parameterization K-bar is valid only in the accuracy domain
Omega_loc around the cycle.  Surfaces are extended by backward
integration in whole periods: a point K-bar(theta, s1, s2) flowed by
-nT keeps its phase theta while its amplitudes grow by e^{-lam_i n T}.
Two sweep algorithms produce curves with a guaranteed maximum spacing
delta_max between consecutive points:

* slow-manifold leaf S^theta (sigma_1 = 0): sweep sigma_2 towards the
  domain boundary, then deepen (n -> n+1) and continue from the image
  sigma_max e^{lam2 T} of the previous band's endpoint;
* isochron I_theta: from each slow-leaf anchor (sigma_2 seed, depth
  N_k), sweep sigma_1 in both signs at fixed depth, with the same
  accept-or-halve spacing control and the same deepening rule.

Isostable surfaces Sigma_i = c are obtained from a local leaf
Sigma_i = c* by the closed-form backward time t = ln(c/c*)/lam_i.

The inverse problem - retrieving (theta, sigma) and responses for an
arbitrary basin state - is solved in the numerically stable direction:
flow forward a whole number of periods until inside Omega_loc, invert
K-bar there by Newton, and pull the amplitudes (and, for responses, the
gradients via the transposed variational flow) back to the start.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .integrate import Flow, IntegrationError
from .models import ModelSpec
from .response import ResponseEval, local_response, propagate_response
from .solver import AccuracyDomain, Parameterization

__all__ = ["GlobalizationConfig", "ManifoldPoint", "ManifoldAtlas",
           "coordinates_of", "response_at_state", "grow_slow_leaf",
           "grow_isochron", "grow_isostable", "CoordinateError"]


class CoordinateError(RuntimeError):
    pass


@dataclass
class GlobalizationConfig:
    delta_max: float | None = None      # default: 1% of cycle bbox diagonal
    max_points: int = 4000              # per branch, safety bound
    max_depth: int = 60                 # backward periods per branch
    attach_response: bool = False
    min_dsigma: float = 1e-14


def default_delta_max(K: Parameterization) -> float:
    box = K.fd.gamma.max(axis=1) - K.fd.gamma.min(axis=1)
    return 0.01 * float(np.linalg.norm(box))


@dataclass
class ManifoldPoint:
    x: np.ndarray
    theta: float
    sigma1: float
    sigma2: float
    n_periods: int
    response: ResponseEval | None = None


@dataclass
class ManifoldAtlas:
    kind: str                   # "isochron" | "isostable" | "slow_leaf"
    model_name: str
    label: dict
    points: list[ManifoldPoint] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)

    def states(self) -> np.ndarray:
        return np.array([p.x for p in self.points])

    def save(self, path) -> None:
        meta = " ".join(f"{k}={v:.17g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in self.label.items())
        with open(Path(path), "w") as fh:
            fh.write(f"# object={self.kind} {meta} model={self.model_name}\n")
            fh.write("# x1 x2 x3 theta sigma1 sigma2 Nk"
                     " gradTheta_1 gradTheta_2 gradTheta_3"
                     " gradSigma1_1 gradSigma1_2 gradSigma1_3"
                     " gradSigma2_1 gradSigma2_2 gradSigma2_3\n")
            for p in self.points:
                cols = [*p.x, p.theta, p.sigma1, p.sigma2]
                row = " ".join(f"{v:.17g}" for v in cols) + f" {p.n_periods}"
                if p.response is not None:
                    r = p.response
                    row += " " + " ".join(
                        f"{v:.17g}" for v in (*r.grad_theta, *r.grad_sigma1,
                                              *r.grad_sigma2))
                fh.write(row + "\n")

    @classmethod
    def load(cls, path) -> "ManifoldAtlas":
        path = Path(path)
        with open(path) as fh:
            header = fh.readline().strip().lstrip("# ").split()
            fields = dict(tok.split("=", 1) for tok in header)
            kind = fields.pop("object")
            model_name = fields.pop("model")
            label = {k: float(v) if "." in v or "e" in v else int(v)
                     for k, v in fields.items()}
            fh.readline()  # column header
            points = []
            for line in fh:
                vals = line.split()
                x = np.array([float(v) for v in vals[:3]])
                th, s1, s2 = (float(v) for v in vals[3:6])
                nk = int(vals[6])
                resp = None
                if len(vals) >= 16:
                    g = [float(v) for v in vals[7:16]]
                    resp = ResponseEval(x=x, grad_theta=np.array(g[0:3]),
                                        grad_sigma1=np.array(g[3:6]),
                                        grad_sigma2=np.array(g[6:9]))
                points.append(ManifoldPoint(x, th, s1, s2, nk, resp))
        return cls(kind=kind, model_name=model_name, label=label, points=points)


# ---------------------------------------------------------------------------
# coordinate retrieval (forward direction, numerically stable)
# ---------------------------------------------------------------------------

def _newton_invert(K: Parameterization, x: np.ndarray,
                   tol: float = 1e-12, max_iter: int = 40):
    """Solve K-bar(theta, s1, s2) = x; initial guess from the nearest
    cycle node.  Returns (theta, s1, s2, residual_norm) or None."""
    d2 = np.sum((K.fd.gamma - x[:, None]) ** 2, axis=0)
    i0 = int(np.argmin(d2))
    u = np.array([i0 / K.n, 0.0, 0.0])
    scale = max(1.0, float(np.linalg.norm(x)))
    for _ in range(max_iter):
        r = K(u[0], u[1], u[2]) - x
        try:
            step = np.linalg.solve(K.jacobian(u[0], u[1], u[2]), r)
        except np.linalg.LinAlgError:
            return None
        u -= step
        u[0] %= 1.0
        if not np.all(np.isfinite(u)):
            return None
        if np.linalg.norm(step) < tol:
            res = np.linalg.norm(K(u[0], u[1], u[2]) - x)
            if res < 1e-8 * scale:
                return u[0], u[1], u[2], res
            return None
    return None


def _in_domain(K: Parameterization, theta, s1, s2, e_tol) -> bool:
    e = K.residual(theta, s1, s2)
    return bool(np.all(np.isfinite(e)) and np.linalg.norm(e) <= e_tol)


def coordinates_of(K: Parameterization, x, flow: Flow | None = None,
                   m_max: int = 200, e_tol: float | None = None
                   ) -> tuple[float, float, float]:
    """(Theta, Sigma_1, Sigma_2) of a basin state.

    Flows forward whole periods until the state enters Omega_loc (so
    the phase is unchanged), inverts K-bar there, and pulls the
    amplitudes back by e^{-lam_i m T}.
    """
    flow = flow or Flow(K.model)
    e_tol = K.model.e_tol if e_tol is None else e_tol
    y = np.asarray(x, dtype=float)
    for m in range(m_max + 1):
        sol = _newton_invert(K, y)
        if sol is not None and _in_domain(K, sol[0], sol[1], sol[2], e_tol):
            th, s1, s2, _ = sol
            return (th % 1.0,
                    s1 * np.exp(-K.lam1 * m * K.T),
                    s2 * np.exp(-K.lam2 * m * K.T))
        y = flow(y, K.T)
        if not np.all(np.isfinite(y)):
            raise CoordinateError("trajectory left the basin")
    raise CoordinateError(f"no Omega_loc entry within {m_max} periods")


def response_at_state(K: Parameterization, x, flow: Flow | None = None,
                      m_max: int = 200, e_tol: float | None = None
                      ) -> ResponseEval:
    """Response gradients at an arbitrary basin state.

    Forward-flows into Omega_loc (co-integrating the variational
    matrix), inverts DK-bar there, and transports the rows back through
    Phi^T with the e^{-lam_i m T} amplitude factors.
    """
    flow = flow or Flow(K.model)
    e_tol = K.model.e_tol if e_tol is None else e_tol
    x = np.asarray(x, dtype=float)
    y = x.copy()
    Phi = np.eye(3)
    for m in range(m_max + 1):
        sol = _newton_invert(K, y)
        if sol is not None and _in_domain(K, sol[0], sol[1], sol[2], e_tol):
            th, s1, s2, _ = sol
            loc = local_response(K, th, s1, s2)
            dt = m * K.T
            return ResponseEval(
                x=x,
                grad_theta=Phi.T @ loc.grad_theta,
                grad_sigma1=np.exp(-K.lam1 * dt) * (Phi.T @ loc.grad_sigma1),
                grad_sigma2=np.exp(-K.lam2 * dt) * (Phi.T @ loc.grad_sigma2),
                theta=th % 1.0,
                sigma1=s1 * np.exp(-K.lam1 * dt),
                sigma2=s2 * np.exp(-K.lam2 * dt),
            )
        y, Phi = flow.with_variational(y, K.T, Phi)
        if not np.all(np.isfinite(y)):
            raise CoordinateError("trajectory left the basin")
    raise CoordinateError(f"no Omega_loc entry within {m_max} periods")


# ---------------------------------------------------------------------------
# sweep algorithms
# ---------------------------------------------------------------------------

def _emit(K: Parameterization, model: ModelSpec, flow: Flow,
          theta: float, s1: float, s2: float, n: int,
          attach_response: bool) -> ManifoldPoint:
    x_int = K(theta, s1, s2)
    x = flow(x_int, -n * K.T) if n > 0 else x_int
    resp = None
    if attach_response:
        loc = local_response(K, theta, s1, s2)
        resp = (propagate_response(model, loc, n * K.T, K.lam1, K.lam2,
                                   flow=flow) if n > 0 else loc)
        resp.theta = theta % 1.0
        resp.sigma1 = s1 * np.exp(-K.lam1 * n * K.T)
        resp.sigma2 = s2 * np.exp(-K.lam2 * n * K.T)
    return ManifoldPoint(x=x, theta=theta % 1.0,
                         sigma1=s1 * np.exp(-K.lam1 * n * K.T),
                         sigma2=s2 * np.exp(-K.lam2 * n * K.T),
                         n_periods=n, response=resp)


def _sweep_branch(K: Parameterization, domain: AccuracyDomain, theta: float,
                  sigma_max: float, cfg: GlobalizationConfig, flow: Flow,
                  delta_max: float, fixed_sigma1: float | None = None,
                  start_depth: int = 0, fixed_sigma2: float | None = None,
                  points: list | None = None, limit_fn=None,
                  diagnostics: list | None = None) -> list[ManifoldPoint]:
    """Accept-or-halve sweep of one amplitude coordinate towards
    sigma_max, deepening by whole backward periods on exhaustion.

    fixed_sigma1 = 0.0 sweeps sigma_2 (slow leaf); fixed_sigma2 = c
    sweeps sigma_1 at a given sigma_2 seed (isochron).
    """
    model, omega_c = K.model, K.model.omega_c
    sweep_s2 = fixed_sigma1 is not None
    lam_deep = K.lam2
    out = points if points is not None else []
    n = start_depth
    sigma = 0.0
    seed2 = fixed_sigma2
    dsig = 0.8 * sigma_max
    last = out[-1].x if out else None
    while len(out) < cfg.max_points and n - start_depth < cfg.max_depth:
        # exhausted the band [sigma, sigma_max]: deepen one period
        if abs(sigma + dsig) > abs(sigma_max) or dsig == 0.0:
            if sweep_s2:
                sigma = sigma_max * np.exp(lam_deep * K.T)
            else:
                seed2 = seed2 * np.exp(lam_deep * K.T)
                sigma = sigma * np.exp(K.lam1 * K.T)
                if limit_fn is not None:
                    sigma_max = np.sign(sigma_max) * limit_fn(seed2)
                    if sigma_max == 0.0:
                        break
            n += 1
            dsig = 0.8 * (sigma_max - sigma)
            continue
        cand = sigma + dsig
        s1 = fixed_sigma1 if sweep_s2 else cand
        s2 = cand if sweep_s2 else seed2
        try:
            p = _emit(K, model, flow, theta, s1, s2, n, cfg.attach_response)
        except IntegrationError:
            # the backward flight escaped to infinity in finite time: the
            # surface leaves the basin here, stop this branch
            if diagnostics is not None:
                diagnostics.append(
                    f"branch truncated at theta={theta:.6g}, depth n={n}: "
                    f"backward trajectory blowup")
            break
        if last is not None and np.linalg.norm(p.x - last) > delta_max:
            dsig *= 0.5
            if abs(dsig) < cfg.min_dsigma:
                # backward amplification e^{|lam1| n T} of seed error makes
                # the spacing bound unattainable at this depth: stop branch
                if diagnostics is not None:
                    diagnostics.append(
                        f"branch truncated at theta={theta:.6g}, depth n={n}: "
                        f"spacing bound {delta_max:.3g} unattainable")
                break
            continue
        if not omega_c(p.x):
            break
        out.append(p)
        last = p.x
        sigma = cand
    return out


def grow_slow_leaf(K: Parameterization, domain: AccuracyDomain, theta: float,
                   cfg: GlobalizationConfig | None = None,
                   flow: Flow | None = None) -> ManifoldAtlas:
    """Leaf S^theta of the slow manifold (sigma_1 = 0), both sigma_2 signs."""
    cfg = cfg or GlobalizationConfig()
    flow = flow or Flow(K.model)
    delta_max = cfg.delta_max or default_delta_max(K)
    atlas = ManifoldAtlas(kind="slow_leaf", model_name=K.model.name,
                          label={"theta": float(theta)})
    base = _emit(K, K.model, flow, theta, 0.0, 0.0, 0, cfg.attach_response)
    for phi in (0.5 * np.pi, 1.5 * np.pi):
        sigma_max = domain.radius(theta, phi) * (1.0 if phi < np.pi else -1.0)
        branch = _sweep_branch(K, domain, theta, sigma_max, cfg, flow,
                               delta_max, fixed_sigma1=0.0,
                               points=[base] if phi < np.pi else
                                      [ManifoldPoint(base.x, base.theta, 0.0,
                                                     0.0, 0)],
                               diagnostics=atlas.diagnostics)
        if phi < np.pi:
            atlas.points.extend(branch)
        else:
            atlas.points.extend(branch[1:])  # skip the duplicated cycle point
    return atlas


def grow_isochron(K: Parameterization, domain: AccuracyDomain, theta: float,
                  slow_leaf: ManifoldAtlas | None = None,
                  cfg: GlobalizationConfig | None = None,
                  flow: Flow | None = None) -> ManifoldAtlas:
    """Isochron I_theta: sigma_1 sweeps (both signs) anchored on the
    slow-leaf points (sigma_2 seed and backward depth N_k)."""
    cfg = cfg or GlobalizationConfig()
    flow = flow or Flow(K.model)
    delta_max = cfg.delta_max or default_delta_max(K)
    if slow_leaf is None:
        slow_leaf = grow_slow_leaf(K, domain, theta, cfg, flow)
    atlas = ManifoldAtlas(kind="isochron", model_name=K.model.name,
                          label={"theta": float(theta)})
    atlas.points.extend(slow_leaf.points)
    for anchor in slow_leaf.points:
        seed2 = anchor.sigma2 * np.exp(K.lam2 * anchor.n_periods * K.T)
        for sgn in (1.0, -1.0):
            smax = sgn * _sigma1_limit(K, domain, theta, seed2)
            if smax == 0.0:
                continue
            branch = _sweep_branch(
                K, domain, theta, smax, cfg, flow, delta_max,
                fixed_sigma2=seed2, start_depth=anchor.n_periods,
                points=[anchor],
                limit_fn=lambda s2: _sigma1_limit(K, domain, theta, s2),
                diagnostics=atlas.diagnostics)
            atlas.points.extend(branch[1:])
    return atlas


def _sigma1_limit(K: Parameterization, domain: AccuracyDomain, theta: float,
                  s2: float, rel_tol: float = 1e-3) -> float:
    """Largest sigma_1 with (theta, sigma_1, s2) still inside Omega_loc."""
    e_tol = domain.e_tol
    if not _in_domain(K, theta, 0.0, s2, e_tol):
        return 0.0
    lo, hi = 0.0, None
    r = 1e-3
    for _ in range(120):
        if not _in_domain(K, theta, r, s2, e_tol):
            hi = r
            break
        lo = r
        r *= 2.0
    if hi is None:
        return lo
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if _in_domain(K, theta, mid, s2, e_tol):
            lo = mid
        else:
            hi = mid
    return lo


def grow_isostable(K: Parameterization, domain: AccuracyDomain, index: int,
                   c: float, cfg: GlobalizationConfig | None = None,
                   flow: Flow | None = None, n_theta: int = 64,
                   n_other: int = 17, amp_max: float = 1e8) -> ManifoldAtlas:
    """Isostable surface A^i_c = {Sigma_i = c}.

    A local leaf {Sigma_i = c*} inside Omega_loc is mapped onto the
    target by the exact backward time t = ln(c/c*)/lam_i (t <= 0); the
    remaining coordinates (theta and the other amplitude) parameterize
    the leaf.  c = 0 with i = 1 is the slow manifold, delegated to the
    leaf sweep per phase.
    """
    cfg = cfg or GlobalizationConfig()
    flow = flow or Flow(K.model)
    if index not in (1, 2):
        raise ValueError("isostable index must be 1 or 2")
    if index == 1 and c == 0.0:
        atlas = ManifoldAtlas(kind="isostable", model_name=K.model.name,
                              label={"index": 1, "level": 0.0})
        for th in np.arange(n_theta) / n_theta:
            atlas.points.extend(
                grow_slow_leaf(K, domain, float(th), cfg, flow).points)
        return atlas
    lam = K.lam1 if index == 1 else K.lam2
    phi_pos = 0.0 if index == 1 else 0.5 * np.pi
    phi_neg = np.pi if index == 1 else 1.5 * np.pi
    atlas = ManifoldAtlas(kind="isostable", model_name=K.model.name,
                          label={"index": index, "level": float(c)})
    thetas = np.arange(n_theta) / n_theta
    for th in thetas:
        r = domain.radius(float(th), phi_pos if c > 0 else phi_neg)
        if r == 0.0:
            continue
        c_star = np.sign(c) * min(abs(c), 0.75 * r)
        t = np.log(c / c_star) / lam     # <= 0: backward flow
        # backward flow amplifies the local truncation error along the
        # strong direction by e^{|lam1| |t|}; beyond amp_max the emitted
        # states would be float noise, so the slice is skipped
        if np.exp(max(abs(K.lam1), abs(K.lam2)) * abs(t)) > amp_max:
            atlas.diagnostics.append(
                f"slice skipped at theta={float(th):.6g}: backward time "
                f"{t:.3g} exceeds the error-amplification budget")
            continue
        r_other = _other_limit(K, domain, float(th), index, c_star)
        for s in np.linspace(-r_other, r_other, n_other):
            s1, s2 = (c_star, s) if index == 1 else (s, c_star)
            if not _in_domain(K, float(th), s1, s2, domain.e_tol):
                continue
            x_int = K(float(th), s1, s2)
            try:
                x = flow(x_int, t) if t != 0.0 else x_int
            except IntegrationError:
                continue    # backward blowup: this patch leaves the basin
            if not K.model.omega_c(x):
                continue
            s_other = s * np.exp((K.lam2 if index == 1 else K.lam1) * t)
            pt_s1, pt_s2 = (c, s_other) if index == 1 else (s_other, c)
            atlas.points.append(ManifoldPoint(
                x=x, theta=(float(th) + t / K.T) % 1.0,
                sigma1=pt_s1, sigma2=pt_s2, n_periods=0))
    return atlas


def _other_limit(K: Parameterization, domain: AccuracyDomain, theta: float,
                 index: int, c_star: float) -> float:
    """Extent of the free amplitude at fixed Sigma_index = c_star."""
    e_tol = domain.e_tol
    lo, hi = 0.0, None
    r = 1e-3
    probe = ((lambda s: (c_star, s)) if index == 1 else (lambda s: (s, c_star)))
    for _ in range(120):
        if not _in_domain(K, theta, *probe(r), e_tol):
            hi = r
            break
        lo = r
        r *= 2.0
    if hi is None:
        return lo
    while hi - lo > 1e-2 * hi:
        mid = 0.5 * (lo + hi)
        if _in_domain(K, theta, *probe(mid), e_tol):
            lo = mid
        else:
            hi = mid
    return lo

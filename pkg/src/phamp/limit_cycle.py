"""Limit-cycle location, monodromy matrix, and Floquet normal form.

The cycle is found by a Poincare-section Newton iteration on the return
map of the section {voltage = const, increasing}, then re-phased so that
theta = 0 sits at the maximum of the voltage-like coordinate.  The
variational flow over one period gives the monodromy matrix M = Phi(T);
its eigen-decomposition yields the Floquet exponents lambda_1 < lambda_2
< 0 and the normal form Phi(tT) = Q(t) e^{tT R} with Q 1-periodic,
Q(0) = Id, built through

    C = [X(x0) | v1 | v2],   R = C diag(0, lam1, lam2) C^{-1},
    Q(theta) = Phi(theta T) C diag(1, e^{-theta T lam1}, e^{-theta T lam2}) C^{-1}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .integrate import Flow
from .models import ModelSpec
from .periodics import load_grid, save_grid

__all__ = [
    "FloquetData",
    "find_limit_cycle",
    "floquet_data",
    "check_nonresonance",
    "NonResonanceReport",
]


class LimitCycleError(RuntimeError):
    pass


def _section_crossing(model, flow, x, v_sec, t_lo, coarse_dt, t_max):
    """First increasing crossing of {V = v_sec} after t_lo; returns (t, x)."""
    vi = model.voltage_index
    t, y = 0.0, np.asarray(x, dtype=float)
    if t_lo > 0.0:
        y = flow(y, t_lo)
        t = t_lo
    prev = y[vi] - v_sec
    while t < t_max:
        y2 = flow(y, coarse_dt)
        t += coarse_dt
        cur = y2[vi] - v_sec
        if prev < 0.0 <= cur:
            # Newton refinement on the crossing time from the bracketing state
            tau = 0.0
            z = y.copy()
            for _ in range(50):
                g = z[vi] - v_sec
                dg = model(z)[vi]
                step = -g / dg
                tau_new = tau + step
                if not (-coarse_dt <= tau_new <= 2.0 * coarse_dt):
                    tau_new = 0.5 * coarse_dt  # fall back towards bracket centre
                z = flow(z, tau_new - tau)
                tau = tau_new
                if abs(step) < 1e-15 * max(1.0, abs(t)):
                    break
            return t - coarse_dt + tau, z
        prev, y = cur, y2
    raise LimitCycleError("no section crossing found")


def find_limit_cycle(model: ModelSpec, guess=None, settle: float = 3000.0,
                     flow: Flow | None = None, tol: float = 1e-12,
                     max_iter: int = 30) -> tuple[np.ndarray, float]:
    """Locate x0 on the cycle (at the voltage maximum) and the period T."""
    flow = flow or Flow(model)
    vi = model.voltage_index
    x = np.asarray(model.seed if guess is None else guess, dtype=float)
    x = flow(x, settle)
    v_sec = x[vi]
    coarse = model.period_hint / 400.0
    t_max = 20.0 * model.period_hint
    _, x0 = _section_crossing(model, flow, x, v_sec, 0.5 * coarse, coarse, t_max)

    others = [i for i in range(3) if i != vi]

    def return_map(xs):
        t_ret, y = _section_crossing(model, flow, xs, v_sec, 0.3 * model.period_hint,
                                     coarse, t_max)
        return t_ret, y

    T = model.period_hint
    for it in range(max_iter):
        T, y = return_map(x0)
        res = y[others] - x0[others]
        if np.linalg.norm(y - x0) < tol:
            break
        # finite-difference Jacobian of the 2D section map
        Jm = np.empty((2, 2))
        for j, cj in enumerate(others):
            h = 1e-7 * max(1.0, abs(x0[cj]))
            xp = x0.copy()
            xp[cj] += h
            _, yp = return_map(xp)
            Jm[:, j] = (yp[others] - y[others]) / h
        delta = np.linalg.solve(Jm - np.eye(2), -res)
        x0 = x0.copy()
        x0[others] += delta
    else:
        raise LimitCycleError(f"Poincare-Newton did not converge for {model.name}")

    # shift phase origin to the voltage maximum: solve X_V(gamma(t)) = 0
    ts = np.linspace(0.0, T, 512, endpoint=False)
    tr = flow.path(x0, ts)
    k = int(np.argmax(tr[:, vi]))
    t_star, z = ts[k], tr[k]
    for _ in range(60):
        g = model(z)[vi]
        dg = model.jac(z)[vi] @ model(z)
        step = -g / dg
        z = flow(z, step)
        t_star += step
        if abs(step) < 1e-15 * T:
            break
    x0 = z
    # polish the period once more from the new base point
    y = flow(x0, T)
    if np.linalg.norm(y - x0) > 10.0 * tol:
        # one secant pass on T along the flow direction
        for _ in range(10):
            y = flow(x0, T)
            dT = -(y[vi] - x0[vi]) / model(y)[vi]
            T += dT
            if abs(dT) < 1e-14 * T:
                break
    return x0, T


@dataclass
class FloquetData:
    model_name: str
    T: float
    x0: np.ndarray
    gamma: np.ndarray      # (3, N) samples of gamma(theta_i)
    Phi: np.ndarray        # (N, 3, 3) fundamental matrix Phi(theta_i T)
    M: np.ndarray          # monodromy Phi(T)
    lam1: float
    lam2: float
    v1: np.ndarray
    v2: np.ndarray
    b1: float
    b2: float
    C: np.ndarray
    Cinv: np.ndarray
    R: np.ndarray
    J: np.ndarray
    Q: np.ndarray          # (N, 3, 3)
    Qinv: np.ndarray       # (N, 3, 3)

    @property
    def n(self) -> int:
        return self.gamma.shape[1]

    @property
    def exponents(self) -> tuple[float, float]:
        return self.lam1, self.lam2

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        meta = {
            "model": self.model_name,
            "T": self.T,
            "lam1": self.lam1,
            "lam2": self.lam2,
            "b1": self.b1,
            "b2": self.b2,
            "N": self.n,
            "x0": self.x0.tolist(),
            "v1": self.v1.tolist(),
            "v2": self.v2.tolist(),
            "M": self.M.tolist(),
            "C": self.C.tolist(),
            "R": self.R.tolist(),
        }
        (d / "floquet.json").write_text(json.dumps(meta, indent=1))
        save_grid(d / "gamma.txt", self.gamma)
        save_grid(d / "Phi.txt", self.Phi.reshape(self.n, 9).T)
        save_grid(d / "Q.txt", self.Q.reshape(self.n, 9).T)

    @classmethod
    def load(cls, directory) -> "FloquetData":
        d = Path(directory)
        meta = json.loads((d / "floquet.json").read_text())
        gamma = load_grid(d / "gamma.txt")
        n = meta["N"]
        Phi = load_grid(d / "Phi.txt").T.reshape(n, 3, 3)
        Q = load_grid(d / "Q.txt").T.reshape(n, 3, 3)
        C = np.array(meta["C"])
        return cls(
            model_name=meta["model"], T=meta["T"], x0=np.array(meta["x0"]),
            gamma=gamma, Phi=Phi, M=np.array(meta["M"]),
            lam1=meta["lam1"], lam2=meta["lam2"],
            v1=np.array(meta["v1"]), v2=np.array(meta["v2"]),
            b1=meta["b1"], b2=meta["b2"],
            C=C, Cinv=np.linalg.inv(C), R=np.array(meta["R"]),
            J=np.diag([0.0, meta["lam1"], meta["lam2"]]),
            Q=Q, Qinv=np.linalg.inv(Q),
        )


def _fix_sign(v: np.ndarray) -> np.ndarray:
    for c in v:
        if abs(c) > 1e-8:
            return v if c > 0 else -v
    return v


def _refine_eigenpair(M: np.ndarray, mu: float, v: np.ndarray,
                      iters: int = 3) -> tuple[float, np.ndarray]:
    """Polish an eigenpair of M by shifted inverse iteration.

    The periodicity of the Floquet frame Q hinges on M C = C diag(mu)
    holding to machine precision; eigen-residuals get amplified by
    1/mu_1 = e^{|lam1| T}, so they are driven as low as possible here.
    """
    for _ in range(iters):
        try:
            w = np.linalg.solve(M - (mu * (1.0 + 1e-13)) * np.eye(3), v)
        except np.linalg.LinAlgError:
            break
        nw = np.linalg.norm(w)
        if not np.isfinite(nw) or nw == 0.0:
            break
        v = w / nw
        mu = float(v @ M @ v)
    return mu, v


def floquet_data(model: ModelSpec, x0, T: float, n: int = 2048,
                 b1: float | None = None, b2: float | None = None,
                 flow: Flow | None = None) -> FloquetData:
    """Monodromy, exponents and Floquet normal form on an n-point grid."""
    flow = flow or Flow(model)
    ts = np.linspace(0.0, T, n + 1)
    xs, Phis = flow.variational_path(np.asarray(x0, dtype=float), ts)
    gamma = xs[:n].T.copy()
    Phi = Phis[:n].copy()
    M = Phis[n]

    mu, vecs = np.linalg.eig(M)
    i0 = int(np.argmin(np.abs(mu - 1.0)))
    if abs(mu[i0] - 1.0) > 1e-6:
        raise LimitCycleError(f"no trivial multiplier near 1 (closest {mu[i0]})")
    rest = [i for i in range(3) if i != i0]
    mus = mu[rest]
    if np.max(np.abs(np.imag(mus))) > 1e-10 or np.any(np.real(mus) <= 0):
        raise LimitCycleError(f"unsupported nontrivial multipliers {mus} (need real positive)")
    mus = np.real(mus)
    order = np.argsort(mus)  # smallest multiplier = strongest contraction first
    idx1, idx2 = rest[order[0]], rest[order[1]]
    mu1, v1 = _refine_eigenpair(M, mu[idx1].real, np.real(vecs[:, idx1]))
    mu2, v2 = _refine_eigenpair(M, mu[idx2].real, np.real(vecs[:, idx2]))
    lam1 = float(np.log(mu1) / T)
    lam2 = float(np.log(mu2) / T)
    v1 = _fix_sign(v1 / np.linalg.norm(v1))
    v2 = _fix_sign(v2 / np.linalg.norm(v2))

    # Frame column for the trivial multiplier: the refined numeric
    # eigenvector of M rather than X(x0).  At the voltage maximum the
    # flow direction is nearly degenerate and its eigen-residual under
    # the computed M would destroy the grid-periodicity of Q; the frame
    # only needs to diagonalize M, so the numeric eigenvector (aligned
    # with the flow direction) is the right choice.
    f0 = model(np.asarray(x0, dtype=float))
    _, v0 = _refine_eigenpair(M, mu[i0].real, np.real(vecs[:, i0]))
    v0 = v0 / np.linalg.norm(v0)
    if float(v0 @ f0) < 0.0:
        v0 = -v0
    C = np.column_stack([v0, v1, v2])
    if np.linalg.cond(C) > 1e12:
        raise LimitCycleError("ill-conditioned eigenvector frame C")
    Cinv = np.linalg.inv(C)
    J = np.diag([0.0, lam1, lam2])
    R = C @ J @ Cinv

    theta = np.arange(n) / n
    decay = np.empty((n, 3))
    decay[:, 0] = 1.0
    decay[:, 1] = np.exp(-lam1 * theta * T)
    decay[:, 2] = np.exp(-lam2 * theta * T)
    Q = Phi @ C * decay[:, None, :] @ Cinv
    Qinv = np.linalg.inv(Q)

    return FloquetData(
        model_name=model.name, T=float(T), x0=np.asarray(x0, dtype=float),
        gamma=gamma, Phi=Phi, M=M, lam1=lam1, lam2=lam2, v1=v1, v2=v2,
        b1=model.b1 if b1 is None else b1, b2=model.b2 if b2 is None else b2,
        C=C, Cinv=Cinv, R=R, J=J, Q=Q, Qinv=Qinv,
    )


@dataclass
class NonResonanceReport:
    ok: bool
    min_modulus: float
    worst: tuple[int, int, int]  # (alpha, m - alpha, j)
    threshold: float
    entries: list


def check_nonresonance(lam1: float, lam2: float, T: float, L: int,
                       threshold: float = 1e-6) -> NonResonanceReport:
    """Scan the k = 0 divisors alpha lam1 + (m-alpha) lam2 - lam_{j-1}.

    Divisors with k != 0 carry an imaginary part 2 pi k / T and can never
    fall below 2 pi / T in modulus, so only k = 0 needs scanning.
    """
    lams = (0.0, lam1, lam2)
    entries = []
    worst = (0, 0, 0)
    min_mod = np.inf
    for m in range(2, L + 1):
        for alpha in range(m, -1, -1):
            for j in (1, 2, 3):
                d = alpha * lam1 + (m - alpha) * lam2 - lams[j - 1]
                entries.append((alpha, m - alpha, j, d))
                if abs(d) < min_mod:
                    min_mod = abs(d)
                    worst = (alpha, m - alpha, j)
    return NonResonanceReport(ok=min_mod > threshold, min_modulus=float(min_mod),
                              worst=worst, threshold=threshold, entries=entries)

"""Fourier-Taylor solver for the invariance equation of the attracting
manifold of a hyperbolic limit cycle.

The parameterization K(theta, s1, s2) = sum_{a+b<=L} K_{a,b}(theta) s1^a s2^b
satisfies

    (1/T) d_theta K + lam1 s1 d_s1 K + lam2 s2 d_s2 K = X(K),

with K_{0,0} = gamma the cycle and the order-1 terms fixed by the Floquet
eigendirections scaled by (b1, b2).  Each order m >= 2 reduces to
uncoupled scalar homological equations after the Floquet change of frame
K_a = Q(theta) C u(theta):

    (1/T) u_j' + (a lam1 + b lam2 - lam_{j-1}) u_j = A_j,   lam_0 = 0,

solved diagonally in Fourier space.  Coefficient grids are refined (N
doubled) until every coefficient's spectral tail is below ``tail_tol``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .integrate import Flow
from .jets import Jet2, n_terms, term_exponents, term_index
from .limit_cycle import (FloquetData, LimitCycleError, check_nonresonance,
                          find_limit_cycle, floquet_data)
from .models import ModelSpec, get_model
from .periodics import (eval_fourier, from_spectrum, load_grid, save_grid,
                        spectral_derivative, tail_norm, to_spectrum)

__all__ = ["SolverConfig", "Parameterization", "SolveDiagnostics", "solve",
           "AccuracyDomain"]


@dataclass
class SolverConfig:
    L: int = 10
    n: int = 2048
    n_max: int = 65536
    tail_tol: float = 1e-10
    resonance_threshold: float = 1e-6
    e_tol: float | None = None      # model default when None
    b1: float | None = None
    b2: float | None = None


@dataclass
class SolveDiagnostics:
    n: int
    order_l1: np.ndarray        # (n_terms,) mean-over-theta Euclidean residual
    tail: np.ndarray            # (n_terms,) spectral tail norm per coefficient
    nonresonance_min: float
    coeff_max: np.ndarray       # (n_terms,) max |K_{a,b}| over theta/components


class Parameterization:
    """Evaluable truncated parameterization K-bar with its Floquet data."""

    def __init__(self, model: ModelSpec, fd: FloquetData, L: int,
                 coeffs: np.ndarray, diagnostics: SolveDiagnostics | None = None):
        self.model = model
        self.fd = fd
        self.L = L
        self.coeffs = coeffs                      # (n_terms, 3, N)
        self.diagnostics = diagnostics
        self._al, self._be = term_exponents(L)
        self._spec = to_spectrum(coeffs)
        self._dspec = None

    # -- basic properties ---------------------------------------------------

    @property
    def T(self) -> float:
        return self.fd.T

    @property
    def lam1(self) -> float:
        return self.fd.lam1

    @property
    def lam2(self) -> float:
        return self.fd.lam2

    @property
    def n(self) -> int:
        return self.coeffs.shape[-1]

    def coefficient(self, a: int, b: int) -> np.ndarray:
        return self.coeffs[term_index(a, b)]

    @property
    def _dtheta_spec(self):
        if self._dspec is None:
            nk = self._spec.shape[-1]
            k = np.arange(nk, dtype=float)
            d = self._spec * (2j * np.pi * k)
            d[..., -1] = 0.0
            self._dspec = d
        return self._dspec

    # -- evaluation ---------------------------------------------------------

    def _coeffs_at(self, theta, spec=None) -> np.ndarray:
        """All coefficient functions interpolated at theta: (n_terms, 3[, M])."""
        return eval_fourier(self._spec if spec is None else spec, theta)

    def _monomials(self, s1, s2) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.asarray(s1) ** self._al * np.asarray(s2) ** self._be

    def __call__(self, theta, s1, s2) -> np.ndarray:
        """K-bar(theta, s1, s2); scalar args -> (3,), (M,) args -> (3, M)."""
        c = self._coeffs_at(theta)                        # (n_terms, 3[, M])
        mono = self._monomials(s1, s2)                    # (n_terms[, M])
        if c.ndim == 2:
            return mono @ c
        return np.einsum("tm,tim->im", mono, c)

    def jacobian(self, theta: float, s1: float, s2: float) -> np.ndarray:
        """DK-bar columns (d_theta K, d_s1 K, d_s2 K) at a single point."""
        c = self._coeffs_at(theta)                        # (n_terms, 3)
        dc = self._coeffs_at(theta, self._dtheta_spec)
        al, be = self._al, self._be
        mono = self._monomials(s1, s2)
        with np.errstate(invalid="ignore", divide="ignore"):
            m1 = np.where(al > 0, al * s1 ** np.maximum(al - 1, 0) * s2 ** be, 0.0)
            m2 = np.where(be > 0, be * s1 ** al * s2 ** np.maximum(be - 1, 0), 0.0)
        J = np.empty((3, 3))
        J[:, 0] = mono @ dc
        J[:, 1] = m1 @ c
        J[:, 2] = m2 @ c
        return J

    def residual(self, theta, s1, s2) -> np.ndarray:
        """Invariance-equation defect E(theta, s1, s2), evaluated pointwise."""
        c = self._coeffs_at(theta)
        dc = self._coeffs_at(theta, self._dtheta_spec)
        mono = self._monomials(s1, s2)
        mu = self._al * self.lam1 + self._be * self.lam2
        if c.ndim == 2:
            x = mono @ c
            lhs = mono @ dc / self.T + (mu * mono) @ c
        else:
            x = np.einsum("tm,tim->im", mono, c)
            lhs = (np.einsum("tm,tim->im", mono, dc) / self.T
                   + np.einsum("tm,tim->im", mu[:, None] * mono, c))
        return lhs - self.model(x)

    def as_jets(self, L: int | None = None) -> tuple[Jet2, Jet2, Jet2]:
        L = self.L if L is None else L
        nt = n_terms(L)
        return tuple(Jet2(L, self.coeffs[:nt, i, :]) for i in range(3))

    # -- serialization ------------------------------------------------------

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        self.fd.save(d / "floquet")
        meta = {"model": self.model.name, "L": self.L, "N": self.n}
        if self.diagnostics is not None:
            g = self.diagnostics
            meta["diagnostics"] = {
                "n": g.n,
                "order_l1": g.order_l1.tolist(),
                "tail": g.tail.tolist(),
                "nonresonance_min": g.nonresonance_min,
                "coeff_max": g.coeff_max.tolist(),
            }
        (d / "parameterization.json").write_text(json.dumps(meta, indent=1))
        save_grid(d / "K.txt", self.coeffs.reshape(-1, self.n))

    @classmethod
    def load(cls, directory, model: ModelSpec | None = None) -> "Parameterization":
        d = Path(directory)
        meta = json.loads((d / "parameterization.json").read_text())
        model = model or get_model(meta["model"])
        fd = FloquetData.load(d / "floquet")
        L = meta["L"]
        coeffs = load_grid(d / "K.txt").reshape(n_terms(L), 3, meta["N"])
        diag = None
        if "diagnostics" in meta:
            g = meta["diagnostics"]
            diag = SolveDiagnostics(
                n=g["n"], order_l1=np.array(g["order_l1"]),
                tail=np.array(g["tail"]),
                nonresonance_min=g["nonresonance_min"],
                coeff_max=np.array(g["coeff_max"]),
            )
        return cls(model, fd, L, coeffs, diag)


def _solve_at_resolution(model: ModelSpec, fd: FloquetData, cfg: SolverConfig
                         ) -> np.ndarray:
    """One pass of the order-by-order solve on the grid carried by fd."""
    L, n, T = cfg.L, fd.n, fd.T
    lam1, lam2 = fd.lam1, fd.lam2
    coeffs = np.zeros((n_terms(L), 3, n))
    coeffs[0] = fd.gamma
    # order 1: the Floquet eigendirections, transported by Q
    coeffs[term_index(1, 0)] = fd.b1 * np.einsum("tij,j->it", fd.Q, fd.C[:, 1])
    coeffs[term_index(0, 1)] = fd.b2 * np.einsum("tij,j->it", fd.Q, fd.C[:, 2])

    lams = (0.0, lam1, lam2)
    for m in range(2, L + 1):
        jets = tuple(Jet2(m, coeffs[: n_terms(m), i, :]) for i in range(3))
        Xj = model.field(jets, model.params)
        for a in range(m, -1, -1):
            b = m - a
            B = np.stack([Xj[i].coefficient(a, b) for i in range(3)])  # (3, n)
            A = np.einsum("ij,tjk,kt->it", fd.Cinv, fd.Qinv, B)
            Ahat = to_spectrum(A)                                     # (3, n/2+1)
            mu = a * lam1 + b * lam2
            k = np.arange(Ahat.shape[-1], dtype=float)
            denom = (2j * np.pi / T) * k + mu - np.array(lams)[:, None]
            if np.min(np.abs(denom)) < cfg.resonance_threshold:
                j = int(np.argmin(np.abs(denom).min(axis=1)))
                raise LimitCycleError(
                    f"near-resonant divisor for order ({a},{b}), branch {j}: "
                    f"{np.min(np.abs(denom)):.3e}")
            u = from_spectrum(Ahat / denom, n)
            coeffs[term_index(a, b)] = np.einsum("tij,jk,kt->it", fd.Q, fd.C, u)
    return coeffs


def _order_residuals(model: ModelSpec, fd: FloquetData, L: int,
                     coeffs: np.ndarray) -> np.ndarray:
    """Mean-over-theta Euclidean norm of the defect, per monomial."""
    jets = tuple(Jet2(L, coeffs[:, i, :]) for i in range(3))
    Xj = model.field(jets, model.params)
    al, be = term_exponents(L)
    mu = al * fd.lam1 + be * fd.lam2
    dth = spectral_derivative(coeffs)
    E = dth / fd.T + mu[:, None, None] * coeffs
    for i in range(3):
        E[:, i, :] -= Xj[i].coeffs
    return np.mean(np.sqrt(np.sum(E ** 2, axis=1)), axis=1)


def solve(model: ModelSpec, config: SolverConfig | None = None,
          flow: Flow | None = None, x0=None, T: float | None = None
          ) -> Parameterization:
    """Full pipeline: locate the cycle, build the Floquet frame, solve all
    orders, and refine the grid until spectral tails converge."""
    cfg = config or SolverConfig()
    flow = flow or Flow(model)
    if x0 is None or T is None:
        x0, T = find_limit_cycle(model, flow=flow)

    n = cfg.n
    best = None
    while True:
        fd = floquet_data(model, x0, T, n=n, b1=cfg.b1, b2=cfg.b2, flow=flow)
        nr = check_nonresonance(fd.lam1, fd.lam2, T, cfg.L,
                                cfg.resonance_threshold)
        if not nr.ok:
            raise LimitCycleError(
                f"resonant exponents for {model.name}: divisor "
                f"{nr.min_modulus:.3e} at {nr.worst}")
        coeffs = _solve_at_resolution(model, fd, cfg)
        tails = np.array([tail_norm(coeffs[i]) for i in range(coeffs.shape[0])])
        if best is None or np.max(tails) < np.max(best[2]):
            improved = best is None or np.max(tails) < 0.5 * np.max(best[2])
            best = (fd, coeffs, tails, n)
        else:
            improved = False
        if np.max(tails) <= cfg.tail_tol or n >= cfg.n_max or not improved:
            break
        n *= 2
    fd, coeffs, tails, n = best

    order_l1 = _order_residuals(model, fd, cfg.L, coeffs)
    diag = SolveDiagnostics(
        n=n, order_l1=order_l1, tail=tails,
        nonresonance_min=nr.min_modulus,
        coeff_max=np.max(np.abs(coeffs), axis=(1, 2)),
    )
    return Parameterization(model, fd, cfg.L, coeffs, diag)


class AccuracyDomain:
    """Star-shaped local domain of validity around the cycle.

    For each base phase theta and direction angle phi in the (s1, s2)
    plane, ``radius`` returns the largest r (to relative precision
    ``rel_tol``) such that the invariance defect stays below ``e_tol``
    along the ray segment.
    """

    def __init__(self, K: Parameterization, e_tol: float | None = None,
                 rel_tol: float = 1e-3, n_angles: int = 64):
        self.K = K
        self.e_tol = K.model.e_tol if e_tol is None else e_tol
        self.rel_tol = rel_tol
        self.n_angles = n_angles

    def _defect(self, theta: float, phi: float, r: float) -> float:
        e = self.K.residual(theta, r * np.cos(phi), r * np.sin(phi))
        if not np.all(np.isfinite(e)):
            return np.inf
        return float(np.linalg.norm(e))

    def radius(self, theta: float, phi: float) -> float:
        lo, hi = 0.0, None
        r = 1e-3
        for _ in range(120):
            if self._defect(theta, phi, r) > self.e_tol:
                hi = r
                break
            lo = r
            r *= 2.0
        if hi is None:
            return lo
        while hi - lo > self.rel_tol * hi:
            mid = 0.5 * (lo + hi)
            if self._defect(theta, phi, mid) > self.e_tol:
                hi = mid
            else:
                lo = mid
        return lo

    def boundary(self, theta: float) -> np.ndarray:
        """(n_angles, 2) polygon of (s1, s2) boundary points at phase theta."""
        phis = 2.0 * np.pi * np.arange(self.n_angles) / self.n_angles
        rs = np.array([self.radius(theta, p) for p in phis])
        return np.column_stack([rs * np.cos(phis), rs * np.sin(phis)])

    def sigma1_extent(self, theta: float) -> tuple[float, float]:
        return -self.radius(theta, np.pi), self.radius(theta, 0.0)

    def sigma2_extent(self, theta: float) -> tuple[float, float]:
        return -self.radius(theta, 1.5 * np.pi), self.radius(theta, 0.5 * np.pi)

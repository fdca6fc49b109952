"""Phase and amplitude response functions.

The rows of DK(theta, sigma)^{-1} are the gradients of the coordinate
functions: [grad Theta; grad Sigma_1; grad Sigma_2].  They are computed

* pointwise, by assembling DK from the exact sigma-derivative of the
  polynomial and the spectral theta-derivative, and inverting;
* as a sigma-power series: order 0 from the cross-product closed forms
  (rows of the inverse of the frame [K_0', K_10, K_01]), higher orders
  by the matrix-series inversion recurrence
      B_gamma = -B_0 * sum_{0 < delta <= gamma} A_delta B_{gamma-delta};
* along trajectories, by co-integrating the adjoint equations
      d(grad Theta)/dt = -DX^T grad Theta,
      d(grad Sigma_i)/dt = (lam_i - DX^T) grad Sigma_i.

grad Theta carries no free scale (fixed by the conjugacy); grad Sigma_i
inherit the 1/b_i scalings of the amplitude coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .integrate import Flow
from .jets import n_terms, term_exponents, term_index
from .periodics import eval_fourier, spectral_derivative, to_spectrum
from .solver import Parameterization

__all__ = ["ResponseEval", "ResponseSeries", "local_response",
           "response_series", "propagate_response", "transport_response",
           "SingularJacobianError"]


class SingularJacobianError(RuntimeError):
    pass


@dataclass
class ResponseEval:
    x: np.ndarray
    grad_theta: np.ndarray
    grad_sigma1: np.ndarray
    grad_sigma2: np.ndarray
    theta: float | None = None
    sigma1: float | None = None
    sigma2: float | None = None

    @property
    def rows(self) -> np.ndarray:
        return np.stack([self.grad_theta, self.grad_sigma1, self.grad_sigma2])


def local_response(K: Parameterization, theta: float, s1: float, s2: float
                   ) -> ResponseEval:
    """Invert DK-bar at one point; rows are (grad Theta, grad Sigma_1/2)."""
    J = K.jacobian(theta, s1, s2)
    det = np.linalg.det(J)
    if abs(det) < 1e-12:
        raise SingularJacobianError(
            f"DK singular at theta={theta}, sigma=({s1},{s2}): det={det:.3e}")
    rows = np.linalg.inv(J)
    return ResponseEval(x=K(theta, s1, s2), grad_theta=rows[0],
                        grad_sigma1=rows[1], grad_sigma2=rows[2],
                        theta=theta, sigma1=s1, sigma2=s2)


class ResponseSeries:
    """Taylor-Fourier expansion of the response gradients up to degree L-1.

    coeffs has shape (n_terms(L-1), 3, 3, N): per monomial, the 3x3
    matrix whose rows are grad Theta, grad Sigma_1, grad Sigma_2.
    """

    def __init__(self, L: int, coeffs: np.ndarray):
        self.L = L
        self.coeffs = coeffs
        self._al, self._be = term_exponents(L)
        self._spec = to_spectrum(coeffs)

    def order_matrix(self, a: int, b: int) -> np.ndarray:
        return self.coeffs[term_index(a, b)]

    def __call__(self, theta, s1, s2) -> np.ndarray:
        c = eval_fourier(self._spec, theta)             # (n_terms, 3, 3[, M])
        mono = np.asarray(s1) ** self._al * np.asarray(s2) ** self._be
        if c.ndim == 3:
            return np.einsum("t,tij->ij", mono, c)
        return np.einsum("tm,tijm->ijm", mono, c)

    def eval(self, theta: float, s1: float, s2: float) -> ResponseEval:
        rows = self(theta, s1, s2)
        return ResponseEval(x=None, grad_theta=rows[0], grad_sigma1=rows[1],
                            grad_sigma2=rows[2], theta=theta, sigma1=s1,
                            sigma2=s2)


def _dk_series(K: Parameterization, Lr: int) -> np.ndarray:
    """Taylor coefficients of DK-bar as (n_terms(Lr), N, 3, 3)."""
    n = K.n
    A = np.zeros((n_terms(Lr), n, 3, 3))
    dth = spectral_derivative(K.coeffs)
    alK, beK = term_exponents(K.L)
    for i in range(n_terms(K.L)):
        a, b = int(alK[i]), int(beK[i])
        if a + b <= Lr:
            A[term_index(a, b), :, :, 0] += dth[i].T
        if a >= 1 and a - 1 + b <= Lr:
            A[term_index(a - 1, b), :, :, 1] += a * K.coeffs[i].T
        if b >= 1 and a + b - 1 <= Lr:
            A[term_index(a, b - 1), :, :, 2] += b * K.coeffs[i].T
    return A


def response_series(K: Parameterization) -> ResponseSeries:
    """Invert the DK-bar matrix series order by order."""
    Lr = K.L - 1
    A = _dk_series(K, Lr)
    nt = A.shape[0]
    al, be = term_exponents(Lr)

    # order 0 by the cross-product closed forms: the frame columns are
    # (K_0'(theta), K_10(theta), K_01(theta))
    k0p = spectral_derivative(K.fd.gamma).T              # (N, 3)
    k10 = K.coefficient(1, 0).T
    k01 = K.coefficient(0, 1).T
    det = np.einsum("ni,ni->n", k0p, np.cross(k10, k01))
    if np.min(np.abs(det)) < 1e-12:
        raise SingularJacobianError(
            f"degenerate frame: min |det(K_0', K_10, K_01)| = "
            f"{np.min(np.abs(det)):.3e}")
    B = np.zeros_like(A)
    B[0, :, 0, :] = np.cross(k10, k01) / det[:, None]
    B[0, :, 1, :] = np.cross(k01, k0p) / det[:, None]
    B[0, :, 2, :] = np.cross(k0p, k10) / det[:, None]

    for io in range(1, nt):
        a, b = int(al[io]), int(be[io])
        acc = np.zeros((A.shape[1], 3, 3))
        for da in range(a + 1):
            for db in range(b + 1):
                if da == 0 and db == 0:
                    continue
                acc += A[term_index(da, db)] @ B[term_index(a - da, b - db)]
        B[io] = -B[0] @ acc
    return ResponseSeries(Lr, np.transpose(B, (0, 2, 3, 1)))


def propagate_response(model, start: ResponseEval, dt: float,
                       lam1: float, lam2: float, flow: Flow | None = None
                       ) -> ResponseEval:
    """Transport the gradients backward along the orbit by time dt > 0.

    Returns the response at phi_{-dt}(x), obtained by integrating the
    adjoint equations (which hold in forward time) with a negative time
    span, co-integrated with the state.
    """
    flow = flow or Flow(model)
    x, wt, w1, w2 = flow.with_adjoint(start.x, start.grad_theta,
                                      start.grad_sigma1, start.grad_sigma2,
                                      -dt, lam1, lam2)
    if not np.all(np.isfinite(x)):
        raise FloatingPointError("adjoint propagation left the basin (blowup)")
    return ResponseEval(x=x, grad_theta=wt, grad_sigma1=w1, grad_sigma2=w2)


def transport_response(model, x, dt: float, end: ResponseEval,
                       lam1: float, lam2: float, flow: Flow | None = None
                       ) -> ResponseEval:
    """Response at x from the response at phi_dt(x), by variational transport.

    Differentiating Theta(phi_dt(x)) = Theta(x) + dt/T and
    Sigma_i(phi_dt(x)) = Sigma_i(x) e^{lam_i dt} gives

        grad Theta(x)   = Phi(dt; x)^T grad Theta(phi_dt(x)),
        grad Sigma_i(x) = e^{-lam_i dt} Phi(dt; x)^T grad Sigma_i(phi_dt(x)).

    Only a forward (contracting, stable) variational integration is
    needed, which makes this the preferred route for evaluating
    responses at states far from the cycle.
    """
    flow = flow or Flow(model)
    x = np.asarray(x, dtype=float)
    x_end, Phi = flow.with_variational(x, dt)
    if np.linalg.norm(x_end - end.x) > 1e-6 * max(1.0, np.linalg.norm(end.x)):
        raise ValueError("transport endpoint does not match the given response point")
    return ResponseEval(
        x=x,
        grad_theta=Phi.T @ end.grad_theta,
        grad_sigma1=np.exp(-lam1 * dt) * (Phi.T @ end.grad_sigma1),
        grad_sigma2=np.exp(-lam2 * dt) * (Phi.T @ end.grad_sigma2),
    )

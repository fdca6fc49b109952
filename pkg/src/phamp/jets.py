"""Truncated 2-variable Taylor algebra with periodic-grid coefficients.

A Jet2 represents  f(theta; s1, s2) = sum_{m<=L} sum_{a+b=m} f_{a,b}(theta) s1^a s2^b
where each coefficient f_{a,b} is a scalar function sampled on the periodic
theta-grid (an (N,) array; N = 1 gives plain numeric jets).

Canonical linear index: terms ordered by total degree m, then by a
descending within a degree:
    (0,0) | (1,0) (0,1) | (2,0) (1,1) (0,2) | ...
so idx(a, b) = m(m+1)/2 + b with m = a + b.

Transcendental functions (exp, log, real powers, sin/cos) are produced by
radial-derivative recurrences: with R f = sum_m m f_{a,b} s1^a s2^b
(Euler's identity R f = s . grad f), identities like R(e^f) = e^f R(f)
turn into triangular recurrences on the coefficients, each order-m output
term depending only on input orders <= m and output orders <= m-1.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "Jet2",
    "n_terms",
    "term_index",
    "term_exponents",
    "jet_constant",
    "jet_variable",
    "jexp",
    "jlog",
    "jsqrt",
    "jpow",
    "jsin",
    "jcos",
]


def n_terms(L: int) -> int:
    return (L + 1) * (L + 2) // 2


def term_index(a: int, b: int) -> int:
    m = a + b
    return m * (m + 1) // 2 + b


@lru_cache(maxsize=None)
def term_exponents(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (alpha, beta) per canonical index."""
    al, be = [], []
    for m in range(L + 1):
        for b in range(m + 1):
            al.append(m - b)
            be.append(b)
    return np.array(al), np.array(be)


@lru_cache(maxsize=None)
def _mul_table(L: int):
    """All index triples (io, ia, ib) with exponent sums inside degree L,
    grouped by output index in canonical (degree-ascending) order."""
    al, be = term_exponents(L)
    nt = n_terms(L)
    by_out: list[list[tuple[int, int]]] = [[] for _ in range(nt)]
    for ia in range(nt):
        for ib in range(nt):
            a, b = al[ia] + al[ib], be[ia] + be[ib]
            if a + b <= L:
                by_out[term_index(a, b)].append((ia, ib))
    return by_out


class Jet2:
    __array_ufunc__ = None  # keep numpy from hijacking ndarray <op> Jet2

    def __init__(self, L: int, coeffs: np.ndarray):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if coeffs.shape[0] != n_terms(L):
            raise ValueError(f"degree-{L} jet needs {n_terms(L)} coefficients, got {coeffs.shape[0]}")
        self.L = L
        self.coeffs = coeffs

    @property
    def n(self) -> int:
        return self.coeffs.shape[1]

    def coefficient(self, a: int, b: int) -> np.ndarray:
        return self.coeffs[term_index(a, b)]

    def truncated(self, Lp: int) -> "Jet2":
        if Lp > self.L:
            raise ValueError("cannot extend a jet by truncation")
        return Jet2(Lp, self.coeffs[: n_terms(Lp)].copy())

    def order_terms(self, m: int) -> np.ndarray:
        """Coefficients of total degree m, alpha descending: shape (m+1, N)."""
        i0 = m * (m + 1) // 2
        return self.coeffs[i0 : i0 + m + 1]

    def __call__(self, s1: float, s2: float, theta_axis=None) -> np.ndarray:
        al, be = term_exponents(self.L)
        mono = (s1 ** al) * (s2 ** be)
        return mono @ self.coeffs

    def _check(self, other: "Jet2") -> None:
        if self.L != other.L or self.n != other.n:
            raise ValueError("jet degree/grid mismatch")

    def _coerce_scalar(self, other) -> np.ndarray | None:
        """A float or (N,)-array acts as a degree-0 (theta-dependent) factor."""
        if isinstance(other, Jet2):
            return None
        arr = np.asarray(other, dtype=float)
        if arr.ndim == 0 or (arr.ndim == 1 and arr.shape[0] == self.n):
            return arr
        raise ValueError(f"cannot combine jet with array of shape {arr.shape}")

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        s = self._coerce_scalar(other)
        out = self.coeffs.copy()
        if s is None:
            self._check(other)
            out += other.coeffs
        else:
            out[0] = out[0] + s
        return Jet2(self.L, out)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(self.L, -self.coeffs)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Jet2) else -np.asarray(other, dtype=float))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        s = self._coerce_scalar(other)
        if s is not None:
            return Jet2(self.L, self.coeffs * s)
        self._check(other)
        a, b = self.coeffs, other.coeffs
        out = np.zeros_like(a)
        for io, pairs in enumerate(_mul_table(self.L)):
            acc = out[io]
            for ia, ib in pairs:
                acc += a[ia] * b[ib]
        return Jet2(self.L, out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet2):
            return _jet_div(self, other)
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return jet_constant(other, self.L, self.n) / self

    def __pow__(self, p):
        return jpow(self, p)


def jet_constant(value, L: int, n: int) -> Jet2:
    coeffs = np.zeros((n_terms(L), n))
    coeffs[0] = value
    return Jet2(L, coeffs)


def jet_variable(which: int, L: int, n: int, scale=1.0) -> Jet2:
    """The jet of s1 (which=1) or s2 (which=2), optionally scaled."""
    coeffs = np.zeros((n_terms(L), n))
    coeffs[term_index(1, 0) if which == 1 else term_index(0, 1)] = scale
    return Jet2(L, coeffs)


def _degrees(L: int) -> np.ndarray:
    al, be = term_exponents(L)
    return al + be


def _jet_div(g: Jet2, f: Jet2) -> Jet2:
    """g / f, solving f * h = g term by term."""
    g._check(f)
    f0 = f.coeffs[0]
    if np.any(f0 == 0.0):
        raise ZeroDivisionError("jet division by zero constant term")
    h = np.zeros_like(g.coeffs)
    for io, pairs in enumerate(_mul_table(g.L)):
        acc = g.coeffs[io].copy()
        for ia, ib in pairs:
            if ia != 0:  # the ia == 0 pair is f0 * h[io], moved to the left
                acc -= f.coeffs[ia] * h[ib]
        h[io] = acc / f0
    return Jet2(g.L, h)


def _radial_recurrence(f: Jet2, init, weight):
    """Generic driver for e with R(e) = e * w(f) style identities.

    Solves m*e_g = sum_{d+h=g, |d|>=1} |d| * f_d * e_h  with e_00 = init.
    `weight` maps the paired output coefficient (see jsin/jcos for the
    coupled variant, which does not use this driver).
    """
    deg = _degrees(f.L)
    e = np.zeros_like(f.coeffs)
    e[0] = init
    for io, pairs in enumerate(_mul_table(f.L)):
        m = deg[io]
        if m == 0:
            continue
        acc = np.zeros(f.n)
        for ia, ib in pairs:
            if deg[ia] >= 1:
                acc += deg[ia] * f.coeffs[ia] * e[ib]
        e[io] = acc / m
    return Jet2(f.L, e)


def jexp(f):
    if not isinstance(f, Jet2):
        return np.exp(f)
    return _radial_recurrence(f, np.exp(f.coeffs[0]), None)


def jlog(f):
    if not isinstance(f, Jet2):
        return np.log(f)
    f0 = f.coeffs[0]
    if np.any(f0 <= 0.0):
        bad = int(np.argmax(f0 <= 0.0))
        raise ValueError(f"jet log of non-positive constant term at grid index {bad}")
    deg = _degrees(f.L)
    l = np.zeros_like(f.coeffs)
    l[0] = np.log(f0)
    # f * R(l) = R(f):  sum_{d+h=g} |h| f_d l_h = |g| f_g
    for io, pairs in enumerate(_mul_table(f.L)):
        m = deg[io]
        if m == 0:
            continue
        acc = m * f.coeffs[io].copy()
        for ia, ib in pairs:
            if deg[ib] >= 1 and ib != io:
                acc -= deg[ib] * f.coeffs[ia] * l[ib]
        l[io] = acc / (m * f0)
    return Jet2(f.L, l)


def jpow(f, p):
    if not isinstance(f, Jet2):
        return f ** p
    if p == int(p) and p >= 0:
        # integer powers by repeated multiplication (no sign restriction)
        e = int(p)
        out = jet_constant(1.0, f.L, f.n)
        base = f
        while e:
            if e & 1:
                out = out * base
            e >>= 1
            if e:
                base = base * base
        return out
    f0 = f.coeffs[0]
    if np.any(f0 <= 0.0):
        bad = int(np.argmax(f0 <= 0.0))
        raise ValueError(f"jet power of non-positive constant term at grid index {bad}")
    deg = _degrees(f.L)
    q = np.zeros_like(f.coeffs)
    q[0] = f0 ** p
    # f * R(q) = p * q * R(f):  |g| f0 q_g = sum_{d<g} [p(|g|-|d|) - |d|] f_{g-d} q_d
    for io, pairs in enumerate(_mul_table(f.L)):
        m = deg[io]
        if m == 0:
            continue
        acc = np.zeros(f.n)
        for ia, ib in pairs:
            if deg[ia] >= 1:
                acc += (p * deg[ia] - deg[ib]) * f.coeffs[ia] * q[ib]
        q[io] = acc / (m * f0)
    return Jet2(f.L, q)


def jsqrt(f):
    if not isinstance(f, Jet2):
        return np.sqrt(f)
    return jpow(f, 0.5)


def _jet_sincos(f: Jet2) -> tuple[Jet2, Jet2]:
    deg = _degrees(f.L)
    s = np.zeros_like(f.coeffs)
    c = np.zeros_like(f.coeffs)
    s[0] = np.sin(f.coeffs[0])
    c[0] = np.cos(f.coeffs[0])
    # R(s) = c R(f),  R(c) = -s R(f)
    for io, pairs in enumerate(_mul_table(f.L)):
        m = deg[io]
        if m == 0:
            continue
        acc_s = np.zeros(f.n)
        acc_c = np.zeros(f.n)
        for ia, ib in pairs:
            if deg[ia] >= 1:
                acc_s += deg[ia] * f.coeffs[ia] * c[ib]
                acc_c -= deg[ia] * f.coeffs[ia] * s[ib]
        s[io] = acc_s / m
        c[io] = acc_c / m
    return Jet2(f.L, s), Jet2(f.L, c)


def jsin(f):
    if not isinstance(f, Jet2):
        return np.sin(f)
    return _jet_sincos(f)[0]


def jcos(f):
    if not isinstance(f, Jet2):
        return np.cos(f)
    return _jet_sincos(f)[1]

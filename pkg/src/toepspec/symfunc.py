"""Symmetric functions and Toeplitz determinants.

Complete homogeneous polynomials, skew Schur polynomials (Jacobi-Trudi),
minors of banded upper-triangular Toeplitz matrices, Widom's root formula
for banded Toeplitz determinants, and the expansion of
``det(P_z + delta Q)`` in powers of ``delta``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .matrices import build_toeplitz, wlog_band
from .symbol import as_symbol, roots_at


class SymfuncError(ValueError):
    pass


# -- partitions and h ---------------------------------------------------------

@dataclass(frozen=True)
class IntegerPartition:
    parts: tuple

    def __post_init__(self):
        p = tuple(int(x) for x in self.parts)
        if any(x < 0 for x in p) or any(p[i] < p[i + 1] for i in range(len(p) - 1)):
            raise SymfuncError(f"not a partition: {p}")
        object.__setattr__(self, "parts", p)

    @property
    def length(self):
        return sum(1 for x in self.parts if x > 0)

    @property
    def weight(self):
        return sum(self.parts)

    def padded(self, n):
        return self.parts + (0,) * (n - len(self.parts))


@dataclass(frozen=True)
class SkewShape:
    lam: IntegerPartition
    mu: IntegerPartition = field(default_factory=lambda: IntegerPartition(()))

    def __post_init__(self):
        if not isinstance(self.lam, IntegerPartition):
            object.__setattr__(self, "lam", IntegerPartition(tuple(self.lam)))
        if not isinstance(self.mu, IntegerPartition):
            object.__setattr__(self, "mu", IntegerPartition(tuple(self.mu)))
        n = max(len(self.lam.parts), len(self.mu.parts))
        if any(m > l for l, m in zip(self.lam.padded(n), self.mu.padded(n))):
            raise SymfuncError("mu is not contained in lambda")


def h_enumerate(r, t):
    """``h_r`` as the sum over all degree-``r`` monomials."""
    if r < 0:
        return 0j
    t = np.asarray(t, dtype=complex)
    if r == 0:
        return 1 + 0j
    if t.size == 0:
        return 0j
    return complex(sum(np.prod(c) for c in itertools.combinations_with_replacement(t, r)))


def h_jacobi(r, t):
    """``sum_j t_j^{r+w-1} / prod_{k != j}(t_j - t_k)`` for distinct ``t``."""
    t = np.asarray(t, dtype=complex)
    w = t.size
    if r < 0:
        return 0j
    if w == 0:
        return 1 + 0j if r == 0 else 0j
    diff = t[:, None] - t[None, :]
    np.fill_diagonal(diff, 1.0)
    return complex(np.sum(t ** (r + w - 1) / np.prod(diff, axis=1)))


def h_table(rmax, t):
    """``[h_0, ..., h_rmax]`` by the recurrence ``H_k = H_{k-1} + t_k H_k``."""
    h = np.zeros(rmax + 1, dtype=complex)
    h[0] = 1
    for tk in np.asarray(t, dtype=complex):
        for r in range(1, rmax + 1):
            h[r] += tk * h[r - 1]
    return h


def complete_homogeneous(r, t, method="auto"):
    """Complete homogeneous symmetric polynomial ``h_r(t)`` (``h_0 = 1``, ``h_{r<0} = 0``)."""
    if r < 0:
        return 0j
    t = np.asarray(t, dtype=complex)
    if method == "enumerate":
        return h_enumerate(r, t)
    if method == "jacobi":
        if t.size > 1:
            d = np.abs(t[:, None] - t[None, :]) + np.eye(t.size)
            if d.min() < 1e-8 * max(1.0, np.abs(t).max()):
                return complex(h_table(r, t)[r])
        return h_jacobi(r, t)
    return complex(h_table(r, t)[r])


def skew_schur(shape, t):
    """``s_{lam/mu}(t) = det[h_{lam_u - mu_v - u + v}]``."""
    if not isinstance(shape, SkewShape):
        shape = SkewShape(*shape)
    n = max(len(shape.lam.parts), len(shape.mu.parts))
    if n == 0:
        return 1 + 0j
    lam, mu = shape.lam.padded(n), shape.mu.padded(n)
    idx = [lam[u] - mu[v] - u + v for u in range(n) for v in range(n)]
    h = h_table(max(max(idx), 0), t)
    m = np.array([h[k] if k >= 0 else 0 for k in idx], dtype=complex).reshape(n, n)
    return complex(np.linalg.det(m))


def ssyt_count_poly(shape, t):
    """Brute-force ``s_{lam/mu}`` as a sum over semistandard skew tableaux."""
    if not isinstance(shape, SkewShape):
        shape = SkewShape(*shape)
    n = max(len(shape.lam.parts), len(shape.mu.parts))
    lam, mu = shape.lam.padded(n), shape.mu.padded(n)
    cells = [(i, j) for i in range(n) for j in range(mu[i], lam[i])]
    t = np.asarray(t, dtype=complex)
    w = t.size
    total = 0j
    for fill in itertools.product(range(w), repeat=len(cells)):
        tab = dict(zip(cells, fill))
        ok = all(tab[(i, j)] <= tab[(i, j + 1)] for (i, j) in cells if (i, j + 1) in tab)
        ok = ok and all(tab[(i, j)] < tab[(i + 1, j)] for (i, j) in cells if (i + 1, j) in tab)
        if ok:
            total += np.prod([t[v] for v in fill])
    return complex(total)


# -- minors ------------------------------------------------------------------

def _complement(n, removed):
    s = set(removed)
    return [i for i in range(1, n + 1) if i not in s]


def direct_minor(m, rows_removed, cols_removed):
    """Determinant of ``m`` with the given 1-based rows and columns deleted."""
    n = m.shape[0]
    r = [i - 1 for i in _complement(n, rows_removed)]
    c = [j - 1 for j in _complement(n, cols_removed)]
    if not r:
        return 1 + 0j
    return complex(np.linalg.det(m[np.ix_(r, c)]))


def bidiagonal_minor(eta, n, X, Y):
    """Minor of ``J + eta I`` (size ``n``) with rows ``X``, columns ``Y`` removed.

    Indices are 1-based. Nonzero only if ``y_1 <= x_1 < y_2 <= x_2 < ...``,
    in which case the value is ``eta`` to the number of surviving diagonal
    entries.
    """
    X, Y = sorted(X), sorted(Y)
    k = len(X)
    if len(Y) != k:
        raise SymfuncError("|X| must equal |Y|")
    if k == 0:
        return complex(eta) ** n
    for l in range(k):
        if not Y[l] <= X[l]:
            return 0j
        if l + 1 < k and not X[l] < Y[l + 1]:
            return 0j
    e = (Y[0] - 1) + sum(Y[l] - X[l - 1] - 1 for l in range(1, k)) + (n - X[-1])
    return complex(eta) ** e


@dataclass
class UpperToeplitz:
    """Upper-triangular banded Toeplitz ``sum_{j=0}^{g} c_j J^j`` of size ``n``."""
    c: np.ndarray  # c[j] multiplies J^j
    n: int

    @property
    def g(self):
        return len(self.c) - 1

    def dense(self):
        m = np.zeros((self.n, self.n), dtype=complex)
        for j, cj in enumerate(self.c):
            if j < self.n:
                m += cj * np.eye(self.n, k=j)
        return m

    def roots(self):
        """Roots of ``sum_j c_j x^j``; the matrix equals ``c_g prod (J - root I)``."""
        return np.roots(np.asarray(self.c, dtype=complex)[::-1])


def toeplitz_minor(tmat, rows_removed, cols_removed, dist_tol=1e-6):
    """Minor of an upper-triangular banded Toeplitz matrix as a skew Schur value.

    With ``T = c_g prod (J - r_j I)`` and ``c_0 = c_g (-1)^g prod r_j``,
    deleting rows ``X`` and columns ``Y`` leaves
    ``c_g^{n-k} (-1)^{(n-k) g} prod(r)^{n-k} s_{lam/mu}(1/r)`` up to the
    sign ``(-1)^{|lam|+|mu|}``, where ``lam_i = n-k+i-y_i`` and
    ``mu_i = n-k+i-x_i`` are indexed through the kept complements.
    """
    X, Y = sorted(rows_removed), sorted(cols_removed)
    k = len(X)
    if len(Y) != k:
        raise SymfuncError("|X| must equal |Y|")
    n, g = tmat.n, tmat.g
    # interlacing: x_i >= y_i and x_i < y_{i+g}
    for i in range(k):
        if X[i] < Y[i]:
            return 0j
        if i + g < k and X[i] >= Y[i + g]:
            return 0j
    # staircase test on the kept rows/columns: 0 <= c_i - r_i <= g for all i
    kr, kc = _complement(n, X), _complement(n, Y)
    if any(not 0 <= cj - ri <= g for ri, cj in zip(kr, kc)):
        return 0j
    c = np.asarray(tmat.c, dtype=complex)
    if g == 0:
        return c[0] ** (n - k) if all(x == y for x, y in zip(X, Y)) else 0j
    r = tmat.roots()
    if r.size > 1:
        dd = np.abs(r[:, None] - r[None, :]) + np.eye(r.size)
        if dd.min() < dist_tol * max(1.0, np.abs(r).max()):
            raise SymfuncError("requires distinct roots")
    if np.any(r == 0):
        raise SymfuncError("requires nonzero constant coefficient")
    # normalize to a monic top coefficient: T = c_g * T_hat
    a0_hat = c[0] / c[-1]
    lam = [n - k + i - Y[i - 1] for i in range(1, k + 1)]
    mu = [n - k + i - X[i - 1] for i in range(1, k + 1)]
    # reverse so that parts are non-increasing
    lam, mu = lam[::-1], mu[::-1]
    s = _jt_from_xy(X, Y, 1 / r)
    sign = (-1) ** ((sum(lam) + sum(mu)) % 2)
    return complex(c[-1] ** (n - k) * sign * a0_hat ** (n - k) * s)


def _jt_from_xy(X, Y, t):
    """``det[h_{x_v - y_u}]`` evaluated at ``t``."""
    k = len(X)
    if k == 0:
        return 1 + 0j
    idx = [X[v] - Y[u] for u in range(k) for v in range(k)]
    h = h_table(max(max(idx), 0), t)
    m = np.array([h[q] if q >= 0 else 0 for q in idx], dtype=complex).reshape(k, k)
    return complex(np.linalg.det(m))


def minor_shape(n, X, Y):
    """Skew shape ``(lam, mu)`` attached to a minor with rows ``X``, columns ``Y`` removed."""
    X, Y = sorted(X), sorted(Y)
    k = len(X)
    lam = sorted((n - k + i - Y[i - 1] for i in range(1, k + 1)), reverse=True)
    mu = sorted((n - k + i - X[i - 1] for i in range(1, k + 1)), reverse=True)
    return SkewShape(IntegerPartition(tuple(lam)), IntegerPartition(tuple(mu)))


# -- Widom ---------------------------------------------------------------------

def _wlog(sym):
    """Return a symbol with ``N_- >= 1`` and the same Toeplitz determinants."""
    return sym if sym.n_minus >= 1 else sym.reflected()


def widom_terms(sym, z, n, sep_tol=1e-6):
    """Log-moduli and phases of the Widom terms ``C_I prod_{i in I} eta_i^N``."""
    sym = _wlog(as_symbol(sym))
    npl, nmi = wlog_band(sym)
    prof = roots_at(sym, z)
    eta = prof.eta
    if prof.m_inf or len(eta) != npl + nmi:
        raise SymfuncError("root count does not match the band")
    if np.any(eta == 0):
        raise SymfuncError("root at the origin")
    if len(eta) > 1:
        gap = np.abs(eta[:, None] - eta[None, :])
        np.fill_diagonal(gap, np.inf)
        if gap.min() < sep_tol * max(1.0, np.abs(eta).max()):
            raise SymfuncError("near-coincident roots")
    lead = sym.coeff(-nmi)
    out = []
    idx = range(len(eta))
    for I in itertools.combinations(idx, nmi):
        J = [j for j in idx if j not in I]
        logc = 0j
        for i in I:
            e = eta[i]
            logc += n * np.log(e)
            for j in J:
                logc += np.log(e) - np.log(e - eta[j])
        out.append(logc + n * np.log(lead))
    return np.array(out)


def widom_determinant(sym, z, n, sep_tol=1e-6):
    """``det P_N(p - z) = a_{-N_-}^N sum_I C_I prod_{i in I} eta_i^N``."""
    logs = widom_terms(sym, z, n, sep_tol)
    m = np.max(logs.real)
    return complex(np.exp(m) * np.sum(np.exp(logs - m)))


def widom_logdet(sym, z, n, sep_tol=1e-6):
    """``(log|det|, phase)`` from Widom's formula without overflow."""
    logs = widom_terms(sym, z, n, sep_tol)
    m = np.max(logs.real)
    s = np.sum(np.exp(logs - m))
    return float(m + np.log(abs(s))), complex(s / abs(s))


# -- det_k ------------------------------------------------------------------------

@dataclass
class DetExpansion:
    z: complex
    gamma: float
    seed: int | None
    scaled: np.ndarray  # det_k = scaled[k] * exp(log_scale)
    log_scale: float
    k0: int | None
    log_norm: float | None  # log |K(z)|
    branch: int | None
    det_direct: complex
    sum_residual: float

    @property
    def n(self):
        return len(self.scaled) - 1

    @property
    def det_k(self):
        with np.errstate(over="ignore"):
            return self.scaled * np.exp(self.log_scale)

    @property
    def normalized_abs(self):
        if self.log_norm is None:
            return None
        with np.errstate(over="ignore", divide="ignore"):
            return np.abs(self.scaled) * np.exp(self.log_scale - self.log_norm)

    def records(self):
        dk = self.det_k
        na = self.normalized_abs
        return [{"k": k, "re": float(dk[k].real), "im": float(dk[k].imag),
                 "normalized_abs": None if na is None else float(na[k])}
                for k in range(len(dk))]


def det_polynomial(pz, q, delta, radius=None):
    """Coefficients ``c_k`` of ``s -> det(pz + s delta Q)`` (scaled) and the log scale."""
    n = pz.shape[0]
    if radius is None:
        nq = np.linalg.norm(q, 2) * delta
        radius = math.sqrt(np.linalg.norm(pz, 2) / nq) if nq > 0 else 1.0
        radius = min(max(radius, 1e-3), 1e3)
    m = n + 1
    w = np.exp(2j * np.pi * np.arange(m) / m)
    nodes = radius * w
    mats = pz[None, :, :] + (nodes * delta)[:, None, None] * q[None, :, :]
    sign, logabs = np.linalg.slogdet(mats)
    L = float(np.max(logabs))
    vals = sign * np.exp(logabs - L)
    coef = np.fft.fft(vals) / m  # sum_l f(R w^l) w^{-lk} / m
    k = np.arange(m)
    coef = coef * np.exp(-k * math.log(radius))
    return coef, L, radius


def cauchy_binet_det_k(pz, q, delta, k):
    """Brute-force subset sum ``sum_{|X|=|Y|=k} (-1)^{sum X + sum Y} det(P[X^c;Y^c]) delta^k det(Q[X;Y])``."""
    n = pz.shape[0]
    total = 0j
    rows = range(1, n + 1)
    for X in itertools.combinations(rows, k):
        for Y in itertools.combinations(rows, k):
            sgn = -1 if (sum(X) + sum(Y)) % 2 else 1
            xi = [x - 1 for x in X]
            yi = [y - 1 for y in Y]
            dq = np.linalg.det(q[np.ix_(xi, yi)]) if k else 1.0
            total += sgn * direct_minor(pz, X, Y) * dq
    return complex(total * delta ** k)


def det_normalization(sym, z, n, gamma, branch):
    """``log|K(z)| = N log|a_{-N_-}| - gamma d_hat log N + N sum_{j<=m1+g0} log|eta_j|``."""
    sym = as_symbol(sym)
    if sym.n_minus < 1:
        return None, None
    npl, nmi = wlog_band(sym)
    prof = roots_at(sym, z)
    if prof.winding is None:
        return None, None
    d = prof.winding
    g0 = sym.g0
    m_minus = nmi - d
    if branch == 1:
        m1, dhat = m_minus, d - g0
    else:
        m1, dhat = m_minus - g0, d
    top = m1 + g0
    eta_abs = prof.eta_abs
    if top < 0 or top > len(eta_abs):
        return None, None
    val = n * math.log(abs(sym.coeff(-nmi))) - gamma * dhat * math.log(n)
    val += n * float(np.sum(np.log(eta_abs[:top])))
    m2 = len(eta_abs) - m1 - g0
    return val, m2 - npl


def det_expansion(sym, z, gamma, q, branch=None, seed=None, radius=None, check_tol=1e-4):
    """``det_k(z)``, the ``delta^k`` part of ``det(P_z + N^{-gamma} Q)``."""
    sym = as_symbol(sym)
    q = np.asarray(q, dtype=complex)
    n = q.shape[0]
    delta = n ** (-gamma)
    pz = build_toeplitz(sym, n, z).storage
    coef, L, radius = det_polynomial(pz, q, delta, radius)
    sign, logabs = np.linalg.slogdet(pz + delta * q)
    direct_scaled = sign * math.exp(logabs - L) if np.isfinite(logabs) else 0j
    total = coef.sum()
    denom = max(abs(direct_scaled), 1e-300)
    res = float(abs(total - direct_scaled) / denom)
    if res > check_tol:
        raise SymfuncError(f"interpolation conditioning failure (relative residual {res:.2e}); try a smaller n")
    if branch is None:
        from .regions import TubeSpec, tube_membership
        prof = roots_at(sym, z)
        d = prof.winding
        branch = None
        if d is not None:
            for b in (1, 2):
                ok, _ = tube_membership(TubeSpec(d=d, branch=b), sym, z)
                if ok:
                    branch = b
                    break
            if branch is None:
                branch = 1 if d > 0 else 2
    log_norm, k0 = det_normalization(sym, z, n, gamma, branch) if branch else (None, None)
    with np.errstate(over="ignore"):
        det_direct = complex(sign * np.exp(logabs))
    return DetExpansion(z=complex(z), gamma=float(gamma), seed=seed, scaled=coef, log_scale=L,
                        k0=k0, log_norm=log_norm, branch=branch, det_direct=det_direct,
                        sum_residual=res)

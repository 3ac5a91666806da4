"""Eigenpairs, singular triplets, gap reports and the fundamental solution."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .matrices import build_toeplitz
from .symbol import DEFAULT_KAPPA, SymbolError, as_symbol, roots_at

MAX_DENSE = 4096
FULL_SVD_MAX = 1024


class SpectralError(RuntimeError):
    pass


def _phase_factors(v):
    a = np.abs(v)
    idx = np.argmax(a > 1e-12 * a.max(axis=0, keepdims=True), axis=0)
    ph = v[idx, np.arange(v.shape[1])]
    return np.where(np.abs(ph) > 0, ph / np.where(np.abs(ph) > 0, np.abs(ph), 1), 1)


def _fix_phase(v):
    """Make the first non-negligible entry of each column real positive."""
    v = np.array(v, dtype=complex, copy=True)
    return v / _phase_factors(v)


def eigenpairs(m, vectors=True, max_n=MAX_DENSE, check=False):
    """Eigenvalues (and unit eigenvectors) sorted lexicographically by (re, im)."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("square matrix required")
    if m.shape[0] > max_n:
        raise ValueError(f"dimension {m.shape[0]} exceeds configured maximum {max_n}")
    try:
        if vectors:
            w, v = sla.eig(m, check_finite=True)
        else:
            w = sla.eigvals(m, check_finite=True)
    except sla.LinAlgError as exc:
        raise SpectralError(f"eigensolver failed to converge: {exc}") from exc
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    if not vectors:
        return w
    v = v[:, order]
    v /= np.linalg.norm(v, axis=0)
    v = _fix_phase(v)
    if check:
        res = np.linalg.norm(m @ v - v * w, axis=0)
        bound = 1e-8 * np.linalg.norm(m, 2)
        if np.any(res > bound):
            raise SpectralError(f"eigenpair residual {res.max():.3e} above {bound:.3e}")
    return w, v


@dataclass
class SingularTriplets:
    z: complex
    t: np.ndarray  # ascending
    e_vecs: np.ndarray  # columns e_i, (P - z) e_i = t_i f_i
    f_vecs: np.ndarray
    residual: float
    matrix: np.ndarray | None = field(default=None, repr=False)

    @property
    def k(self):
        return len(self.t)


def triplets_of(a, k=None, z=0j, method="auto", keep_matrix=True, **kw):
    """Smallest ``k`` singular triplets of the dense matrix ``a``."""
    a = np.asarray(a, dtype=complex)
    n = a.shape[1]
    k = n if k is None else int(k)
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if method == "auto":
        method = "dense" if n <= FULL_SVD_MAX or k > n // 4 else "inverse"
    if method == "dense":
        u, s, vh = sla.svd(a, lapack_driver="gesdd")
        t = s[::-1][:k]
        e = vh.conj().T[:, ::-1][:, :k]
        f = u[:, ::-1][:, :k]
        ph = _phase_factors(e)
        e, f = e / ph, f / ph
    elif method == "inverse":
        t, e, f = _inverse_subspace(a, k, **kw)
    else:
        raise ValueError(f"unknown method {method!r}")
    res = float(np.max(np.linalg.norm(a @ e - f * t, axis=0))) if k else 0.0
    return SingularTriplets(complex(z), t, e, f, res, a if keep_matrix else None)


def _inverse_subspace(a, k, oversample=4, iters=60, tol=1e-13, seed=0):
    """Subspace iteration with ``(A^* A)^{-1}`` through one LU factorization."""
    n = a.shape[0]
    lu, piv = sla.lu_factor(a)
    p = min(n, k + oversample)
    rng = np.random.default_rng(seed)
    x = np.linalg.qr(rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p)))[0]
    prev = None
    for _ in range(iters):
        y = sla.lu_solve((lu, piv), x, trans=2, check_finite=False)
        if not np.isfinite(y).all():
            raise SpectralError("inverse iteration overflowed (s_min below double range); "
                                "use smallest_singular_banded")
        x = np.linalg.qr(y)[0]
        x = np.linalg.qr(sla.lu_solve((lu, piv), x, check_finite=False))[0]
        ax = a @ x
        u, s, wh = np.linalg.svd(ax, full_matrices=False)
        s = s[::-1]
        if prev is not None and np.all(np.abs(s[:k] - prev) <= tol * max(s[-1], 1e-300) + tol * np.abs(s[:k])):
            break
        prev = s[:k].copy()
    w = wh.conj().T[:, ::-1][:, :k]
    e = _fix_phase(x @ w)
    t = s[:k]
    f = a @ e / np.where(t > 0, t, 1)
    return t, e, f


def singular_triplets(sym, z, n, k=None, method="auto", **kw):
    """Smallest ``k`` singular triplets of ``P_N - z``."""
    a = build_toeplitz(sym, n, z).storage
    return triplets_of(a, k, z=z, method=method, **kw)


def _dilation(sym, z, n):
    """Interleaved Hermitian dilation ``[[0, A], [A^*, 0]]`` as sparse CSC."""
    lo, up = max(sym.n_plus, 0), max(sym.n_minus, 0)
    rows, cols, vals = [], [], []
    for off in range(-up, lo + 1):
        c = sym.coeff(off) - (z if off == 0 else 0)
        if c == 0:
            continue
        i = np.arange(max(0, off), min(n, n + off))
        r, s = 2 * i, 2 * (i - off) + 1
        rows += [r, s]
        cols += [s, r]
        vals += [np.full(i.size, c), np.full(i.size, np.conj(c))]
    h = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(2 * n, 2 * n), dtype=complex)
    return h


def smallest_singular_banded(sym, z, n, k=1, iters=100, tol=1e-11, seed=0):
    """Bottom right singular subspace of ``P_N - z`` at linear cost in ``N``.

    Works on the banded Hermitian dilation ``H`` (eigenvalues ``+-t_i``)
    with shift-invert iteration about ``i sigma``: ``H - i sigma`` is never
    singular, so exponentially small ``t`` cause no overflow. Near ``t = 0``
    the ``+-t`` pair mixes, so the ``e`` halves of the ``2k`` Ritz vectors
    are re-orthonormalised. Returns ``(t, e)`` with ``e`` of shape ``(n, k)``.
    ``t`` is accurate to about ``eps * ||A||`` in absolute terms; the
    subspace needs a gap ``t_k << t_{k+1}`` to converge quickly.
    """
    sym = as_symbol(sym)
    n = int(n)
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    h = _dilation(sym, z, n)
    scale = max(1.0, float(abs(z)) + sum(abs(a) for _, a in sym.items()))
    sigma = 1e-9 * scale
    lu = spla.splu(h - 1j * sigma * sp.identity(2 * n, dtype=complex, format="csc"),
                   permc_spec="NATURAL", options={"SymmetricMode": False})
    m = min(2 * n, 2 * k + 4)
    rng = np.random.default_rng(seed)
    x = np.linalg.qr(rng.standard_normal((2 * n, m)) + 1j * rng.standard_normal((2 * n, m)))[0]
    prev = None
    for _ in range(iters):
        x = np.linalg.qr(lu.solve(x))[0]
        # Ritz on H^2 (positive semidefinite, no spurious interior values)
        _, theta, wh = np.linalg.svd(h @ x, full_matrices=False)
        theta, y = theta[::-1], wh.conj().T[:, ::-1]
        t = theta[:2 * k:2]
        v = x @ y[:, :2 * k]
        if prev is not None and np.linalg.norm(v - prev @ (prev.conj().T @ v), 2) <= tol:
            break
        prev = v
    uu, _, _ = np.linalg.svd(v[1::2, :], full_matrices=False)
    return t, _fix_phase(uu[:, :k])


# -- gaps --------------------------------------------------------------------

@dataclass
class GapReport:
    z: complex
    d: int
    m0: int
    t_low: float | None
    t_mid_lo: float | None
    t_d: float
    t_next: float
    ratios: dict
    n: int = 0
    in_good_region: bool | None = None

    def as_dict(self):
        return {"z": [self.z.real, self.z.imag], "n": self.n, "d": self.d, "m0": self.m0,
                "t_low": self.t_low, "t_mid_lo": self.t_mid_lo, "t_d": self.t_d,
                "t_next": self.t_next, "ratios": self.ratios}


def gap_report(sym, z, n, kappa=DEFAULT_KAPPA, triplets=None):
    """Boundary singular values around the ``|d| - m0`` and ``|d|`` splits."""
    prof = roots_at(sym, z, kappa=kappa)
    if prof.on_curve:
        raise SymbolError("winding undefined on spectral curve")
    d = prof.winding
    if d == 0:
        raise SpectralError("no small singular values expected (winding 0)")
    m0 = prof.decay_split[0] if d > 0 else prof.decay_split[1]
    m0 = min(m0, abs(d))
    ad = abs(d)
    st = triplets or singular_triplets(sym, z, n, k=min(n, ad + 1))
    t = st.t
    lo_idx = ad - m0
    t_low = float(t[lo_idx - 1]) if lo_idx >= 1 else None
    t_mid = float(t[lo_idx]) if lo_idx < ad else None
    t_d, t_next = float(t[ad - 1]), float(t[ad])
    ratios = {"next_over_d": t_next / t_d if t_d > 0 else math.inf}
    if t_low is not None and t_mid is not None:
        ratios["mid_over_low"] = t_mid / t_low if t_low > 0 else math.inf
    return GapReport(complex(z), d, m0, t_low, t_mid, t_d, t_next, ratios, n=n)


# -- fundamental solution ------------------------------------------------------

def fundamental_solution(q, window, gap_tol=1e-6):
    """``E`` with ``Op(q) E = delta_0`` evaluated on the integers in ``window``.

    Residues of ``zeta^{n-1} / q(zeta)``: inside roots for ``n`` large,
    outside roots for ``n`` small, so that every evaluated power decays.
    """
    q = as_symbol(q)
    prof = roots_at(q, 0.0)
    if prof.on_curve:
        raise SpectralError("q vanishes on the unit circle")
    if prof.m0 > 1:
        raise SpectralError("near-degenerate roots: repeated root at 0")
    r = prof.roots
    if len(r) > 1:
        gaps = np.abs(r[:, None] - r[None, :])
        np.fill_diagonal(gaps, np.inf)
        if gaps.min() < gap_tol * max(1.0, np.abs(r).max()):
            raise SpectralError("near-degenerate roots")
    npl = prof.n_plus
    nmi = max(q.n_minus, 0) - prof.m_inf
    # Q(zeta) = zeta^{npl} q(zeta) = lead * prod(zeta - r); Q'(r_k)
    dq = prof.lead * np.array([np.prod(rk - np.delete(r, i)) for i, rk in enumerate(r)])
    inside = np.abs(r) < 1
    lo, hi = window
    out = {}
    for n in range(int(lo), int(hi) + 1):
        p = n - 1 + npl
        use_inside = p >= 0 and (n >= 1 or n > nmi - 1)
        if use_inside:
            rr, dd = r[inside], dq[inside]
            with np.errstate(invalid="ignore", divide="ignore"):
                val = np.sum(np.where(rr == 0, 1.0 if p == 0 else 0.0, rr ** max(p, 0)) / dd) if rr.size else 0j
        else:
            if n > nmi - 1:
                raise SpectralError(f"no residue formula for n={n}")
            rr, dd = r[~inside], dq[~inside]
            val = -np.sum(rr ** float(p) / dd) if rr.size else 0j
        out[n] = complex(val)
    return out


def apply_op(q, values, window):
    """``(Op(q) E)(n) = sum_j q_j E(n - j)`` on ``window``; missing values are 0."""
    q = as_symbol(q)
    lo, hi = window
    return {n: complex(sum(a * values.get(n - j, 0j) for j, a in q.items()))
            for n in range(int(lo), int(hi) + 1)}


def resolvent_norm(sym, z, n):
    """``1 / s_min(P_N - z)``."""
    s = sla.svdvals(build_toeplitz(sym, n, z).storage)
    if s[-1] <= 1e-15 * s[0]:
        raise SpectralError("matrix is numerically singular")
    return float(1.0 / s[-1])

"""Quasimodes of ``P_N - z`` built from exponential states of the symbol roots.

For winding ``d > 0`` the states are ``(1, zeta, ..., zeta^{N-1})`` for the
roots inside the unit disc.  Combinations vanishing on the ``N_+`` virtual
indices ``-N_+..-1`` solve ``(P_N - z) u = 0`` except in the last rows.  Fast
and slow roots are orthonormalised separately, and slow modes get a cosine
taper near the right edge.  The case ``d < 0`` is obtained from the reflected
symbol and the index flip ``nu -> N - 1 - nu``, using ``P(p) = J P(p~) J``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .matrices import build_toeplitz
from .symbol import DEFAULT_KAPPA, SymbolError, as_symbol, roots_at


class QuasimodeError(RuntimeError):
    pass


@dataclass
class ExponentialStateSet:
    z: complex
    n: int
    side: str
    roots: np.ndarray
    states: np.ndarray
    norms: np.ndarray


def exponential_states(profile, n, side="plus"):
    """Columns ``zeta_j^nu`` (plus) or ``zeta_j^{nu - N + 1}`` (minus)."""
    nu = np.arange(n)
    if side == "plus":
        r = profile.inside
        st = r[None, :] ** nu[:, None] if r.size else np.zeros((n, 0), complex)
        if r.size:
            st[0, :] = 1.0
    elif side == "minus":
        r = np.concatenate([profile.outside, np.full(profile.m_inf, np.inf + 0j)])
        inv = np.where(np.isinf(r), 0, 1 / np.where(np.isinf(r), 1, r))
        st = inv[None, :] ** (n - 1 - nu)[:, None] if r.size else np.zeros((n, 0), complex)
        if r.size:
            st[-1, :] = 1.0
    else:
        raise ValueError("side must be 'plus' or 'minus'")
    st = st.astype(complex)
    return ExponentialStateSet(profile.z, n, side, r, st, np.linalg.norm(st, axis=0))


def gram_closed_form(roots, n):
    """``<z_i|z_j> = (1 - (conj(r_i) r_j)^N) / (1 - conj(r_i) r_j)`` (plus side)."""
    w = np.conj(roots)[:, None] * roots[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        g = (1 - w ** n) / (1 - w)
    return np.where(np.abs(1 - w) < 1e-14, n, g)


@dataclass
class KernelCoefficients:
    A: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    boundary: np.ndarray  # the matrix with rows (zeta_j^nu), nu = -N_+..-1
    cond_B: float


def kernel_coefficients(profile, n_plus=None, m0=None, cond_max=1e12):
    """Coefficient blocks ``A = (A_1 | A_2)`` for the plus side.

    :param n_plus: number of boundary conditions (``N_+ v 0`` by default).
    :param m0: number of slow roots; taken from ``profile.decay_split``.
    """
    npl = profile.n_plus if n_plus is None else int(n_plus)
    r = profile.inside
    mp = r.size
    d = mp - npl
    if d <= 0:
        raise QuasimodeError("plus-side coefficients need m_+ > N_+")
    m0 = profile.decay_split[0] if m0 is None else int(m0)
    m0 = min(m0, d)
    nfast = mp - m0
    if npl == 0:
        eye = np.eye(mp, dtype=complex)
        return KernelCoefficients(eye, eye[:, :nfast], eye[:, nfast:], np.zeros((0, mp), complex), 1.0)
    if np.any(r == 0):
        raise QuasimodeError("root at the origin; only the generic root case is supported")
    nu = np.arange(-npl, 0)
    frak_a = r[None, :] ** nu[:, None]
    B = frak_a[:, :npl]
    cond = float(np.linalg.cond(B))
    if not np.isfinite(cond) or cond > cond_max:
        raise QuasimodeError(f"boundary block ill-conditioned (cond={cond:.3e})")
    A1 = np.zeros((mp, d - m0), dtype=complex)
    if d - m0 > 0:
        X = sla.null_space(frak_a[:, :nfast])
        if X.shape[1] != d - m0:
            raise QuasimodeError("fast boundary block has unexpected rank")
        A1[:nfast] = X
    A2 = np.zeros((mp, m0), dtype=complex)
    if m0:
        A2[:npl] = -np.linalg.solve(B, frak_a[:, nfast:])
        A2[nfast:] = np.eye(m0)
    return KernelCoefficients(np.hstack([A1, A2]), A1, A2, frak_a, cond)


def _inv_sqrt(g, cond_max=1e12, floor=1e-14):
    w, v = np.linalg.eigh((g + g.conj().T) / 2)
    if w.size and (w.min() <= 0 or w.max() / w.min() > cond_max):
        raise QuasimodeError(f"Gram matrix not invertible (cond={w.max() / max(w.min(), 1e-300):.3e})")
    w = np.maximum(w, floor)
    return (v / np.sqrt(w)) @ v.conj().T


def taper_start(n):
    return int(round((1 - 1 / math.log(n)) * (n - 1)))


def taper(n, n0=None):
    """Right-edge cosine taper: 1 up to ``N0``, then ``cos(pi nu/2(N-1)) / cos(pi N0/2(N-1))``."""
    n0 = taper_start(n) if n0 is None else n0
    nu = np.arange(n)
    c = np.cos(np.pi * nu / (2 * (n - 1))) / np.cos(np.pi * n0 / (2 * (n - 1)))
    return np.where(nu <= n0, 1.0, c)


@dataclass
class QuasimodeBasis:
    z: complex
    d: int
    class_1: list
    class_2: list
    psi: np.ndarray
    u_tilde: np.ndarray
    N0: int
    residuals: np.ndarray
    gram_error: float
    side: str
    roots_fast: np.ndarray
    roots_slow: np.ndarray

    @property
    def n(self):
        return self.psi.shape[0]


def _plus_modes(sym, z, n, kappa):
    prof = roots_at(sym, z, kappa=kappa)
    if prof.on_curve:
        raise SymbolError("winding undefined on spectral curve")
    if prof.m0 or prof.m_inf:
        raise QuasimodeError("roots at 0 or infinity; only the generic root case is supported")
    kc = kernel_coefficients(prof)
    ex = exponential_states(prof, n, "plus")
    Z = ex.states
    m0 = kc.A2.shape[1]
    blocks = []
    if kc.A1.shape[1]:
        u1 = Z @ kc.A1
        blocks.append(u1 @ _inv_sqrt(u1.conj().T @ u1))
    if m0:
        L = ex.norms[-m0:]
        u2 = (Z @ kc.A2) / L
        blocks.append(u2 @ _inv_sqrt(u2.conj().T @ u2))
    ut = np.hstack(blocks)
    inside = prof.inside
    return prof, ut, kc.A1.shape[1], inside[:inside.size - m0], inside[inside.size - m0:]


def quasimode_basis(sym, z, n, kappa=DEFAULT_KAPPA):
    """Tapered quasimodes, one per unit of winding."""
    sym = as_symbol(sym)
    prof = roots_at(sym, z, kappa=kappa)
    if prof.on_curve:
        raise SymbolError("winding undefined on spectral curve")
    d = prof.winding
    if d == 0:
        raise QuasimodeError("winding 0: no quasimodes")
    side = "plus" if d > 0 else "minus"
    work = sym if d > 0 else sym.reflected()
    _, ut, n1, fast, slow = _plus_modes(work, z, n, kappa)
    n0 = taper_start(n)
    psi = ut.copy()
    psi[:, n1:] *= taper(n, n0)[:, None]
    if d < 0:
        ut, psi = ut[::-1], psi[::-1]
        fast, slow = 1 / fast, 1 / slow
    p = build_toeplitz(sym, n, z).storage
    res = np.linalg.norm(p @ psi, axis=0)
    gram = psi.conj().T @ psi
    gerr = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))
    ad = abs(d)
    return QuasimodeBasis(z=complex(z), d=d, class_1=list(range(n1)), class_2=list(range(n1, ad)),
                          psi=psi, u_tilde=ut, N0=n0, residuals=res, gram_error=gerr, side=side,
                          roots_fast=fast, roots_slow=slow)


def compare_with_singular_vectors(qb, st):
    """Principal angles (fast modes) and state regression (slow modes)."""
    ad = abs(qb.d)
    if st.k < ad:
        raise ValueError("need at least |d| singular triplets")
    n1 = len(qb.class_1)
    out = {"d": qb.d, "n_fast": n1, "n_slow": len(qb.class_2)}
    if n1:
        ang = sla.subspace_angles(qb.psi[:, :n1], st.e_vecs[:, :n1])
        out["fast_max_angle"] = float(np.max(ang))
    bottom = st.e_vecs[:, :ad]
    proj = bottom @ (bottom.conj().T @ qb.psi)
    out["psi_deficit"] = [float(x) for x in np.linalg.norm(qb.psi - proj, axis=0)]
    if qb.class_2:
        n = qb.n
        roots = qb.roots_slow
        nu = np.arange(n)
        if qb.side == "plus":
            Zs = roots[None, :] ** nu[:, None]
        else:
            Zs = (1 / roots)[None, :] ** (n - 1 - nu)[:, None]
        Zs = Zs / np.linalg.norm(Zs, axis=0)
        E2 = st.e_vecs[:, n1:ad]
        b, *_ = np.linalg.lstsq(Zs, E2, rcond=None)
        out["b_residual"] = [float(x) for x in np.linalg.norm(Zs @ b - E2, axis=0)]
        gb = b.conj().T @ b
        out["b_gram_error"] = float(np.max(np.abs(gb - np.eye(gb.shape[0]))))
    return out

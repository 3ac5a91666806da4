"""Grushin (augmented) problems built from singular triplets.

For ``P e_i = t_i f_i`` the system ``[[P, R_-], [R_+, 0]]`` with
``R_+ = sum_{i<=M} delta_i e_i^*`` and ``R_- = sum_{i<=M} f_i delta_i^*``
is invertible with inverse ``[[E, E_+], [E_-, E_-+]]``. The delta basis is
the standard basis of ``C^M``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla


class GrushinError(RuntimeError):
    pass


@dataclass
class GrushinBlocks:
    z: complex
    M: int
    alpha: float
    E: np.ndarray
    E_plus: np.ndarray
    E_minus: np.ndarray
    E_minus_plus: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray
    P: np.ndarray = field(repr=False)
    t: np.ndarray = field(repr=False)

    def augmented(self, delta=0.0, q=None):
        p = self.P if q is None else self.P + delta * q
        m = self.M
        return np.block([[p, self.R_minus], [self.R_plus, np.zeros((m, m))]])

    def inverse(self):
        return np.block([[self.E, self.E_plus], [self.E_minus, self.E_minus_plus]])

    def inverse_error(self):
        n = self.P.shape[0] + self.M
        return float(np.max(np.abs(self.augmented() @ self.inverse() - np.eye(n))))

    def norms(self):
        return {"E": np.linalg.norm(self.E, 2), "E_plus": np.linalg.norm(self.E_plus, 2),
                "E_minus": np.linalg.norm(self.E_minus, 2),
                "E_minus_plus": np.linalg.norm(self.E_minus_plus, 2), "alpha": self.alpha}


def build_grushin(triplets, M):
    """Blocks from a full set of singular triplets (``k = N``)."""
    t, e, f = triplets.t, triplets.e_vecs, triplets.f_vecs
    n = e.shape[0]
    if triplets.k != n:
        raise GrushinError("build_grushin needs all N singular triplets")
    P = triplets.matrix
    if P is None:
        raise GrushinError("triplets must carry the matrix")
    if not 0 < M < n:
        raise GrushinError("need 0 < M < N")
    if t[M] - t[M - 1] <= 1e-12 * max(t[M], 1.0):
        raise GrushinError(f"no spectral gap at M={M}")
    alpha = float(np.sqrt(t[M - 1] * t[M]))
    alpha = min(max(alpha, t[M - 1]), np.nextafter(t[M], 0))
    e1, f1 = e[:, :M], f[:, :M]
    e2, f2 = e[:, M:], f[:, M:]
    E = (e2 / t[M:]) @ f2.conj().T
    return GrushinBlocks(z=triplets.z, M=M, alpha=float(alpha), E=E, E_plus=e1,
                         E_minus=f1.conj().T, E_minus_plus=-np.diag(t[:M]).astype(complex),
                         R_plus=e1.conj().T, R_minus=f1, P=P, t=t)


@dataclass
class PerturbedGrushinBlocks:
    delta: float
    E: np.ndarray
    E_plus: np.ndarray
    E_minus: np.ndarray
    E_minus_plus: np.ndarray
    invertibility_margin: float
    Q: np.ndarray = field(repr=False)

    def inverse(self):
        return np.block([[self.E, self.E_plus], [self.E_minus, self.E_minus_plus]])


def perturbed_blocks(g, q, delta, margin_tol=1e-10):
    """Blocks of the perturbed problem with ``P + delta Q`` in the corner."""
    q = np.asarray(q, dtype=complex)
    n = g.P.shape[0]
    k = np.eye(n) + delta * q @ g.E
    margin = float(sla.svdvals(k)[-1])
    if margin <= margin_tol:
        raise GrushinError(f"I + delta Q E nearly singular (s_min={margin:.3e})")
    lu = sla.lu_factor(k)
    # X (I + dQE)^{-1} = (((I + dQE)^{-1})^T X^T)^T
    kinv = lambda x: sla.lu_solve(lu, x.T, trans=1).T
    Ed = kinv(g.E)
    Emd = kinv(g.E_minus)
    dqe = delta * q @ g.E_plus
    Empd = g.E_minus_plus - Emd @ dqe
    Epd = g.E_plus - Ed @ dqe
    return PerturbedGrushinBlocks(delta=float(delta), E=Ed, E_plus=Epd, E_minus=Emd,
                                  E_minus_plus=Empd, invertibility_margin=margin, Q=q)


def direct_perturbed_inverse(g, q, delta):
    """Reference: invert the perturbed augmented matrix directly."""
    inv = np.linalg.inv(g.augmented(delta, q))
    n = g.P.shape[0]
    return inv[:n, :n], inv[:n, n:], inv[n:, :n], inv[n:, n:]


@dataclass
class KernelMap:
    right: np.ndarray  # columns: E_+^delta u for u in null(E_-+^delta)
    left: np.ndarray  # columns: (E_-^delta)^* w for w in null((E_-+^delta)^*)
    source_right: np.ndarray
    source_left: np.ndarray
    residual_right: float
    residual_left: float

    @property
    def empty(self):
        return self.right.shape[1] == 0


def kernel_via_grushin(pg, g, rel_tol=1e-8):
    """Map null spaces of the effective Hamiltonian to those of ``P^delta``."""
    emp = pg.E_minus_plus
    u, s, vh = np.linalg.svd(emp)
    scale = max(np.linalg.norm(emp, 2), g.alpha, 1e-300)
    small = s <= rel_tol * scale
    ur = vh.conj().T[:, small]
    wl = u[:, small]
    right = pg.E_plus @ ur
    left = pg.E_minus.conj().T @ wl
    right = right / np.maximum(np.linalg.norm(right, axis=0), 1e-300)
    left = left / np.maximum(np.linalg.norm(left, axis=0), 1e-300)
    pd = g.P + pg.delta * pg.Q
    rr = float(np.max(np.linalg.norm(pd @ right, axis=0))) if right.shape[1] else 0.0
    rl = float(np.max(np.linalg.norm(pd.conj().T @ left, axis=0))) if left.shape[1] else 0.0
    return KernelMap(right, left, ur, wl, rr, rl)


def resolvent_expansion_check(g, q, delta, L, gamma=None):
    """Neumann truncation error and Hilbert-Schmidt diagnostics with envelopes."""
    q = np.asarray(q, dtype=complex)
    n = g.P.shape[0]
    a = delta * q @ g.E
    margin = float(sla.svdvals(np.eye(n) + a)[-1])
    if margin <= 0:
        raise GrushinError("I + delta Q E is singular")
    exact = np.linalg.inv(np.eye(n) + a)
    errors = []
    partial = np.zeros_like(a)
    term = np.eye(n, dtype=complex)
    for _ in range(L):
        partial = partial + term
        errors.append(float(np.linalg.norm(exact - partial, 2)))
        term = -term @ a
    if gamma is None:
        gamma = -np.log(delta) / np.log(n) if delta > 0 else np.inf
    eq = np.linalg.matrix_power(g.E @ q, L)
    qe = np.linalg.matrix_power(q @ g.E, L)
    dk = delta ** L
    hs = {
        "EQ^k E_plus": dk * np.linalg.norm(eq @ g.E_plus),
        "EQ^k E": dk * np.linalg.norm(eq @ g.E),
        "E_minus QE^k": dk * np.linalg.norm(g.E_minus @ qe),
        "E_minus QE^k Q E_plus": dk * delta * np.linalg.norm(g.E_minus @ qe @ q @ g.E_plus),
    }
    base = n ** (-(gamma - 1) * L / 2) if np.isfinite(gamma) else 0.0
    env = {"EQ^k E_plus": base, "EQ^k E": n * base, "E_minus QE^k": base,
           "E_minus QE^k Q E_plus": n ** (-gamma) * base if np.isfinite(gamma) else 0.0}
    rho = float(np.linalg.norm(a, 2))
    bound = rho ** L / (1 - rho) if rho < 1 else np.inf
    return {"L": L, "truncation_errors": errors, "truncation_error": errors[-1] if errors else 0.0,
            "neumann_bound": bound, "norm_dQE": rho, "margin": margin,
            "hs": {k: float(v) for k, v in hs.items()}, "envelopes": {k: float(v) for k, v in env.items()}}

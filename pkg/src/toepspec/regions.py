"""Forbidden tubes, good regions, eigenvalue location statistics, Jensen counts.

Tubes are described through the moduli of ``eta_j = -zeta_j`` sorted
non-increasingly (see :class:`~toepspec.symbol.RootProfile`).  Indices are
1-based; out of range indices follow ``|eta_j| = inf`` for ``j <= 0`` and
``|eta_j| = 0`` for ``j > m~``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .matrices import wlog_band
from .symbol import as_symbol, curve_diameter, curve_points, roots_at

DEFAULT_EPS0 = 0.2


class RegionError(ValueError):
    pass


@dataclass
class TubeSpec:
    d: int
    branch: int = 1
    eps0: float = DEFAULT_EPS0
    eps0_prime: float | None = None
    g0: int | None = None  # taken from the symbol when None

    def __post_init__(self):
        if self.branch not in (1, 2):
            raise RegionError("branch must be 1 or 2")
        if self.eps0_prime is None:
            self.eps0_prime = self.eps0 / 8
        if not 0 < self.eps0_prime < self.eps0:
            raise RegionError("need 0 < eps0_prime < eps0")

    @classmethod
    def hatted(cls, d, branch, gamma_prime, n, eps0=DEFAULT_EPS0, g0=None):
        """Tube of vanishing width: ``eps0' = (gamma' - 1) log N / N``."""
        if gamma_prime <= 1:
            raise RegionError("gamma_prime must exceed 1")
        return cls(d, branch, eps0, (gamma_prime - 1) * math.log(n) / n, g0)


def _eta_getter(eta_abs):
    m = len(eta_abs)

    def get(j):
        if j <= 0:
            return math.inf
        if j > m:
            return 0.0
        return float(eta_abs[j - 1])

    return get


def _inv(x):
    return 0.0 if math.isinf(x) else (math.inf if x == 0 else 1.0 / x)


def tube_membership(spec, sym, z):
    """``(member, witness)`` for ``z`` in ``T^{d,(branch)}``.

    Closure branches (branch 1) relax the strict ``< 1`` to ``<= 1`` and
    accept points on the curve itself.
    """
    sym = as_symbol(sym)
    prof = roots_at(sym, z)
    g0 = sym.g0 if spec.g0 is None else spec.g0
    npl, nmi = wlog_band(sym)
    mt = len(prof.eta)
    d = int(spec.d)
    wit = {"d": d, "branch": spec.branch, "winding": prof.winding, "g0": g0}
    if abs(d) > mt or (d == 0 and spec.branch == 1):
        return False, wit
    closure = spec.branch == 1
    if prof.on_curve and not closure:
        return False, wit
    if not prof.on_curve and prof.winding != d:
        return False, wit
    m_minus = max(nmi, 0) - d
    e = _eta_getter(prof.eta_abs)
    hi = 1 - spec.eps0
    lo = 1 - spec.eps0_prime
    # "inner" form: roots m_-+1..m_-+g0 just inside the circle
    # "outer" form: roots m_--g0+1..m_- just outside
    inner = (d < 0) == (spec.branch == 2)
    if inner:
        a, b = e(m_minus + g0), e(m_minus + 1)
        far = max(e(m_minus + g0 + 1), _inv(e(m_minus)))
    else:
        a, b = _inv(e(m_minus - g0 + 1)), _inv(e(m_minus))
        far = max(e(m_minus + 1), _inv(e(m_minus - g0)))
    top = b <= 1 if closure else b < 1
    ok = far <= hi and lo <= a <= b and top
    wit.update({"m_minus": m_minus, "form": "inner" if inner else "outer",
                "far": far, "near_lo": a, "near_hi": b, "bounds": (lo, hi)})
    return bool(ok), wit


def tube_branch(sym, z, eps0=DEFAULT_EPS0, eps0_prime=None):
    """First branch (1 then 2) of ``T^{d(z)}`` containing ``z``, else ``None``."""
    prof = roots_at(sym, z)
    if prof.winding is None:
        return None
    for b in (1, 2):
        if tube_membership(TubeSpec(prof.winding, b, eps0, eps0_prime), sym, z)[0]:
            return b
    return None


# -- distance to the curve away from bad sets --------------------------------

class CurveIndex:
    """KD-tree over a dense sampling of ``p(S^1)`` minus bad-set blow-ups."""

    def __init__(self, sym, bad=None, epsilon=None, grid=32768):
        sym = as_symbol(sym)
        _, w = curve_points(sym, grid)
        if bad is not None and bad.points.size:
            keep = ~bad.near(w, bad.radius if epsilon is None else epsilon)
            w = w[keep]
        self.points = w
        self.tree = cKDTree(np.column_stack([w.real, w.imag])) if w.size else None

    def dist(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.tree is None:
            return np.full(z.shape, np.inf)
        d, _ = self.tree.query(np.column_stack([z.real, z.imag]))
        return d


@dataclass
class GoodRegion:
    epsilon: float
    C: float
    N: int

    def __post_init__(self):
        if not 2 * self.C * math.log(self.N) / self.N < self.epsilon:
            raise RegionError("need 2 C log N / N < epsilon")

    @property
    def scale(self):
        return math.log(self.N) / self.N


def good_region_test(gr, sym, bad, z, index=None):
    """``C^{-1} log N/N < dist(z, G) < C log N/N`` and ``d(z) != 0``."""
    index = index or CurveIndex(sym, bad, gr.epsilon)
    dist = float(index.dist(z)[0])
    s = gr.scale
    if not s / gr.C < dist < gr.C * s:
        return False
    w = roots_at(sym, z).winding
    return w is not None and w != 0


# -- c hat ---------------------------------------------------------------------

def root_derivative_sup(sym, eps_tilde=None, bad=None, grid=81, curve_grid=4096):
    """``sup |d eta_j / dz|`` over the ``eps_tilde`` neighbourhood of the curve.

    Uses ``d zeta / dz = 1 / p'(zeta)`` at every root; points within
    ``eps_tilde`` of a branch point are skipped.
    """
    sym = as_symbol(sym)
    if eps_tilde is None:
        eps_tilde = 0.05 * curve_diameter(sym)
    _, w = curve_points(sym, curve_grid)
    x = np.linspace(w.real.min() - eps_tilde, w.real.max() + eps_tilde, grid)
    y = np.linspace(w.imag.min() - eps_tilde, w.imag.max() + eps_tilde, grid)
    zz = (x[None, :] + 1j * y[:, None]).ravel()
    near, _ = cKDTree(np.column_stack([w.real, w.imag])).query(np.column_stack([zz.real, zz.imag]))
    zz = np.concatenate([zz[near <= eps_tilde], w[::max(1, curve_grid // 1024)]])
    if bad is not None and bad.b2.size:
        zz = zz[np.min(np.abs(zz[:, None] - bad.b2[None, :]), axis=1) > eps_tilde]
    best = 0.0
    for z in zz:
        r = roots_at(sym, z).roots
        r = r[np.abs(r) > 0]
        if r.size:
            best = max(best, float(np.max(1 / np.abs(sym.derivative(r)))))
    return best


def c_hat(sym, gamma_prime, eps_tilde=None, bad=None, **kw):
    return (gamma_prime - 1) / root_derivative_sup(sym, eps_tilde, bad, **kw)


# -- location statistics ---------------------------------------------------------

@dataclass
class LocationParams:
    N: int
    epsilon: float
    C: float
    gamma_prime: float = 1.25
    c_hat: float | None = None  # computed from the symbol when None
    eps0: float = DEFAULT_EPS0


@dataclass
class LocationStats:
    n_total: int
    n_good: int
    n_forbidden: int
    n_other: int
    min_dist_to_curve: float  # units of log N / N, off bad sets
    c_hat: float
    records: list = field(default_factory=list)

    def as_dict(self):
        return {"n_total": self.n_total, "n_good": self.n_good, "n_forbidden": self.n_forbidden,
                "n_other": self.n_other, "min_dist_to_curve": self.min_dist_to_curve,
                "c_hat": self.c_hat}


def location_stats(eigs, sym, bad, params):
    """Classify eigenvalues as good (in Omega), forbidden or other."""
    sym = as_symbol(sym)
    eigs = np.asarray(eigs, dtype=complex).ravel()
    ch = params.c_hat
    if ch is None:
        ch = c_hat(sym, params.gamma_prime, bad=bad)
    if eigs.size == 0:
        return LocationStats(0, 0, 0, 0, math.inf, ch)
    n = params.N
    s = math.log(n) / n
    index = CurveIndex(sym, bad, params.epsilon)
    dist = index.dist(eigs)
    off_bad = ~bad.near(eigs, params.epsilon) if bad is not None else np.ones(eigs.size, bool)
    recs = []
    counts = {"good": 0, "forbidden": 0, "other": 0}
    for lam, dz, ob in zip(eigs, dist, off_bad):
        w = roots_at(sym, lam).winding
        tub = False
        if ob and w is not None:
            for b in (1, 2):
                try:
                    spec = TubeSpec.hatted(w, b, params.gamma_prime, n, params.eps0)
                except RegionError:
                    break
                if tube_membership(spec, sym, lam)[0]:
                    tub = True
                    break
        if ob and (dz < ch * s or tub):
            cls = "forbidden"
        elif s / params.C < dz < params.C * s and w not in (None, 0):
            cls = "good"
        else:
            cls = "other"
        counts[cls] += 1
        recs.append({"re": float(lam.real), "im": float(lam.imag), "class": cls,
                     "d": w, "dist_scaled": float(dz / s)})
    md = float(np.min(dist[off_bad]) / s) if off_bad.any() else math.inf
    return LocationStats(int(eigs.size), counts["good"], counts["forbidden"], counts["other"],
                         md, ch, recs)


# -- Jensen --------------------------------------------------------------------

def _log_abs_on(f, pts, log_abs):
    try:
        vals = np.asarray(f(pts))
        if vals.shape != pts.shape:
            raise ValueError
    except Exception:
        vals = np.array([f(p) for p in pts])
    if log_abs:
        return vals.astype(float)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(vals))


def jensen_integral(f, center, r, nodes=4096, log_abs=False):
    """``(1/2pi) int log|f(x + r e^{it})| dt - log|f(x)|`` by the trapezoid rule.

    With ``log_abs=True`` the callable returns ``log|f|`` directly.
    """
    c = complex(center)
    f0 = _log_abs_on(f, np.array([c]), log_abs)[0]
    if not np.isfinite(f0) or f0 < math.log(1e-300):
        raise RegionError("|f(center)| is below 1e-300")
    th = 2 * np.pi * np.arange(nodes) / nodes
    vals = _log_abs_on(f, c + r * np.exp(1j * th), log_abs)
    return float(np.mean(vals) - f0)


def jensen_count(f, center, r, u, nodes=4096, log_abs=False):
    """Upper bound on the number of zeros of ``f`` in ``D(center, u r)``."""
    if not 0 < u < 1:
        raise RegionError("u must lie in (0, 1)")
    return max(jensen_integral(f, center, r, nodes, log_abs) / (1 - u), 0.0)


def det_log_abs(matrix):
    """Callable ``x -> log|det(matrix - x)|`` for use with the Jensen helpers."""
    m = np.asarray(matrix, dtype=complex)
    eye = np.eye(m.shape[0])

    def f(xs):
        xs = np.atleast_1d(xs)
        return np.array([np.linalg.slogdet(m - x * eye)[1] for x in xs])

    return f

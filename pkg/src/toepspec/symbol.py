"""Laurent symbols of banded Toeplitz matrices.

A symbol is stored through its coefficients ``a_j`` and evaluated as
``p(zeta) = sum_j a_j zeta**(-j)``, so that ``P_N(i, j) = a_{i-j}``.
With this convention the Jordan block (ones on the superdiagonal) has
symbol ``p(zeta) = zeta``.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

TAU_CIRCLE = 1e-9
DEFAULT_KAPPA = 0.2


class SymbolError(ValueError):
    pass


class LaurentSymbol:
    """Finitely banded Laurent polynomial ``sum a_j zeta^{-j}``.

    :param coeffs: mapping ``j -> a_j``; zero entries are dropped.
    """

    __slots__ = ("_coeffs", "n_plus", "n_minus", "g0")

    def __init__(self, coeffs):
        items = {int(j): complex(a) for j, a in dict(coeffs).items() if complex(a) != 0}
        if not any(j != 0 for j in items):
            raise SymbolError("constant symbol: some a_j with j != 0 must be nonzero")
        self._coeffs = dict(sorted(items.items()))
        self.n_plus = max(items)
        self.n_minus = -min(items)
        self.g0 = reduce(math.gcd, (abs(j) for j in items if j != 0))

    # -- basic access ---------------------------------------------------
    @property
    def coeffs(self):
        return dict(self._coeffs)

    def coeff(self, j):
        return self._coeffs.get(int(j), 0j)

    def items(self):
        return self._coeffs.items()

    def __eq__(self, other):
        return isinstance(other, LaurentSymbol) and self._coeffs == other._coeffs

    def __hash__(self):
        return hash(tuple(self._coeffs.items()))

    def __repr__(self):
        return f"LaurentSymbol({self.to_literal()!r})"

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = np.zeros_like(zeta)
        for j, a in self._coeffs.items():
            out = out + a * zeta ** (-j)
        return out if out.ndim else complex(out)

    def derivative(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = np.zeros_like(zeta)
        for j, a in self._coeffs.items():
            if j:
                out = out - j * a * zeta ** (-j - 1)
        return out if out.ndim else complex(out)

    @property
    def width(self):
        """``(N_+ v 0) + (N_- v 0)``, the number of roots of ``p - z``."""
        return max(self.n_plus, 0) + max(self.n_minus, 0)

    # -- derived symbols ------------------------------------------------
    def shifted(self, z):
        """The symbol ``p - z``."""
        c = dict(self._coeffs)
        c[0] = c.get(0, 0j) - complex(z)
        return LaurentSymbol(c)

    def reflected(self):
        """``p(1/zeta)``; its Toeplitz matrix is the transpose."""
        return LaurentSymbol({-j: a for j, a in self._coeffs.items()})

    def contracted(self):
        """The symbol ``q`` with ``p(zeta) = q(zeta**g0)``."""
        g = self.g0
        return LaurentSymbol({j // g: a for j, a in self._coeffs.items()})

    def poly_coeffs(self, z=0.0):
        """Ascending coefficients of ``zeta^{N_+ v 0} (p(zeta) - z)``.

        The array has length ``width + 1``; trailing zeros encode roots at
        infinity and leading zeros roots at the origin.
        """
        npl = max(self.n_plus, 0)
        c = np.zeros(self.width + 1, dtype=complex)
        for j, a in self._coeffs.items():
            c[npl - j] += a
        c[npl] -= complex(z)
        return c

    # -- serialization --------------------------------------------------
    def to_json(self):
        return {"coeffs": [{"j": j, "re": a.real, "im": a.imag} for j, a in self._coeffs.items()]}

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls({int(t["j"]): complex(t.get("re", 0.0), t.get("im", 0.0)) for t in obj["coeffs"]})

    def to_literal(self):
        terms = []
        for j, a in sorted(self._coeffs.items(), key=lambda t: -t[0]):
            c = _fmt_complex(a)
            terms.append(c if j == 0 else f"{c}*z^{-j}")
        return " + ".join(terms)

    @classmethod
    def from_literal(cls, text):
        return parse_symbol(text)


def _fmt_complex(a):
    if a.imag == 0:
        return repr(a.real)
    return f"({a.real!r}{a.imag:+}j)"


_TERM = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?:(?P<coef>\([^)]*\)|[0-9.]+(?:[eE][+-]?\d+)?[ij]?|[ij])\s*\*?\s*)?
        (?P<var>z(?:\s*\^\s*(?P<exp>[+-]?\d+))?)?\s*""",
    re.VERBOSE,
)


def parse_symbol(text):
    """Parse a literal such as ``"z + z^2"`` or ``"1*z^-1 + 0.5"``.

    Each term ``c*z^k`` contributes ``c`` to ``a_{-k}``, so the literal reads
    as the Laurent polynomial ``p`` itself.
    """
    s = text.strip()
    if not s:
        raise SymbolError("empty symbol literal")
    coeffs = {}
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if not m or m.end() == pos or not (m.group("coef") or m.group("var")):
            raise SymbolError(f"cannot parse symbol literal near {s[pos:]!r}")
        if pos > 0 and not m.group("sign"):
            raise SymbolError(f"missing operator near {s[pos:]!r}")
        coef = m.group("coef")
        if coef is None:
            c = 1.0 + 0j
        else:
            c = complex(coef.strip("()").replace(" ", "").replace("i", "j"))
        if m.group("sign") == "-":
            c = -c
        k = 0
        if m.group("var"):
            k = int(m.group("exp")) if m.group("exp") is not None else 1
        coeffs[-k] = coeffs.get(-k, 0j) + c
        pos = m.end()
    return LaurentSymbol(coeffs)


def as_symbol(obj):
    if isinstance(obj, LaurentSymbol):
        return obj
    if isinstance(obj, str):
        s = obj.strip()
        return LaurentSymbol.from_json(s) if s.startswith("{") else parse_symbol(s)
    if isinstance(obj, dict):
        return LaurentSymbol.from_json(obj) if "coeffs" in obj else LaurentSymbol(obj)
    raise TypeError(f"cannot interpret {type(obj).__name__} as a symbol")


# -- roots ---------------------------------------------------------------

@dataclass
class RootProfile:
    z: complex
    roots: np.ndarray  # finite roots, sorted by (modulus, argument)
    m_plus: int
    m_minus: int
    m0: int
    m_inf: int
    winding: int | None
    on_curve: bool
    decay_split: tuple  # (m0_plus, m0_minus): roots within kappa of the circle
    lead: complex
    n_plus: int  # N_+ v 0
    kappa: float = DEFAULT_KAPPA

    @property
    def inside(self):
        return self.roots[np.abs(self.roots) < 1]

    @property
    def outside(self):
        return self.roots[np.abs(self.roots) > 1]

    @property
    def eta(self):
        """Negated roots, non-increasing in modulus; roots at infinity first."""
        fin = -self.roots[::-1]
        return np.concatenate([np.full(self.m_inf, np.inf + 0j), fin])

    @property
    def eta_abs(self):
        return np.abs(self.eta)

    def fast_slow(self, side="plus"):
        """Split inside (or outside) roots into fast and slow groups."""
        r = self.inside if side == "plus" else self.outside
        a = np.abs(r)
        if side == "plus":
            slow = a > 1 - self.kappa
        else:
            slow = a < 1 / (1 - self.kappa)
        return r[~slow], r[slow]


def _sort_roots(r):
    if r.size == 0:
        return r
    mod = np.abs(r)
    key_mod = np.round(mod / max(mod.max(), 1e-300), 11)
    order = np.lexsort((np.angle(r), key_mod))
    return r[order]


def roots_at(sym, z, tau=TAU_CIRCLE, kappa=DEFAULT_KAPPA):
    """Roots of ``p(zeta) = z`` with inside/outside counts and winding."""
    sym = as_symbol(sym)
    z = complex(z)
    c = sym.poly_coeffs(z)
    nz = np.flatnonzero(c)
    if nz.size == 0:
        raise SymbolError("identically zero symbol at z")
    m0 = int(nz[0])
    top = int(nz[-1])
    m_inf = len(c) - 1 - top
    lead = c[top]
    trimmed = c[m0:top + 1]
    r = np.roots(trimmed[::-1]) if trimmed.size > 1 else np.zeros(0, complex)
    r = np.concatenate([np.zeros(m0, complex), r.astype(complex)])
    r = _sort_roots(r)
    mod = np.abs(r)
    on_curve = bool(np.any(np.abs(mod - 1) <= tau))
    m_plus = int(np.sum(mod < 1 - tau))
    m_minus = int(np.sum(mod > 1 + tau)) + m_inf
    npl = max(sym.n_plus, 0)
    winding = None if on_curve else m_plus - npl
    split = (int(np.sum((mod < 1) & (mod > 1 - kappa))),
             int(np.sum((mod > 1) & (mod < 1 / (1 - kappa)))))
    return RootProfile(z=z, roots=r, m_plus=m_plus, m_minus=m_minus, m0=m0, m_inf=m_inf,
                       winding=winding, on_curve=on_curve, decay_split=split,
                       lead=complex(lead), n_plus=npl, kappa=kappa)


def winding_number(sym, z, tau=TAU_CIRCLE):
    prof = roots_at(sym, z, tau=tau)
    if prof.on_curve:
        raise SymbolError("winding undefined on spectral curve")
    return prof.winding


def contour_winding(sym, z, grid=4096):
    """Winding of ``p(S^1)`` about ``z`` from summed argument increments."""
    theta = np.linspace(0, 2 * np.pi, grid + 1)
    w = as_symbol(sym)(np.exp(1j * theta)) - complex(z)
    dphi = np.angle(w[1:] / w[:-1])
    return int(round(dphi.sum() / (2 * np.pi)))


# -- curve geometry --------------------------------------------------------

def curve_points(sym, grid=4096):
    theta = 2 * np.pi * np.arange(grid) / grid
    return theta, as_symbol(sym)(np.exp(1j * theta))


def curve_diameter(sym, grid=1024):
    _, w = curve_points(sym, grid)
    return float(np.max(np.abs(w[:, None] - w[None, :])))


def dist_to_curve(sym, z, grid=4096, refine=True):
    """Distance from ``z`` (scalar or array) to ``p(S^1)``.

    The grid minimum is polished by successive parabolic interpolation of
    the squared distance around the best node; the result is never larger
    than the grid minimum.
    """
    if grid < 256:
        raise ValueError("grid must be at least 256")
    sym = as_symbol(sym)
    zs = np.atleast_1d(np.asarray(z, dtype=complex))
    theta, w = curve_points(sym, grid)
    h0 = 2 * np.pi / grid
    out = np.empty(zs.shape, dtype=float)
    for start in range(0, zs.size, 512):
        blk = zs[start:start + 512]
        d2 = np.abs(blk[:, None] - w[None, :]) ** 2
        k = np.argmin(d2, axis=1)
        best = np.sqrt(d2[np.arange(blk.size), k])
        if refine:
            t = theta[k]
            h = h0
            for _ in range(8):
                f = [np.abs(blk - sym(np.exp(1j * (t + s * h)))) ** 2 for s in (-1, 0, 1)]
                den = f[0] - 2 * f[1] + f[2]
                step = np.where(den > 0, 0.5 * h * (f[0] - f[2]) / np.where(den > 0, den, 1), 0.0)
                t = t + np.clip(step, -h, h)
                h /= 4
            best = np.minimum(best, np.abs(blk - sym(np.exp(1j * t))))
        out[start:start + 512] = best
    return out if np.ndim(z) else float(out[0])


# -- bad sets ------------------------------------------------------------

@dataclass
class BadSets:
    b1: np.ndarray
    b2: np.ndarray
    radius: float
    unrefined: list = field(default_factory=list)  # (point, residual)

    @property
    def points(self):
        return np.concatenate([self.b1, self.b2])

    def near(self, z, radius=None):
        """True where ``z`` lies in the closed ``radius`` blow-up."""
        r = self.radius if radius is None else radius
        z = np.asarray(z, dtype=complex)
        pts = self.points
        if pts.size == 0:
            return np.zeros(z.shape, dtype=bool)
        return np.min(np.abs(z[..., None] - pts), axis=-1) <= r


def _dedupe(points, tol):
    kept = []
    for p in points:
        if all(abs(p - q) > tol for q in kept):
            kept.append(p)
    return np.array(kept, dtype=complex)


def branch_points(sym):
    """Critical values ``p(zeta*)`` with ``p'(zeta*) = 0``, ``zeta*`` finite nonzero."""
    sym = as_symbol(sym)
    # zeta^{N_+ + 1} p'(zeta) = sum_j -j a_j zeta^{N_+ - j}
    deg = sym.n_plus + sym.n_minus
    c = np.zeros(deg + 1, dtype=complex)
    for j, a in sym.items():
        c[sym.n_plus - j] += -j * a
    nz = np.flatnonzero(c)
    c = c[nz[0]:nz[-1] + 1]
    crit = np.roots(c[::-1]) if c.size > 1 else np.zeros(0, complex)
    crit = crit[np.abs(crit) > 1e-12]
    return crit, sym(crit) if crit.size else np.zeros(0, complex)


def _segment_crossings(w):
    """Index pairs (i, k, s, u) of crossing segments of the closed polyline ``w``."""
    a = w
    b = np.roll(w, -1)
    n = len(w)
    out = []
    d = b - a
    for i in range(n - 2):
        j = np.arange(i + 2, n if i > 0 else n - 1)
        if j.size == 0:
            continue
        p, r = a[i], d[i]
        q, s = a[j], d[j]
        rxs = (np.conj(r) * s).imag
        qp = q - p
        ok = np.abs(rxs) > 1e-300
        t = np.where(ok, (np.conj(qp) * s).imag / np.where(ok, rxs, 1), -1)
        u = np.where(ok, (np.conj(qp) * r).imag / np.where(ok, rxs, 1), -1)
        hit = ok & (t >= 0) & (t < 1) & (u >= 0) & (u < 1)
        for jj in np.flatnonzero(hit):
            out.append((i, int(j[jj]), float(t[jj]), float(u[jj])))
    return out


def self_intersections(q, grid=4096, maxiter=100, tol=1e-12):
    """Self-intersection points of ``q(S^1)`` as (points, unrefined)."""
    theta, w = curve_points(q, grid)
    h = 2 * np.pi / grid
    found, bad = [], []
    for i, k, t, u in _segment_crossings(w):
        th = np.array([theta[i] + t * h, theta[k] + u * h])
        res = np.inf
        for _ in range(maxiter):
            e1, e2 = np.exp(1j * th)
            f = q(e1) - q(e2)
            res = abs(f)
            if res < tol:
                break
            j1 = 1j * e1 * q.derivative(e1)
            j2 = -1j * e2 * q.derivative(e2)
            jac = np.array([[j1.real, j2.real], [j1.imag, j2.imag]])
            try:
                th = th - np.linalg.solve(jac, [f.real, f.imag])
            except np.linalg.LinAlgError:
                break
        e1, e2 = np.exp(1j * th)
        sep = abs(np.angle(e1 / e2))
        if res < 1e-9 and sep > 1e-6:
            found.append(complex(q(e1)))
        else:
            bad.append((complex(q(np.exp(1j * (theta[i] + t * h)))), float(res)))
    return found, bad


def bad_sets(sym, radius=None, grid=4096):
    """Self-intersections ``b1`` of the contracted curve and branch points ``b2``."""
    sym = as_symbol(sym)
    if radius is None:
        radius = 0.05 * curve_diameter(sym)
    if radius <= 0:
        raise ValueError("radius must be positive")
    _, b2 = branch_points(sym)
    b1, bad = self_intersections(sym.contracted(), grid=grid)
    return BadSets(b1=_dedupe(b1, radius / 10), b2=_dedupe(b2, radius / 10),
                   radius=float(radius), unrefined=bad)


# -- log potential -------------------------------------------------------

def log_potential(sym, z, tau=TAU_CIRCLE):
    """Mean of ``log|z - p(e^{i theta})|`` from the root factorization."""
    prof = roots_at(sym, z, tau=tau)
    if prof.on_curve:
        raise SymbolError("log potential evaluated on the spectral curve")
    big = np.abs(prof.roots)
    return float(np.log(abs(prof.lead)) + np.sum(np.log(big[big > 1])))


def log_potential_quadrature(sym, z, nodes=8192):
    _, w = curve_points(sym, nodes)
    return float(np.mean(np.log(np.abs(complex(z) - w))))

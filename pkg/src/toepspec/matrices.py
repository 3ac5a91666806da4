"""Toeplitz, circulant and shifted-symbol matrices; noise ensembles."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.spatial import cKDTree

from .symbol import as_symbol


@dataclass
class BandedMatrix:
    n: int
    storage: np.ndarray
    band: tuple  # (lower, upper) bandwidths
    kind: str  # toeplitz | circulant | shifted | generic

    def __array__(self, dtype=None, copy=None):
        return self.storage if dtype is None else self.storage.astype(dtype)

    @property
    def T(self):
        return self.storage.T


def _check_n(n):
    if int(n) <= 0:
        raise ValueError("matrix dimension must be positive")
    return int(n)


def build_toeplitz(sym, n, z=0.0):
    """``P_N(i, j) = a_{i-j}`` (minus ``z`` on the diagonal)."""
    sym = as_symbol(sym)
    n = _check_n(n)
    if n < sym.n_plus + sym.n_minus + 1:
        warnings.warn("dimension smaller than the band width", stacklevel=2)
    col = np.array([sym.coeff(k) for k in range(n)], dtype=complex)
    row = np.array([sym.coeff(-k) for k in range(n)], dtype=complex)
    col[0] -= z
    row[0] = col[0]
    return BandedMatrix(n, sla.toeplitz(col, row), (max(sym.n_plus, 0), max(sym.n_minus, 0)),
                        "toeplitz")


def build_circulant(sym, n):
    """Circulant with entries ``sum_k a_{i-j+kN}``."""
    sym = as_symbol(sym)
    n = _check_n(n)
    if n <= max(sym.n_plus, 0) + max(sym.n_minus, 0):
        raise ValueError("band wraps ambiguously")
    c = np.zeros(n, dtype=complex)
    for j, a in sym.items():
        c[j % n] += a
    return BandedMatrix(n, sla.circulant(c), (n - 1, n - 1), "circulant")


def circulant_spectrum(sym, n):
    """``{p(e^{2 pi i l / N})}``, the spectrum of the circulant."""
    l = np.arange(n)
    return as_symbol(sym)(np.exp(2j * np.pi * l / n))


def wlog_band(sym):
    """Band limits with the upper limit raised to at least 0: ``(N_+, N_-)``."""
    return max(sym.n_plus, 0), sym.n_minus


def build_shifted_toeplitz(sym, z, n, nbar_minus):
    """Toeplitz matrix of the shifted symbol ``tau^{N_- - nbar} (p(tau) - z)``.

    Entry ``(nu, mu)`` is ``a'_{nu - mu - (N_- - nbar)}`` with ``a'`` the
    coefficients of ``p - z``. For ``nbar = N_+ + N_-`` the matrix is upper
    triangular with ``a_{N_+}`` on the diagonal.
    """
    sym = as_symbol(sym)
    n = _check_n(n)
    npl, nmi = wlog_band(sym)
    full = npl + nmi
    if not 0 <= nbar_minus <= full:
        raise ValueError(f"nbar_minus must lie in [0, {full}]")
    if n <= full:
        warnings.warn("dimension not larger than the band width", stacklevel=2)
    shift = nmi - nbar_minus

    def a(k):
        return sym.coeff(k) - (z if k == 0 else 0)

    col = np.array([a(k - shift) for k in range(n)], dtype=complex)
    row = np.array([a(-k - shift) for k in range(n)], dtype=complex)
    return BandedMatrix(n, sla.toeplitz(col, row), (full - nbar_minus, nbar_minus),
                        "shifted")


def bidiagonal(eta, n):
    """``J + eta I`` with ``J`` the nilpotent superdiagonal shift."""
    return np.eye(n, k=1, dtype=complex) + eta * np.eye(n, dtype=complex)


# -- noise -----------------------------------------------------------------

@dataclass
class NoiseModel:
    kind: str = "complex_gaussian"
    upeta: float = 1.0
    radius: float = float(np.sqrt(2.0))  # uniform_disc; sqrt 2 gives unit variance
    sampler: Callable | None = None  # custom_density: sampler(rng, shape)
    moment_bound_checked: bool = False

    def draw(self, rng, shape):
        if self.kind == "complex_gaussian":
            return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
        if self.kind == "uniform_disc":
            r = self.radius * np.sqrt(rng.random(shape))
            return r * np.exp(2j * np.pi * rng.random(shape))
        if self.kind == "custom_density":
            if self.sampler is None:
                raise ValueError("custom_density requires a sampler")
            return np.asarray(self.sampler(rng, shape), dtype=complex)
        raise ValueError(f"unknown noise kind {self.kind!r}")


NOISE_ALIASES = {"gaussian": "complex_gaussian", "ginibre": "complex_gaussian",
                 "disc": "uniform_disc", "complex_gaussian": "complex_gaussian",
                 "uniform_disc": "uniform_disc"}


def noise_model(name):
    try:
        return NoiseModel(NOISE_ALIASES[name])
    except KeyError:
        raise ValueError(f"unknown noise kind {name!r}") from None


def rng_for(seed, *key):
    """Independent generator for ``(seed, *key)``; substreams never overlap."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(key))))


def sample_noise(model, n, seed, block=64, stream=()):
    """``n x n`` noise matrix; each block of rows has its own substream.

    ``stream`` prefixes the substream key (the harness passes the trial index).
    """
    n = _check_n(n)
    out = np.empty((n, n), dtype=complex)
    for b, start in enumerate(range(0, n, block)):
        stop = min(start + block, n)
        out[start:stop] = model.draw(rng_for(seed, *stream, b), (stop - start, n))
    return out


@dataclass
class PerturbedSample:
    n: int
    gamma: float
    seed: int
    matrix: np.ndarray
    noise: np.ndarray

    @property
    def delta(self):
        return self.n ** (-self.gamma)


def perturbed(sym, n, gamma, seed, model=None, stream=()):
    """``P_N + N^{-gamma} Q_N``."""
    model = model or NoiseModel()
    q = sample_noise(model, n, seed, stream=stream)
    p = build_toeplitz(sym, n).storage
    return PerturbedSample(n, float(gamma), int(seed), p + n ** (-gamma) * q, q)


def moments(model, h_max=8, draws=100_000, seed=0):
    """Empirical ``E|X|^{2h}`` for ``h = 1..h_max``."""
    x = np.abs(model.draw(rng_for(seed, 0), draws)) ** 2
    return np.array([np.mean(x ** h) for h in range(1, h_max + 1)])


def levy_estimate(model, epsilon, trials=10_000, seed=0):
    """Grid estimate of ``sup_w P(|X - w| <= epsilon)``."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    x = model.draw(rng_for(seed, 0), trials)
    pts = np.column_stack([x.real, x.imag])
    lo = np.quantile(pts, 0.001, axis=0) - epsilon
    hi = np.quantile(pts, 0.999, axis=0) + epsilon
    step = epsilon / 2
    gx = np.arange(lo[0], hi[0] + step, step)
    gy = np.arange(lo[1], hi[1] + step, step)
    centers = np.column_stack([a.ravel() for a in np.meshgrid(gx, gy)])
    counts = cKDTree(pts).query_ball_point(centers, epsilon, return_length=True)
    return float(np.max(counts) / trials)


# -- dump format: one JSON header line, then row-major "re,im" lines --------------

def dump_matrix(path, m, kind="generic", band=None):
    m = np.asarray(getattr(m, "storage", m), dtype=complex)
    header = {"n_rows": m.shape[0], "n_cols": m.shape[1], "kind": kind,
              "band": list(band) if band is not None else None, "order": "row-major"}
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for x in m.ravel():
            fh.write(f"{float(x.real)!r},{float(x.imag)!r}\n")


def load_matrix(path):
    with open(path) as fh:
        header = json.loads(fh.readline())
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    m = (data[:, 0] + 1j * data[:, 1]).reshape(header["n_rows"], header["n_cols"])
    return header, m

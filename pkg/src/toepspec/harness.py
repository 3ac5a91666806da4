"""Localization metrics and the seeded Monte Carlo experiment runner."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .matrices import build_toeplitz, noise_model, sample_noise
from .regions import CurveIndex, LocationParams, c_hat, location_stats
from .spectral import eigenpairs, smallest_singular_banded
from .symbol import as_symbol, bad_sets, roots_at

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DESK_MAX_N = 1024
UNIT_TOL = 1e-8
THREADS_ENV = "TOEPSPEC_THREADS"


class HarnessError(ValueError):
    pass


# -- metrics -------------------------------------------------------------------

def _unit(v):
    v = np.asarray(v)
    nrm = np.linalg.norm(v)
    if abs(nrm - 1) > UNIT_TOL:
        raise HarnessError(f"vector is not normalized (norm {nrm:.12g})")
    return v


def window_mass(v, l, lp):
    """``sum_{nu in [l, lp]} |v(nu)|^2``, indices 1-based and inclusive."""
    v = _unit(v)
    if not 1 <= l <= lp <= len(v):
        raise HarnessError("need 1 <= l <= lp <= N")
    return float(np.sum(np.abs(v[l - 1:lp]) ** 2))


def supp_mu(v, mu1):
    """Fewest coordinates carrying squared mass above ``(1 - mu1)^2``."""
    if not 0 < mu1 < 1:
        raise HarnessError("mu1 must lie in (0, 1)")
    m = np.sort(np.abs(np.asarray(v)) ** 2)[::-1]
    m = m / m.sum()
    thr = (1 - mu1) ** 2
    # guard against the cumulative sum hitting the threshold by rounding
    return int(np.searchsorted(np.cumsum(m), thr * (1 + 1e-12), side="right") + 1)


def supp_mu_columns(vs, mu1):
    """Column-wise :func:`supp_mu` for a matrix of unit eigenvectors."""
    m = np.sort(np.abs(vs) ** 2, axis=0)[::-1]
    m = m / m.sum(axis=0)
    cs = np.cumsum(m, axis=0)
    thr = (1 - mu1) ** 2 * (1 + 1e-12)
    return np.argmax(cs > thr, axis=0) + 1


def lp_norms(v, ps=(1, 2, 4, math.inf)):
    a = np.abs(np.asarray(v))
    return {str(p): float(np.max(a) if math.isinf(p) else np.sum(a ** p) ** (1 / p)) for p in ps}


def tail_mass_right(v):
    """``t[l-1] = ||v||^2 on [l, N]`` for ``l = 1..N``."""
    m = np.abs(np.asarray(v)) ** 2
    return np.cumsum(m[::-1])[::-1]


def tail_mass_left(v):
    """``t[l-1] = ||v||^2 on [1, N + 1 - l]``, the mirror of :func:`tail_mass_right`."""
    return tail_mass_right(np.asarray(v)[::-1])


def projection_deficit(v, sym, lam, d):
    """``||v - Pi v||`` with ``Pi`` onto the bottom ``|d|`` right singular vectors of ``P_N - lam``."""
    if d == 0:
        return float(np.linalg.norm(v))
    _, e = smallest_singular_banded(sym, lam, len(v), abs(d))
    return float(np.linalg.norm(v - e @ (e.conj().T @ v)))


@dataclass
class LocalizationReport:
    eigenvalue: complex
    d: int
    window_masses: dict
    supp_mu: dict
    lp_norms: dict
    tail_mass_right: np.ndarray = field(repr=False)
    tail_mass_left: np.ndarray = field(repr=False)
    projection_deficit: float | None = None

    @property
    def tail(self):
        """Tail masses oriented by the sign of ``d``."""
        return self.tail_mass_left if self.d < 0 else self.tail_mass_right

    def as_dict(self, checkpoints=8):
        n = len(self.tail_mass_right)
        idx = sorted({max(1, (j * n) // checkpoints) for j in range(1, checkpoints + 1)})
        return {"re": float(self.eigenvalue.real), "im": float(self.eigenvalue.imag), "d": self.d,
                "window_masses": self.window_masses, "supp_mu": self.supp_mu,
                "lp_norms": self.lp_norms, "projection_deficit": self.projection_deficit,
                "tail_right": {str(l): float(self.tail_mass_right[l - 1]) for l in idx},
                "tail_left": {str(l): float(self.tail_mass_left[l - 1]) for l in idx}}


def localization_report(v, lam, sym, d, windows=None, mus=(0.05, 0.1, 0.2), deficit=True):
    v = _unit(v)
    n = len(v)
    windows = windows or [(1, n // 2), (n // 2 + 1, n)]
    return LocalizationReport(
        eigenvalue=complex(lam), d=int(d),
        window_masses={f"{a}-{b}": window_mass(v, a, b) for a, b in windows},
        supp_mu={str(m): supp_mu(v, m) for m in mus}, lp_norms=lp_norms(v),
        tail_mass_right=tail_mass_right(v), tail_mass_left=tail_mass_left(v),
        projection_deficit=projection_deficit(v, sym, lam, d) if deficit and d else None)


# -- configuration ---------------------------------------------------------------

@dataclass
class ExperimentConfig:
    symbol: str = "z + z^2"
    N: int = DESK_MAX_N
    gamma: float = 1.2
    noise: str = "complex_gaussian"
    trials: int = 1
    seed: int = 0
    epsilon: float = 0.15  # bad-set blow-up radius
    C: float = 8.0  # good-region band constant
    gamma_prime: float | None = None  # defaults to (1 + gamma) / 2 when gamma > 1
    z0: list | None = None
    n_nearest: int = 5
    max_reports: int = 64
    mu1: float = 0.1
    out_dir: str = "experiment_out"
    workers: int = 1
    large: bool = False
    profiles: bool = True
    location: bool = True
    localization: bool = True
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, d):
        known = {f.name: f for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise HarnessError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def validate(self):
        as_symbol(self.symbol)
        noise_model(self.noise)
        checks = [
            (isinstance(self.N, int) and self.N >= 8, "N must be an integer >= 8"),
            (isinstance(self.trials, int) and self.trials >= 1, "trials must be >= 1"),
            (isinstance(self.seed, int) and self.seed >= 0, "seed must be a non-negative integer"),
            (self.gamma > 0, "gamma must be positive"),
            (0 < self.mu1 < 1, "mu1 must lie in (0, 1)"),
            (self.C > 1 and self.epsilon > 0, "need C > 1 and epsilon > 0"),
            (self.workers >= 1, "workers must be >= 1"),
            (self.schema_version == SCHEMA_VERSION, f"schema_version must be {SCHEMA_VERSION}"),
            (self.z0 is None or len(self.z0) == 2, "z0 must be [re, im]"),
            (self.gamma_prime is None or self.gamma_prime > 1, "gamma_prime must exceed 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise HarnessError(msg)
        if self.N > DESK_MAX_N and not self.large:
            raise HarnessError(f"N > {DESK_MAX_N} needs the large flag")
        if self.N > DESK_MAX_N:
            warnings.warn(f"N={self.N} beyond desk scale; expect long runtimes", stacklevel=2)
        return self

    @property
    def gp(self):
        if self.gamma_prime is not None:
            return self.gamma_prime
        return (1 + self.gamma) / 2 if self.gamma > 1 else 1.25

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True, indent=1)


# -- trials -----------------------------------------------------------------------

@dataclass
class SpectrumSample:
    trial: int
    seed: int
    eigenvalues: np.ndarray
    windings: list
    classes: list
    dist_scaled: np.ndarray
    supp: np.ndarray
    selected: list
    profiles: np.ndarray  # |v(nu)| for the selected eigenvectors, one column each
    reports: list
    location: dict


def _context(cfg):
    sym = as_symbol(cfg.symbol)
    bad = bad_sets(sym, radius=cfg.epsilon)
    ch = c_hat(sym, cfg.gp, bad=bad)
    return sym, bad, ch


def _select(cfg, eigs, classes):
    good = [i for i, c in enumerate(classes) if c == "good"]
    if len(good) > cfg.max_reports:
        pick = np.linspace(0, len(good) - 1, cfg.max_reports).round().astype(int)
        good = [good[i] for i in pick]
    near = []
    if cfg.z0 is not None:
        z0 = complex(*cfg.z0)
        near = list(np.argsort(np.abs(eigs - z0), kind="stable")[:cfg.n_nearest])
    return sorted(set(good) | {int(i) for i in near})


def run_trial(cfg, trial, ctx=None):
    sym, bad, ch = ctx or _context(cfg)
    n = cfg.N
    q = sample_noise(noise_model(cfg.noise), n, cfg.seed, stream=(trial,))
    m = build_toeplitz(sym, n).storage + n ** (-cfg.gamma) * q
    eigs, vecs = eigenpairs(m)
    params = LocationParams(N=n, epsilon=cfg.epsilon, C=cfg.C, gamma_prime=cfg.gp, c_hat=ch)
    if cfg.location:
        ls = location_stats(eigs, sym, bad, params)
        classes = [r["class"] for r in ls.records]
        wind = [r["d"] for r in ls.records]
        loc = ls.as_dict()
    else:
        classes = ["unclassified"] * n
        wind = [roots_at(sym, lam).winding for lam in eigs]
        loc = {}
    s = math.log(n) / n
    dist = CurveIndex(sym, bad, cfg.epsilon).dist(eigs) / s
    supp = supp_mu_columns(vecs, cfg.mu1)
    sel = _select(cfg, eigs, classes)
    reports = []
    if cfg.localization:
        for i in sel:
            d = wind[i] or 0
            reports.append(localization_report(vecs[:, i], eigs[i], sym, d))
    prof = np.abs(vecs[:, sel]) if cfg.profiles else np.zeros((n, 0))
    return SpectrumSample(trial, cfg.seed, eigs, wind, classes, dist, supp, sel, prof, reports, loc)


def _median(xs):
    xs = [x for x in xs if x is not None and np.isfinite(x)]
    return float(np.median(xs)) if xs else None


def trial_summary(cfg, smp, bad=None):
    n = cfg.N
    off_bad = ~bad.near(smp.eigenvalues, cfg.epsilon) if bad is not None else np.ones(n, bool)
    bulk = np.array([w not in (None, 0) for w in smp.windings]) & off_bad
    good_d1 = [(i, r) for i, r in zip(smp.selected, smp.reports)
               if r.d == 1 and smp.classes[i] == "good"]
    tails = [float(r.tail_mass_right[n // 2]) for _, r in good_d1]
    return {
        "trial": smp.trial,
        "n_eigs": int(n),
        "location": smp.location,
        "median_dist_scaled": _median(smp.dist_scaled[off_bad]),
        "median_supp_bulk": _median(smp.supp[bulk]),
        "n_bulk": int(bulk.sum()),
        "frac_good": float(np.mean([c == "good" for c in smp.classes])),
        "n_reports_good_d1": len(good_d1),
        "median_projection_deficit_good_d1": _median([r.projection_deficit for _, r in good_d1]),
        "median_supp_good_d1": _median([smp.supp[i] for i, _ in good_d1]),
        "median_right_tail_half_good_d1": _median(tails),
    }


# -- output ------------------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def _dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"


def eigs_csv(smp):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "re", "im", "d", "class", "dist_scaled", "supp"])
    for i, lam in enumerate(smp.eigenvalues):
        w.writerow([i, _fmt(lam.real), _fmt(lam.imag), "" if smp.windings[i] is None else smp.windings[i],
                    smp.classes[i], _fmt(smp.dist_scaled[i]), int(smp.supp[i])])
    return buf.getvalue()


def profiles_csv(smp):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["nu"] + [f"v{i}" for i in smp.selected])
    for nu in range(smp.profiles.shape[0]):
        w.writerow([nu + 1] + [_fmt(x) for x in smp.profiles[nu]])
    return buf.getvalue()


def trial_record(cfg, smp, bad=None):
    return {"schema_version": SCHEMA_VERSION, "trial": smp.trial, "seed": smp.seed,
            "summary": trial_summary(cfg, smp, bad),
            "reports": [r.as_dict() for r in smp.reports], "selected": smp.selected}


def _worker(args):
    cfg_dict, trial = args
    cfg = ExperimentConfig.from_dict(cfg_dict)
    with thread_limit():
        try:
            ctx = _context(cfg)
            smp = run_trial(cfg, trial, ctx)
            return trial, None, {"record": trial_record(cfg, smp, ctx[1]), "eigs": eigs_csv(smp),
                                 "profiles": profiles_csv(smp) if cfg.profiles else None,
                                 "sample": smp}
        except Exception as exc:  # recorded per trial, the run continues
            return trial, f"{type(exc).__name__}: {exc}", None


def aggregate(cfg, records, failures):
    keys = ["median_dist_scaled", "median_supp_bulk", "frac_good",
            "median_projection_deficit_good_d1", "median_supp_good_d1",
            "median_right_tail_half_good_d1"]
    per = [r["summary"] for r in records]
    return {"schema_version": SCHEMA_VERSION, "config": asdict(cfg),
            "n_trials": cfg.trials, "n_ok": len(records), "failures": failures,
            "medians": {k: _median([p[k] for p in per]) for k in keys},
            "trials": per}


def thread_limit():
    """Context manager bounding BLAS threads by ``TOEPSPEC_THREADS``."""
    from threadpoolctl import threadpool_limits

    val = os.environ.get(THREADS_ENV)
    return threadpool_limits(limits=int(val)) if val else threadpool_limits(limits=None)


def run_experiment(cfg, write=True, keep_samples=False):
    """Run all trials; returns ``(summary, exit_code, samples)``.

    Exit code 0 means all trials succeeded, 2 means some failed.
    """
    cfg.validate()
    jobs = [(asdict(cfg), t) for t in range(cfg.trials)]
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            results = list(ex.map(_worker, jobs))
    else:
        results = [_worker(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    records, failures, samples = [], {}, []
    if write:
        os.makedirs(cfg.out_dir, exist_ok=True)
    for trial, err, out in results:
        if err is not None:
            log.warning("trial %d failed: %s", trial, err)
            failures[str(trial)] = err
            continue
        records.append(out["record"])
        if keep_samples:
            samples.append(out["sample"])
        if write:
            stem = os.path.join(cfg.out_dir, f"trial_{trial:04d}")
            _write(stem + ".json", _dumps(out["record"]))
            _write(stem + "_eigs.csv", out["eigs"])
            if out["profiles"] is not None:
                _write(stem + "_profiles.csv", out["profiles"])
    summary = aggregate(cfg, records, failures)
    if write:
        _write(os.path.join(cfg.out_dir, "summary.json"), _dumps(summary))
    return summary, (2 if failures else 0), samples


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)

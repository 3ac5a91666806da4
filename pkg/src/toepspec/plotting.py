"""Optional figures (needs matplotlib, imported lazily)."""
from __future__ import annotations

import os

import numpy as np

from .symbol import as_symbol, curve_points


def _plt():
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError("figures need matplotlib (pip install artifact[plot])") from exc
    return plt


def eigenvalue_cloud(sym, eigs, path, classes=None, title=None):
    plt = _plt()
    _, w = curve_points(as_symbol(sym), 2048)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(w.real, w.imag, "k-", lw=0.7)
    eigs = np.asarray(eigs)
    if classes is None:
        ax.plot(eigs.real, eigs.imag, ".", ms=2)
    else:
        classes = np.asarray(classes)
        for c in sorted(set(classes)):
            sel = classes == c
            ax.plot(eigs[sel].real, eigs[sel].imag, ".", ms=2, label=c)
        ax.legend(loc="best", fontsize=7)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title, fontsize=9)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def eigenvector_profiles(profiles, path, labels=None, log=True):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6, 3))
    nu = np.arange(1, profiles.shape[0] + 1)
    for j in range(profiles.shape[1]):
        ax.plot(nu, profiles[:, j], lw=0.7, label=None if labels is None else labels[j])
    if log:
        ax.set_yscale("log")
    ax.set_xlabel("index")
    ax.set_ylabel("|v|")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def experiment_figures(cfg, samples, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for smp in samples:
        stem = os.path.join(out_dir, f"trial_{smp.trial:04d}")
        paths.append(eigenvalue_cloud(cfg.symbol, smp.eigenvalues, stem + "_cloud.png",
                                      smp.classes, f"N={cfg.N}, gamma={cfg.gamma}"))
        if smp.profiles.shape[1]:
            k = min(4, smp.profiles.shape[1])
            cols = np.linspace(0, smp.profiles.shape[1] - 1, k).round().astype(int)
            paths.append(eigenvector_profiles(smp.profiles[:, cols], stem + "_profiles.png"))
    return paths

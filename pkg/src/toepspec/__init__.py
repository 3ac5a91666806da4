"""Spectra, pseudomodes and eigenvector localization for noisy banded Toeplitz matrices."""
from .grushin import build_grushin, perturbed_blocks
from .harness import ExperimentConfig, run_experiment
from .matrices import (NoiseModel, build_circulant, build_shifted_toeplitz, build_toeplitz,
                       perturbed, sample_noise)
from .quasimodes import quasimode_basis
from .regions import GoodRegion, TubeSpec, good_region_test, jensen_count, tube_membership
from .spectral import eigenpairs, gap_report, singular_triplets
from .symbol import LaurentSymbol, bad_sets, parse_symbol, roots_at, winding_number
from .symfunc import det_expansion, skew_schur, toeplitz_minor, widom_determinant

__version__ = "0.1.0"

__all__ = [
    "LaurentSymbol", "parse_symbol", "roots_at", "winding_number", "bad_sets",
    "build_toeplitz", "build_circulant", "build_shifted_toeplitz", "NoiseModel",
    "sample_noise", "perturbed", "eigenpairs", "singular_triplets", "gap_report",
    "build_grushin", "perturbed_blocks", "quasimode_basis", "skew_schur",
    "toeplitz_minor", "widom_determinant", "det_expansion", "TubeSpec",
    "tube_membership", "GoodRegion", "good_region_test", "jensen_count",
    "ExperimentConfig", "run_experiment",
]

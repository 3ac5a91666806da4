import math

import numpy as np
import pytest
import scipy.linalg as sla

from toepspec.matrices import build_toeplitz
from toepspec.quasimodes import (QuasimodeError, compare_with_singular_vectors,
                                 exponential_states, gram_closed_form, kernel_coefficients,
                                 quasimode_basis, taper, taper_start)
from toepspec.spectral import singular_triplets
from toepspec.symbol import LaurentSymbol, roots_at

from ._util import LIMACON

# zeta (p(zeta) - 0) = (zeta - 0.3)(zeta - 0.9)(zeta - 3): N_+ = 1, two roots inside, d = 1
PINNED = LaurentSymbol({1: -0.81, 0: 3.87, -1: -4.2, -2: 1.0})
# the single boundary row reads a_1 / 0.3 + a_2 / 0.9 = 0 with a_2 = 1
PINNED_A1 = -1.0 / 3.0


def _scale(n):
    return math.log(n) / n


def test_jordan_states():
    ex = exponential_states(roots_at("z", 0.5), 4)
    assert np.allclose(ex.states[:, 0], [1, 0.5, 0.25, 0.125])
    assert np.isclose(ex.norms[0], np.linalg.norm([1, 0.5, 0.25, 0.125]))


def test_minus_side_states_mirror():
    prof = roots_at("z^-1", 0.5)  # single root at zeta = 2
    ex = exponential_states(prof, 4, "minus")
    assert np.allclose(ex.states[:, 0], [0.125, 0.25, 0.5, 1])
    with pytest.raises(ValueError):
        exponential_states(prof, 4, "sideways")


def test_gram_closed_form(rng):
    r = np.array([0.5, -0.3 + 0.6j, 0.9j])
    n = 40
    z = r[None, :] ** np.arange(n)[:, None]
    assert np.allclose(gram_closed_form(r, n), z.conj().T @ z, atol=1e-9)


def test_gram_diagonal_near_circle():
    n = 1024
    rho = 1 - _scale(n)
    d = gram_closed_form(np.array([rho]), n)[0, 0].real
    assert 0.4 <= d / (n / math.log(n)) <= 0.6


def test_gram_off_diagonal_separated_roots():
    g = gram_closed_form(np.array([0.5, -0.5]), 500)
    assert 0.5 < abs(g[0, 1]) < 2


def test_kernel_coefficients_identity_when_no_boundary():
    prof = roots_at(LIMACON, -0.1)
    kc = kernel_coefficients(prof)
    assert np.array_equal(kc.A, np.eye(2))


def test_kernel_coefficients_pinned_form():
    prof = roots_at(PINNED, 0)
    assert prof.winding == 1 and prof.decay_split[0] == 1
    kc = kernel_coefficients(prof)
    assert kc.A.shape == (2, 1) and kc.A1.shape[1] == 0
    assert np.allclose(kc.A[:, 0], [PINNED_A1, 1])


def test_kernel_columns_vanish_on_boundary(rng):
    prof = roots_at(PINNED, 0.05 + 0.02j)
    kc = kernel_coefficients(prof)
    assert np.max(np.abs(kc.boundary @ kc.A)) <= 1e-9
    # the exponential solution solves (P - z)u = 0 away from the last rows
    n = 40
    u = exponential_states(prof, n).states @ kc.A
    r = build_toeplitz(PINNED, n, prof.z).storage @ u
    assert np.max(np.abs(r[:n - 3])) <= 1e-9


def test_kernel_coefficients_need_positive_winding():
    with pytest.raises(QuasimodeError):
        kernel_coefficients(roots_at(PINNED, 10))


def test_jordan_quasimode_is_normalized_state():
    n = 64
    qb = quasimode_basis("z", 0.5, n)
    z = 0.5 ** np.arange(n)
    assert qb.class_1 == [0] and qb.class_2 == []
    assert np.allclose(qb.u_tilde[:, 0], z / np.linalg.norm(z))
    assert qb.residuals[0] < 1e-15


def test_limacon_inner_loop_two_classes():
    n = 512
    qb = quasimode_basis(LIMACON, -2 * _scale(n), n)
    assert qb.d == 2 and qb.class_1 == [0] and qb.class_2 == [1]
    assert qb.residuals[0] <= 1e-12
    g = qb.psi.conj().T @ qb.psi
    assert np.max(np.abs(np.diag(g) - 1)) <= 0.05


def test_negative_winding_mirrors_reflected_symbol():
    n = 64
    qm = quasimode_basis("z^-1", 0.5, n)
    qp = quasimode_basis("z", 0.5, n)
    assert qm.d == -1 and qm.side == "minus"
    assert np.allclose(qm.psi, qp.psi[::-1])
    assert np.argmax(np.abs(qm.psi[:, 0])) == n - 1
    assert qm.residuals[0] < 1e-15


def test_winding_zero_and_on_curve_rejected():
    with pytest.raises(QuasimodeError):
        quasimode_basis("z", 2, 16)
    with pytest.raises(Exception):
        quasimode_basis("z", 1, 16)


def test_taper_contract():
    n = 1024
    n0 = taper_start(n)
    assert n0 == round((1 - 1 / math.log(n)) * (n - 1))
    t = taper(n)
    assert np.all(t[:n0 + 1] == 1)
    nu = np.arange(n0 + 1, n)
    ref = np.cos(np.pi * nu / (2 * (n - 1))) / np.cos(np.pi * n0 / (2 * (n - 1)))
    assert np.allclose(t[n0 + 1:], ref)
    assert 0 <= t[-1] < 1


def test_slow_modes_tapered_fast_modes_not():
    n = 512
    qb = quasimode_basis(LIMACON, -2 * _scale(n), n)
    assert np.array_equal(qb.psi[: qb.N0 + 1, 1], qb.u_tilde[: qb.N0 + 1, 1])
    assert np.array_equal(qb.psi[:, 0], qb.u_tilde[:, 0])
    assert np.allclose(qb.psi[qb.N0 + 1:, 1], qb.u_tilde[qb.N0 + 1:, 1] * taper(n)[qb.N0 + 1:])


def test_jordan_state_close_to_singular_vector():
    n = 256
    qb = quasimode_basis("z", 0.5, n)
    st = singular_triplets("z", 0.5, n, k=2)
    z = 0.5 ** np.arange(n)
    e = st.e_vecs[:, 0]
    assert np.linalg.norm(z / np.linalg.norm(z) - e) <= 0.05
    assert compare_with_singular_vectors(qb, st)["psi_deficit"][0] <= 0.05


def test_fast_span_matches_bottom_singular_vector():
    n = 512
    z = -2 * _scale(n)
    qb = quasimode_basis(LIMACON, z, n)
    rep = compare_with_singular_vectors(qb, singular_triplets(LIMACON, z, n, k=3))
    assert rep["fast_max_angle"] <= 1e-6


def test_slow_regression_gram_near_identity():
    n = 1024
    z = 2 - 2 * _scale(n)
    qb = quasimode_basis(LIMACON, z, n)
    rep = compare_with_singular_vectors(qb, singular_triplets(LIMACON, z, n, k=2))
    assert rep["b_gram_error"] <= 0.05 and rep["b_residual"][0] <= 0.05


def test_compare_needs_enough_triplets():
    qb = quasimode_basis(LIMACON, -0.05, 64)
    with pytest.raises(ValueError):
        compare_with_singular_vectors(qb, singular_triplets(LIMACON, -0.05, 64, k=1))


def test_singular_vector_localized_at_left_edge():
    n = 1024
    z = 2 - 2 * _scale(n)
    e = singular_triplets(LIMACON, z, n, k=1).e_vecs[:, 0]
    cut = int(3 * n / math.log(n))
    assert np.sum(np.abs(e[cut:]) ** 2) <= 0.1


def test_principal_angles_helper_consistent():
    n = 128
    z = -2 * _scale(n)
    qb = quasimode_basis(LIMACON, z, n)
    st = singular_triplets(LIMACON, z, n, k=2)
    ang = sla.subspace_angles(qb.psi, st.e_vecs[:, :2])
    assert np.max(ang) < 0.1

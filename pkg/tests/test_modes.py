import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wgfock.emitter import superradiant_spec
from wgfock.modes import (
    ExpMode,
    IllConditionedGramError,
    basis_from_json,
    commutator,
    gram_matrix,
    ladder_family,
    orthogonalize,
)
from wgfock.correlators import one_body_matrix

finite_rates = st.floats(min_value=0.05, max_value=50.0)
finite_freqs = st.floats(min_value=-20.0, max_value=20.0)


def test_commutator_identical_modes():
    assert commutator(ExpMode(1.0, 0.0), ExpMode(1.0, 0.0)) == 1.0


def test_commutator_detuned():
    val = commutator(ExpMode(1.0, 0.0), ExpMode(1.0, 1.0))
    assert val == pytest.approx(0.5 - 0.5j)


def test_commutator_rate_mismatch():
    assert commutator(ExpMode(4.0, 5.0), ExpMode(1.0, 5.0)) == pytest.approx(0.8)


@given(finite_rates, finite_freqs, finite_rates, finite_freqs)
def test_commutator_properties(g1, w1, g2, w2):
    m1, m2 = ExpMode(g1, w1), ExpMode(g2, w2)
    assert commutator(m1, m1) == 1.0
    assert commutator(m1, m2) == pytest.approx(np.conj(commutator(m2, m1)))
    assert abs(commutator(m1, m2)) <= 1.0 + 1e-12


def test_mode_rejects_nonpositive_rate():
    with pytest.raises(ValueError):
        ExpMode(0.0, 1.0)


def test_ladder_family_single():
    (mode,) = ladder_family(math.e**2, 1, 0.0)
    assert mode.gamma == pytest.approx(math.e**2 / 2)


def test_ladder_family_two():
    fam = ladder_family(100, 2, 0.0)
    assert [m.gamma for m in fam] == pytest.approx([21.71472409516259, 43.42944819032518])


def test_ladder_family_gram_is_rate_ratio_matrix():
    fam = ladder_family(100, 10, 0.0)
    R = gram_matrix(fam)
    for k in range(10):
        for l in range(10):
            expect = 2 * math.sqrt((k + 1) * (l + 1)) / (k + 2 + l)
            assert R[k, l] == pytest.approx(expect, rel=1e-12)


def test_ladder_family_rejects_small_n():
    with pytest.raises(ValueError):
        ladder_family(1.5, 3)


def test_orthogonalize_scalar():
    basis = orthogonalize(np.array([[3.7]]), np.array([[1.0]]), base=(ExpMode(1.0),))
    assert basis.lambdas[0] == pytest.approx(3.7)
    assert basis.V[0, 0] == pytest.approx(1.0)


def test_orthogonalize_degenerate_pencil():
    r = 0.4
    R = np.array([[1.0, r], [r, 1.0]])
    basis = orthogonalize(R.copy(), R.copy(), base=(ExpMode(1.0), ExpMode(2.0)))
    assert basis.lambdas == pytest.approx([1.0, 1.0])
    eye = basis.V.conj().T @ R @ basis.V
    assert np.max(np.abs(eye - np.eye(2))) < 1e-10


@pytest.mark.parametrize("D", [2, 4, 6, 8, 10])
def test_orthonormality_within_conditioning_floor(D):
    spec = superradiant_spec(30)
    fam = ladder_family(30, D, 0.0)
    R = gram_matrix(fam)
    basis = orthogonalize(one_body_matrix(spec, fam), R, base=fam)
    eye = basis.V.conj().T @ R @ basis.V
    defect = np.max(np.abs(eye - np.eye(basis.n_modes)))
    # attainable floor scales with the Gram conditioning; exact 1e-10 holds
    # only while cond(R) stays below ~1e6
    w = np.linalg.eigvalsh(R)
    floor = max(1e-10, 200 * np.finfo(float).eps * w[-1] / w[w > 0].min())
    assert defect <= floor
    if D <= 4:
        assert defect < 1e-10


def test_photon_conservation_and_ordering():
    N = 30
    spec = superradiant_spec(N)
    fam = ladder_family(N, 8, 0.0)
    basis = orthogonalize(one_body_matrix(spec, fam), gram_matrix(fam), base=fam)
    lam = basis.lambdas
    assert np.all(lam[:-1] >= lam[1:] - 1e-12)
    assert np.all(lam >= -1e-9)
    assert lam.sum() <= N + 1e-8


def test_sum_lambda_equals_whitened_trace():
    N = 12
    spec = superradiant_spec(N)
    fam = ladder_family(N, 4, 0.0)
    R = gram_matrix(fam)
    T = one_body_matrix(spec, fam)
    basis = orthogonalize(T, R, base=fam)
    w, U = np.linalg.eigh(R)
    X = U / np.sqrt(w)
    assert basis.lambdas.sum() == pytest.approx(np.trace(X.conj().T @ T @ X).real, rel=1e-8)


def test_deflation_of_exactly_duplicated_mode():
    spec = superradiant_spec(4)
    fam = (ExpMode(3.0), ExpMode(3.0), ExpMode(6.0))
    basis = orthogonalize(one_body_matrix(spec, fam), gram_matrix(fam), base=fam)
    assert basis.n_deflated == 1
    assert basis.n_modes == 2


def test_orthogonalize_validates_inputs():
    with pytest.raises(ValueError):
        orthogonalize(np.array([[1.0, 2.0], [3.0, 4.0]]), np.eye(2))  # not Hermitian
    with pytest.raises(IllConditionedGramError):
        orthogonalize(np.zeros((2, 2)), np.zeros((2, 2)))


def test_basis_json_round_trip():
    spec = superradiant_spec(6)
    fam = ladder_family(6, 3, 0.5)
    basis = orthogonalize(one_body_matrix(spec, fam), gram_matrix(fam), base=fam)
    again = basis_from_json(basis.to_json())
    assert np.allclose(again.V, basis.V)
    assert np.allclose(again.lambdas, basis.lambdas)
    assert again.base == basis.base

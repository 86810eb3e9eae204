import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mubrobust.errors import InvalidInputError
from mubrobust.linalg import (
    HermitianOperator,
    eigh,
    is_psd,
    jacobi_eigh,
    max_eigenspace_projector,
    op_norm,
    real_poly_roots,
    root_of_unity,
)


def random_hermitian(d, rng):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def test_eigh_examples():
    assert np.allclose(eigh(np.eye(4)).eigenvalues, 1)
    es = eigh(np.diag([0.3, 0.7]))
    assert np.allclose(es.eigenvalues, [0.3, 0.7])
    assert np.allclose(np.abs(es.eigenvectors), np.eye(2))
    plus = np.array([1, 1]) / math.sqrt(2)
    assert np.allclose(eigh(np.outer(plus, plus)).eigenvalues, [0, 1], atol=1e-14)


def test_hermitian_operator_rejects_bad_input():
    with pytest.raises(InvalidInputError):
        HermitianOperator(np.array([[0, 1], [0, 0]]))
    with pytest.raises(InvalidInputError):
        HermitianOperator(np.ones((2, 3)))
    with pytest.raises(InvalidInputError):
        HermitianOperator(np.array([[np.nan, 0], [0, 1]]))


@pytest.mark.parametrize("d", [1, 2, 3, 5, 8, 16, 32])
def test_jacobi_reconstruction_and_lapack_agreement(d):
    rng = np.random.default_rng(d)
    m = random_hermitian(d, rng)
    es = jacobi_eigh(m)
    rel = np.linalg.norm(es.reconstruct() - m) / np.linalg.norm(m)
    assert rel <= 1e-9
    assert np.allclose(es.eigenvectors.conj().T @ es.eigenvectors, np.eye(d), atol=1e-10)
    assert np.allclose(es.eigenvalues, np.linalg.eigvalsh(m), atol=1e-10)


def test_op_norm_examples():
    assert op_norm(np.eye(3)) == pytest.approx(1)
    assert op_norm(np.diag([1.0, 1.0, 0.0])) == pytest.approx(1)
    plus = np.array([1, 1]) / math.sqrt(2)
    s = np.diag([1.0, 0.0]) + np.outer(plus, plus)
    assert op_norm(s) == pytest.approx(1 + 1 / math.sqrt(2), abs=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**31))
def test_op_norm_triangle_inequality(d, seed):
    rng = np.random.default_rng(seed)
    a = random_hermitian(d, rng)
    b = random_hermitian(d, rng)
    a, b = a @ a, b @ b
    assert op_norm(a + b) <= op_norm(a) + op_norm(b) + 1e-10


def test_max_eigenspace_projector_examples():
    assert np.allclose(max_eigenspace_projector(np.eye(3)).matrix, np.eye(3))
    p = max_eigenspace_projector(np.diag([1.0, 2.0, 2.0])).matrix
    assert np.allclose(p, np.diag([0, 1, 1]))
    p = max_eigenspace_projector(np.diag([1.0, 2 - 1e-12, 2.0]), cluster_tol=1e-8).matrix
    assert np.isclose(np.trace(p).real, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31))
def test_projector_properties(d, seed):
    rng = np.random.default_rng(seed)
    m = random_hermitian(d, rng)
    p = max_eigenspace_projector(m).matrix
    assert np.allclose(p @ p, p, atol=1e-9)
    assert np.allclose(p, p.conj().T, atol=1e-9)
    assert np.allclose(m @ p, p @ m, atol=1e-9)


def test_is_psd():
    assert is_psd(np.eye(2))
    assert not is_psd(np.diag([1.0, -1e-6]), tol=1e-9)
    assert is_psd(np.diag([1.0, -1e-12]), tol=1e-9)


def test_root_of_unity():
    assert root_of_unity(2) == -1
    assert root_of_unity(4) == 1j
    w = root_of_unity(3)
    assert w.real == pytest.approx(-0.5, abs=1e-15)
    assert w.imag == pytest.approx(math.sqrt(3) / 2, abs=1e-15)
    with pytest.raises(InvalidInputError):
        root_of_unity(1)


def test_real_poly_roots():
    assert np.allclose(real_poly_roots([1, 0, -1]), [-1, 1])
    r = real_poly_roots([56, -28, 0, 1])
    assert r.max() == pytest.approx(0.3684881145, abs=1e-9)
    assert np.polyval([56, -28, 0, 1], r.max()) == pytest.approx(0, abs=1e-12)
    quad = np.poly([2, 2, 2, 2])
    assert np.allclose(real_poly_roots(quad), [2.0], atol=1e-10)
    assert real_poly_roots([1, 0, 1]).size == 0
    with pytest.raises(InvalidInputError):
        real_poly_roots([0, 0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=5, unique=True))
def test_real_poly_roots_recovers_separated_roots(roots):
    roots = sorted(roots)
    if any(b - a < 1e-2 for a, b in zip(roots, roots[1:])):
        return
    got = real_poly_roots(np.poly(roots))
    assert len(got) == len(roots)
    assert np.allclose(got, roots, atol=1e-7)

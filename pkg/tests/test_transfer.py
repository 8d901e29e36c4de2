import itertools
import math

import numpy as np
import pytest

from conftest import BEAM_SPLITTER, random_unitary
from photonforge.fock_basis import StateVector, enumerate_basis, mode_assignment
from photonforge.oracle import symbolic_apply
from photonforge.transfer import (
    apply,
    compose_circuit,
    distinct_permutations,
    matrix_element,
    render_transfer,
    ryser_permanent,
)


def full(u, n):
    basis = enumerate_basis(n, u.shape[0])
    return render_transfer(u, basis, basis).matrix


def test_distinct_permutations_counts():
    assert list(distinct_permutations([1, 0, 0])) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]
    items = (0, 0, 1, 2, 2, 2)
    assert len(list(distinct_permutations(items))) == math.factorial(6) // (2 * 6)
    assert sorted(set(itertools.permutations(items))) == list(distinct_permutations(items))


def test_compose_examples():
    u = random_unitary(3, 1)
    assert np.allclose(compose_circuit([u]), u)
    assert np.allclose(compose_circuit([np.eye(3), u]), u)
    with pytest.raises(ValueError):
        compose_circuit([u, np.eye(2)])
    with pytest.raises(ValueError):
        compose_circuit([np.ones((2, 2))])


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("n", [1, 2, 3])
def test_homomorphism(m, n):
    u1, u2 = random_unitary(m, 10 * m + n), random_unitary(m, 100 + 10 * m + n)
    lhs = full(compose_circuit([u1, u2]), n)
    rhs = full(u2, n) @ full(u1, n)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_single_photon_element_and_transpose():
    u = random_unitary(4, 3)
    basis = enumerate_basis(1, 4)
    for a, sa in enumerate(basis):
        for b, sb in enumerate(basis):
            assert matrix_element(u, sa, sb) == pytest.approx(u[a, b], abs=1e-15)
    assert np.allclose(render_transfer(u, basis, basis).matrix, u.T, atol=1e-15)


def test_hong_ou_mandel():
    assert abs(matrix_element(BEAM_SPLITTER, (1, 1), (1, 1))) < 1e-15
    basis = enumerate_basis(2, 2)
    op = render_transfer(BEAM_SPLITTER, enumerate_basis(2, 2, keep=lambda s: s == (1, 1)), basis)
    assert np.allclose(op.matrix[:, 0], [1 / np.sqrt(2), 0, -1 / np.sqrt(2)], atol=1e-15)
    out = symbolic_apply(BEAM_SPLITTER, (1, 1))
    assert np.allclose(out.amplitudes, op.matrix[:, 0], atol=1e-15)


def test_doubly_occupied_single_term():
    u = random_unitary(3, 5)
    assert matrix_element(u, (2, 0, 0), (2, 0, 0)) == pytest.approx(u[0, 0] ** 2, abs=1e-15)


def test_photon_number_mismatch():
    with pytest.raises(ValueError):
        matrix_element(np.eye(2), (1, 0), (1, 1))
    mixed = enumerate_basis(1, 2).states + enumerate_basis(2, 2).states
    from photonforge.fock_basis import Basis

    with pytest.raises(ValueError):
        render_transfer(np.eye(2), Basis(mixed, 2), enumerate_basis(1, 2))


def test_identity_rendering():
    inputs = enumerate_basis(2, 3, keep=lambda s: s[0] == 1)
    outputs = enumerate_basis(2, 3)
    mat = render_transfer(np.eye(3), inputs, outputs).matrix
    for j, s in enumerate(inputs):
        col = np.zeros(len(outputs))
        col[outputs.position(s)] = 1
        assert np.allclose(mat[:, j], col)


@pytest.mark.parametrize("n,m", [(2, 3), (3, 3), (3, 5), (2, 5)])
def test_full_rendering_unitary(n, m):
    a = full(random_unitary(m, n * m), n)
    assert np.max(np.abs(a.conj().T @ a - np.eye(a.shape[0]))) <= 1e-9


def test_apply_preserves_norm(rng):
    u = random_unitary(4, 9)
    basis = enumerate_basis(3, 4)
    amps = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    psi = StateVector(basis, amps / np.linalg.norm(amps))
    out = apply(render_transfer(u, basis, basis), psi)
    assert abs(out.norm() - 1) <= 1e-10
    ident = render_transfer(np.eye(4), basis, basis)
    assert np.allclose(apply(ident, psi).amplitudes, psi.amplitudes)
    with pytest.raises(ValueError):
        apply(ident, StateVector(enumerate_basis(2, 4), np.ones(10)))


def test_columns_are_subnormalized():
    u = random_unitary(5, 2)
    inputs = enumerate_basis(3, 5, keep=lambda s: s[0] == 0)
    outputs = enumerate_basis(3, 5, keep=lambda s: s[-1] == 0)
    mat = render_transfer(u, inputs, outputs).matrix
    assert np.all(np.sum(np.abs(mat) ** 2, axis=0) <= 1 + 1e-10)


@pytest.mark.parametrize("n,m", [(2, 3), (3, 4), (4, 3), (6, 3), (6, 4), (7, 2)])
def test_ryser_matches_enumeration(n, m):
    u = random_unitary(m, 7 * n + m)
    basis = enumerate_basis(n, m)
    for s_in in basis.states[:: max(1, len(basis) // 6)]:
        for s_out in basis:
            a = matrix_element(u, s_in, s_out, method="enumerate")
            b = matrix_element(u, s_in, s_out, method="ryser")
            assert abs(a - b) <= 1e-12


def test_ryser_plain_permanent():
    a = np.arange(1, 10, dtype=complex).reshape(3, 3)
    brute = sum(np.prod([a[i, p[i]] for i in range(3)]) for p in itertools.permutations(range(3)))
    assert ryser_permanent(a, (1, 1, 1), (1, 1, 1)) == pytest.approx(brute)


def test_assignment_labeling_independence(rng):
    """Any photon labeling of the input gives the same amplitude."""
    u = random_unitary(4, 21)
    n_in, n_out = (1, 2, 0, 1), (0, 1, 2, 1)
    rows = list(mode_assignment(n_in))
    cols = mode_assignment(n_out)
    reference = matrix_element(u, n_in, n_out)
    scale = math.sqrt(math.prod(map(math.factorial, n_out)) / math.prod(map(math.factorial, n_in)))
    for _ in range(5):
        rng.shuffle(rows)
        total = sum(np.prod([u[r, c] for r, c in zip(rows, perm)]) for perm in distinct_permutations(cols))
        assert abs(total * scale - reference) <= 1e-12


def test_threaded_rendering_matches_serial():
    u = random_unitary(4, 4)
    basis = enumerate_basis(3, 4)
    a = render_transfer(u, basis, basis).matrix
    b = render_transfer(u, basis, basis, workers=4).matrix
    assert np.array_equal(a, b)

import numpy as np
import pytest

from conftest import BEAM_SPLITTER, random_unitary
from photonforge.fock_basis import enumerate_basis
from photonforge.oracle import expand_monomials, symbolic_apply
from photonforge.transfer import render_transfer


def test_identity():
    out = symbolic_apply(np.eye(3), (1, 0, 1))
    assert out.amplitude((1, 0, 1)) == pytest.approx(1)
    assert np.sum(np.abs(out.amplitudes) ** 2) == pytest.approx(1)


def test_beam_splitter_expansion():
    out = symbolic_apply(BEAM_SPLITTER, (1, 1))
    assert out.amplitude((2, 0)) == pytest.approx(1 / np.sqrt(2))
    assert out.amplitude((0, 2)) == pytest.approx(-1 / np.sqrt(2))
    assert abs(out.amplitude((1, 1))) < 1e-15
    # four raw products collapse onto three sorted monomials
    assert set(expand_monomials(BEAM_SPLITTER, (1, 1))) == {(0, 0), (0, 1), (1, 1)}


def test_random_column_matches_transfer():
    u = random_unitary(3, 8)
    basis = enumerate_basis(2, 3)
    col = render_transfer(u, enumerate_basis(2, 3, keep=lambda s: s == (1, 1, 0)), basis).matrix[:, 0]
    assert np.max(np.abs(symbolic_apply(u, (1, 1, 0)).amplitudes - col)) <= 1e-9


@pytest.mark.parametrize("n,m", [(2, 4), (3, 3), (4, 2)])
def test_norm_preserved(n, m):
    u = random_unitary(m, n + m)
    for s in enumerate_basis(n, m):
        assert abs(symbolic_apply(u, s).norm() - 1) <= 1e-10


def test_guard():
    with pytest.raises(ValueError):
        symbolic_apply(np.eye(11), (6,) + (0,) * 10)

"""Brute-force reference evaluation of a mode unitary on a single Fock state.

Expands ``Π_α (Σ_β U[m_α, β] a†_β) |0>`` term by term (``M**N`` products) and only then
collects equal monomials.  Slow on purpose; used to check :mod:`photonforge.transfer`.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .fock_basis import StateVector, enumerate_basis, mode_assignment, occupation_from_assignment

MAX_TERMS = 10**6


def expand_monomials(u, occupation: Sequence[int]) -> dict[tuple[int, ...], complex]:
    """Coefficients of the creation-operator monomials, keyed by sorted mode assignment."""
    u = np.asarray(u, dtype=complex)
    m = u.shape[0]
    rows = mode_assignment(occupation)
    if m ** len(rows) > MAX_TERMS:
        raise ValueError(f"expansion of {m}**{len(rows)} terms exceeds guard {MAX_TERMS}")
    terms: dict[tuple[int, ...], complex] = {}

    def expand(depth: int, picked: list[int], coeff: complex) -> None:
        if depth == len(rows):
            key = tuple(sorted(picked))
            terms[key] = terms.get(key, 0j) + coeff
            return
        for beta in range(m):
            picked.append(beta)
            expand(depth + 1, picked, coeff * u[rows[depth], beta])
            picked.pop()

    expand(0, [], 1 + 0j)
    return dict(sorted(terms.items()))


def symbolic_apply(u, occupation: Sequence[int]) -> StateVector:
    """Output state of ``|occupation>`` over the full Fock basis of the same photon number."""
    u = np.asarray(u, dtype=complex)
    m = u.shape[0]
    if len(occupation) != m:
        raise ValueError("occupation length does not match unitary dimension")
    n = sum(occupation)
    basis = enumerate_basis(n, m)
    amps = np.zeros(len(basis), dtype=complex)
    # input normalization 1/sqrt(n!), output a†...|0> = sqrt(n'!) |n'>
    in_norm = math.sqrt(math.prod(math.factorial(k) for k in occupation))
    for modes, coeff in expand_monomials(u, occupation).items():
        out = occupation_from_assignment(modes, m)
        out_norm = math.sqrt(math.prod(math.factorial(k) for k in out))
        amps[basis.position(out)] += coeff * out_norm / in_norm
    return StateVector(basis, amps)

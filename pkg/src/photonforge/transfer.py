"""Many-photon transfer matrices of linear-optical mode unitaries.

A mode unitary ``U`` maps creation operators as ``a†_α -> Σ_β U[α, β] a†_β``.  The induced
operator on ``N``-photon Fock states has elements

    A(U)[n_out, n_in] = Π_p sqrt(n_out_p!) / sqrt(n_in_p!) · Σ_{distinct perms σ of m_out}
                        Π_α U[m_in_α, σ(m_out)_α]

where ``m_in``/``m_out`` are the sorted per-photon mode assignments.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Sequence

import numpy as np

from .fock_basis import Basis, StateVector, mode_assignment

UNITARY_TOL = 1e-10
# photon number from which matrix_element switches to the Ryser evaluation
RYSER_THRESHOLD = 6
_MAX_FACTORIAL = 12
_SQRT_FACTORIAL = np.sqrt([float(math.factorial(k)) for k in range(_MAX_FACTORIAL + 1)])


def _sqrt_factorial(k: int) -> float:
    if k <= _MAX_FACTORIAL:
        return float(_SQRT_FACTORIAL[k])
    return math.sqrt(math.factorial(k))


def check_unitary(u, tol: float = UNITARY_TOL) -> np.ndarray:
    """Return ``u`` as a complex square array, raising ``ValueError`` if it is not unitary."""
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"mode unitary must be square, got shape {u.shape}")
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) if u.size else 0.0
    if dev > tol:
        raise ValueError(f"matrix is not unitary (max |U†U - I| = {dev:.3g})")
    return u


def compose_circuit(components: Sequence) -> np.ndarray:
    """Compile components listed in application order into one mode unitary ``U_1 U_2 ... U_K``.

    With this product order ``A(U_K) ... A(U_1) == A(U_1 ... U_K)``.
    """
    if not components:
        raise ValueError("empty circuit")
    mats = [check_unitary(c) for c in components]
    dim = mats[0].shape[0]
    total = np.eye(dim, dtype=complex)
    for k, m in enumerate(mats):
        if m.shape[0] != dim:
            raise ValueError(f"component {k} has dimension {m.shape[0]}, expected {dim}")
        total = total @ m
    return total


def distinct_permutations(items: Sequence[int]) -> Iterator[tuple[int, ...]]:
    """Distinct orderings of a multiset in lexicographic order (next-permutation walk)."""
    seq = sorted(items)
    n = len(seq)
    while True:
        yield tuple(seq)
        i = n - 2
        while i >= 0 and seq[i] >= seq[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while seq[j] <= seq[i]:
            j -= 1
        seq[i], seq[j] = seq[j], seq[i]
        seq[i + 1 :] = reversed(seq[i + 1 :])


def _permutation_sum(u: np.ndarray, rows: Sequence[int], cols: Sequence[int]) -> complex:
    total = 0j
    for perm in distinct_permutations(cols):
        term = 1 + 0j
        for r, c in zip(rows, perm):
            term *= u[r, c]
        total += term
    return total


def ryser_permanent(u: np.ndarray, row_counts: Sequence[int], col_counts: Sequence[int]) -> complex:
    """Permanent of ``u`` with row ``r`` repeated ``row_counts[r]`` times and column ``c``
    repeated ``col_counts[c]`` times.

    Ryser's inclusion-exclusion grouped by column multiplicity:
    Σ_{0<=s<=b} (-1)^(N-|s|) Π_c C(b_c, s_c) Π_r (Σ_c s_c u[r, c])^(a_r).
    """
    a = np.asarray(row_counts, dtype=int)
    b = np.asarray(col_counts, dtype=int)
    n = int(a.sum())
    if n != int(b.sum()):
        raise ValueError("row and column multiplicities must have equal totals")
    if n == 0:
        return 1 + 0j
    rows = np.flatnonzero(a)
    cols = np.flatnonzero(b)
    sub = u[np.ix_(rows, cols)]
    exps = a[rows]
    total = 0j
    for s in product(*(range(int(b[c]) + 1) for c in cols)):
        size = sum(s)
        if size == 0:
            continue
        weight = math.prod(math.comb(int(b[c]), k) for c, k in zip(cols, s))
        x = sub @ np.asarray(s, dtype=float)
        sign = -1 if (n - size) % 2 else 1
        total += sign * weight * complex(np.prod(x**exps))
    return total


def matrix_element(u, n_in: Sequence[int], n_out: Sequence[int], method: str = "auto") -> complex:
    """Transition amplitude ``<n_out| A(U) |n_in>``.

    ``method`` is ``"enumerate"`` (distinct-permutation sum), ``"ryser"`` or ``"auto"``
    (Ryser from :data:`RYSER_THRESHOLD` photons up).
    """
    u = np.asarray(u, dtype=complex)
    if len(n_in) != u.shape[0] or len(n_out) != u.shape[0]:
        raise ValueError("occupation length does not match unitary dimension")
    n = sum(n_in)
    if n != sum(n_out):
        raise ValueError(f"photon number mismatch: {sum(n_in)} in, {sum(n_out)} out")
    if method == "auto":
        method = "ryser" if n >= RYSER_THRESHOLD else "enumerate"
    if method == "enumerate":
        amp = _permutation_sum(u, mode_assignment(n_in), mode_assignment(n_out))
        scale = 1.0
        for k in n_out:
            scale *= _sqrt_factorial(k)
        for k in n_in:
            scale /= _sqrt_factorial(k)
        return amp * scale
    if method == "ryser":
        norm = 1.0
        for k in (*n_in, *n_out):
            norm *= _sqrt_factorial(k)
        return ryser_permanent(u, n_in, n_out) / norm
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class TransferOperator:
    input_basis: Basis
    output_basis: Basis
    matrix: np.ndarray

    def __post_init__(self):
        expected = (len(self.output_basis), len(self.input_basis))
        if self.matrix.shape != expected:
            raise ValueError(f"matrix shape {self.matrix.shape}, expected {expected}")


def _single_photon_number(basis: Basis, label: str) -> int | None:
    numbers = basis.photon_numbers()
    if len(numbers) > 1:
        raise ValueError(f"{label} basis mixes photon numbers {sorted(numbers)}")
    return numbers.pop() if numbers else None


def render_transfer(
    u,
    input_basis: Basis,
    output_basis: Basis,
    workers: int = 1,
    method: str = "auto",
) -> TransferOperator:
    """Render ``A(U)`` restricted to the given input columns and output rows.

    Rows are independent, so ``workers > 1`` fans them out over a thread pool.
    """
    u = check_unitary(u)
    m = u.shape[0]
    if input_basis.n_modes != m or output_basis.n_modes != m:
        raise ValueError(f"bases must have {m} modes")
    n_in = _single_photon_number(input_basis, "input")
    n_out = _single_photon_number(output_basis, "output")
    if n_in is not None and n_out is not None and n_in != n_out:
        raise ValueError(f"photon number mismatch: input {n_in}, output {n_out}")

    def row(state_out):
        return [matrix_element(u, state_in, state_out, method) for state_in in input_basis]

    if workers > 1 and len(output_basis) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(row, output_basis.states))
    else:
        rows = [row(s) for s in output_basis.states]
    mat = np.array(rows, dtype=complex).reshape(len(output_basis), len(input_basis))
    return TransferOperator(input_basis, output_basis, mat)


def apply(op: TransferOperator, state: StateVector) -> StateVector:
    if state.basis != op.input_basis:
        raise ValueError("state basis does not match the operator's input basis")
    return StateVector(op.output_basis, op.matrix @ state.amplitudes)

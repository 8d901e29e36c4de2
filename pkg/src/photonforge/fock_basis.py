"""Bosonic Fock bases: enumeration, indexing and photon/mode bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable, Iterable, Sequence

import numpy as np

Occupation = tuple[int, ...]

# results must fit a signed 64-bit index
MAX_DIM = 2**63 - 1


def hilbert_dim(n_photons: int, n_modes: int) -> int:
    """Number of Fock states of ``n_photons`` indistinguishable photons in ``n_modes`` modes.

    Raises:
        ValueError: for negative photon number or fewer than one mode.
        OverflowError: if the dimension does not fit a signed 64-bit integer.
    """
    if n_photons < 0 or n_modes < 1:
        raise ValueError(f"need N >= 0 and M >= 1, got N={n_photons}, M={n_modes}")
    dim = math.comb(n_photons + n_modes - 1, n_photons)
    if dim > MAX_DIM:
        raise OverflowError(f"hilbert_dim({n_photons}, {n_modes}) exceeds 64-bit range")
    return dim


def mode_assignment(occupation: Sequence[int]) -> tuple[int, ...]:
    """Sorted list of the mode occupied by each photon, e.g. (0,3,1) -> (1,1,1,2)."""
    modes: list[int] = []
    for mode, count in enumerate(occupation):
        if count < 0:
            raise ValueError(f"negative occupation {tuple(occupation)}")
        modes.extend([mode] * count)
    return tuple(modes)


def occupation_from_assignment(modes: Iterable[int], n_modes: int) -> Occupation:
    counts = [0] * n_modes
    for mode in modes:
        if not 0 <= mode < n_modes:
            raise ValueError(f"mode index {mode} out of range for {n_modes} modes")
        counts[mode] += 1
    return tuple(counts)


def concat_occupations(ancilla: Sequence[int], comp: Sequence[int]) -> Occupation:
    """Joint occupation with the ancilla modes placed first."""
    return tuple(ancilla) + tuple(comp)


def factorial_norm(occupation: Sequence[int]) -> float:
    """sqrt(prod_p n_p!) for an occupation vector."""
    return math.sqrt(math.prod(math.factorial(n) for n in occupation))


def format_occupation(occupation: Sequence[int]) -> str:
    return ",".join(str(n) for n in occupation)


def parse_occupation(text: str) -> Occupation:
    text = text.strip()
    if not text:
        return ()
    counts = tuple(int(tok) for tok in text.split(","))
    if any(n < 0 for n in counts):
        raise ValueError(f"negative occupation in {text!r}")
    return counts


@dataclass(frozen=True)
class Basis:
    """Ordered list of occupation vectors with an exact reverse index."""

    states: tuple[Occupation, ...]
    n_modes: int
    index: dict[Occupation, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        states = tuple(tuple(int(n) for n in s) for s in self.states)
        object.__setattr__(self, "states", states)
        index = {}
        for i, s in enumerate(states):
            if len(s) != self.n_modes:
                raise ValueError(f"state {s} does not have {self.n_modes} modes")
            if any(n < 0 for n in s):
                raise ValueError(f"negative occupation in {s}")
            if s in index:
                raise ValueError(f"duplicate basis state {s}")
            index[s] = i
        object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, i: int) -> Occupation:
        return self.states[i]

    def __contains__(self, state) -> bool:
        return tuple(state) in self.index

    def position(self, state: Sequence[int]) -> int:
        return self.index[tuple(state)]

    def photon_numbers(self) -> set[int]:
        return {sum(s) for s in self.states}

    def as_array(self) -> np.ndarray:
        return np.array(self.states, dtype=int).reshape(len(self.states), self.n_modes)


def enumerate_basis(
    n_photons: int,
    n_modes: int,
    keep: Callable[[Occupation], bool] | None = None,
) -> Basis:
    """All occupations of ``n_photons`` over ``n_modes`` in lexicographically decreasing order.

    ``keep`` optionally filters states (build only the relevant part of a basis).
    ``n_modes == 0`` is allowed for the empty register, whose only state is ``()`` when
    ``n_photons == 0``.
    """
    if n_photons < 0 or n_modes < 0:
        raise ValueError(f"need N >= 0 and M >= 0, got N={n_photons}, M={n_modes}")
    if n_modes == 0:
        states = [()] if n_photons == 0 else []
    else:
        # sorted mode tuples in lex-increasing order map to lex-decreasing occupations
        states = [
            occupation_from_assignment(modes, n_modes)
            for modes in combinations_with_replacement(range(n_modes), n_photons)
        ]
    if keep is not None:
        states = [s for s in states if keep(s)]
    return Basis(tuple(states), n_modes)


@dataclass(frozen=True)
class StateVector:
    basis: Basis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != len(self.basis):
            raise ValueError(f"{amps.shape[0]} amplitudes for a basis of {len(self.basis)} states")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def fock(cls, basis: Basis, state: Sequence[int]) -> "StateVector":
        amps = np.zeros(len(basis), dtype=complex)
        amps[basis.position(state)] = 1.0
        return cls(basis, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol: float = 1e-10) -> bool:
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0) <= tol

    def amplitude(self, state: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.basis.position(state)])

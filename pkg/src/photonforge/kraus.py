"""Heralded (post-selected) linear-optical operations.

The Kraus operator of a heralded gate is ``E = P · A(U) · L_a``: the computational input is
joined with an ancilla state (ancilla modes first), sent through ``U``, and the ancilla
modes are projected onto a single Fock outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .fock_basis import (
    Basis,
    Occupation,
    StateVector,
    concat_occupations,
    enumerate_basis,
)
from .transfer import check_unitary, render_transfer

DEGENERATE_NORM = 1e-300


@dataclass(frozen=True)
class AncillaSpec:
    n_photons: int
    n_modes: int
    state: StateVector

    def __post_init__(self):
        if self.state.basis != enumerate_basis(self.n_photons, self.n_modes):
            raise ValueError("ancilla state must live on the full (N_a, M_a) basis")
        if not self.state.is_normalized():
            raise ValueError(f"ancilla state is not normalized (norm {self.state.norm():.12g})")

    @classmethod
    def fock(cls, occupation: Sequence[int]) -> "AncillaSpec":
        occupation = tuple(occupation)
        basis = enumerate_basis(sum(occupation), len(occupation))
        return cls(sum(occupation), len(occupation), StateVector.fock(basis, occupation))

    @classmethod
    def empty(cls) -> "AncillaSpec":
        return cls.fock(())


@dataclass(frozen=True)
class ProjectorSpec:
    outcome: Occupation

    def __post_init__(self):
        object.__setattr__(self, "outcome", tuple(int(n) for n in self.outcome))
        if any(n < 0 for n in self.outcome):
            raise ValueError(f"negative occupation in projector outcome {self.outcome}")

    @property
    def n_photons(self) -> int:
        return sum(self.outcome)

    @property
    def n_modes(self) -> int:
        return len(self.outcome)


@dataclass(frozen=True)
class KrausOperator:
    input_basis: Basis
    output_basis: Basis
    matrix: np.ndarray
    unitary: np.ndarray
    ancilla: AncillaSpec
    projector: ProjectorSpec

    @property
    def d_in(self) -> int:
        return len(self.input_basis)


def assemble_paula(
    u,
    ancilla: AncillaSpec,
    projector: ProjectorSpec,
    input_basis: Basis,
    output_basis: Basis,
    workers: int = 1,
) -> KrausOperator:
    """Build the heralded Kraus operator from only the rows and columns of ``A(U)`` it needs.

    Column ``j`` is ``Σ_k ψ_a[k] <n_a, out| A(U) |k, in_j>`` over the ancilla basis states ``k``.
    """
    u = check_unitary(u)
    m_a, m_c = ancilla.n_modes, input_basis.n_modes
    if projector.n_modes != m_a or projector.n_photons != ancilla.n_photons:
        raise ValueError(
            f"projector {projector.outcome} does not match ancilla (N_a={ancilla.n_photons}, M_a={m_a})"
        )
    if output_basis.n_modes != m_c:
        raise ValueError("input and output bases must cover the same computational modes")
    if u.shape[0] != m_a + m_c:
        raise ValueError(f"unitary has {u.shape[0]} modes, expected M_a + M_c = {m_a + m_c}")
    photons = input_basis.photon_numbers() | output_basis.photon_numbers()
    if len(photons) > 1:
        raise ValueError(f"input/output bases mix photon numbers {sorted(photons)}")

    # keep only ancilla components with nonzero amplitude
    anc_states = [
        (k, amp) for k, amp in zip(ancilla.state.basis, ancilla.state.amplitudes) if amp != 0
    ]
    joint_in = Basis(
        tuple(concat_occupations(k, s) for k, _ in anc_states for s in input_basis), m_a + m_c
    )
    joint_out = Basis(
        tuple(concat_occupations(projector.outcome, s) for s in output_basis), m_a + m_c
    )
    block = render_transfer(u, joint_in, joint_out, workers=workers).matrix
    d_in = len(input_basis)
    mat = np.zeros((len(output_basis), d_in), dtype=complex)
    for a, (_, amp) in enumerate(anc_states):
        mat += amp * block[:, a * d_in : (a + 1) * d_in]
    return KrausOperator(input_basis, output_basis, mat, u, ancilla, projector)


def _matrix(e) -> np.ndarray:
    return e.matrix if isinstance(e, KrausOperator) else np.asarray(e, dtype=complex)


def fidelity(e, target) -> float:
    """Real part of the fidelity amplitude, Re tr(E†T) / sqrt(d_c tr(E†E)).

    An all-zero ``E`` (the herald never fires) gives 0.
    """
    e = _matrix(e)
    t = np.asarray(target, dtype=complex)
    if e.shape != t.shape:
        raise ValueError(f"shape mismatch: E {e.shape}, T {t.shape}")
    norm = float(np.vdot(e, e).real)
    if norm < DEGENERATE_NORM:
        return 0.0
    return float(np.vdot(e, t).real / np.sqrt(e.shape[1] * norm))


def success(e) -> float:
    """Heralding probability averaged over the input basis, tr(E†E) / d_c."""
    e = _matrix(e)
    if e.shape[1] == 0:
        return 0.0
    return float(np.vdot(e, e).real / e.shape[1])


@dataclass(frozen=True)
class EmbeddedGate:
    """A Fock-basis partial permutation acting on a subset of a larger register."""

    rows: Mapping[Occupation, Occupation]
    modes: tuple[int, ...]
    n_modes: int

    def __call__(self, state: Sequence[int]) -> Occupation:
        state = tuple(state)
        if len(state) != self.n_modes:
            raise ValueError(f"state {state} does not have {self.n_modes} modes")
        local = tuple(state[m] for m in self.modes)
        if local not in self.rows:
            raise ValueError(
                f"state {state} restricted to modes {self.modes} is {local}, "
                "which the gate table does not cover (photon leakage)"
            )
        out = list(state)
        for m, n in zip(self.modes, self.rows[local]):
            out[m] = n
        return tuple(out)


def embed_gate(rows: Mapping[Occupation, Occupation], mode_indices: Sequence[int], n_modes: int) -> EmbeddedGate:
    """Lift a gate table on ``len(mode_indices)`` modes to an ``n_modes`` register.

    Spectator modes are untouched; identity rows of the table act as identity.
    """
    modes = tuple(int(m) for m in mode_indices)
    if len(set(modes)) != len(modes):
        raise ValueError(f"mode indices {modes} are not distinct")
    if any(not 0 <= m < n_modes for m in modes):
        raise ValueError(f"mode indices {modes} out of range for {n_modes} modes")
    rows = {tuple(a): tuple(b) for a, b in dict(rows).items()}
    for a, b in rows.items():
        if len(a) != len(modes) or len(b) != len(modes):
            raise ValueError("gate table rows do not match the number of embedded modes")
    return EmbeddedGate(rows, modes, n_modes)


"""Block encoding, the C1-C4 controlled mode-swap tables and the inter-block CNOT schedule.

``q`` logical qubits live in one photon spread over ``2**q`` modes; two blocks make a
``2**(q+1)`` mode register.  CNOT between the first qubit of the control block and the last
qubit of the target block swaps each adjacent mode pair of the target block whenever the
control photon sits in the second half of the control block.  Each sub-operation C1-C4
realizes part of that swap pattern; applying it over a schedule of mode groups composes to
the full CNOT.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .fock_basis import Basis, Occupation, enumerate_basis, format_occupation
from .kraus import embed_gate

SUB_OPS = ("c1", "c2", "c3", "c4")

# heralded success per application reported for the optimal C1-C4 circuits
REPORTED_SUCCESS = {
    "c1": 2 / 27,
    "c2": 0.0221391,
    "c3": 0.0221266,
    "c4": 0.00691511,
}
# (N_a, M_a, projector outcome) of those optima
REPORTED_RESOURCES = {
    "c1": (2, 2, (1, 1)),
    "c2": (3, 4, (1, 1, 1, 0)),
    "c3": (3, 4, (1, 1, 1, 0)),
    "c4": (4, 4, (1, 1, 1, 1)),
}


# rows in the order they are printed in the original tables
_TABLES: dict[str, list[tuple[Occupation, Occupation]]] = {
    "c1": [
        ((0, 0, 0), (0, 0, 0)),
        ((0, 0, 1), (0, 0, 1)),
        ((0, 1, 0), (0, 1, 0)),
        ((1, 0, 0), (1, 0, 0)),
        ((1, 0, 1), (1, 1, 0)),
        ((1, 1, 0), (1, 0, 1)),
    ],
    "c2": [
        ((0, 0, 0, 0), (0, 0, 0, 0)),
        ((0, 0, 0, 1), (0, 0, 0, 1)),
        ((0, 0, 1, 0), (0, 0, 1, 0)),
        ((0, 1, 0, 0), (0, 1, 0, 0)),
        ((1, 0, 0, 0), (1, 0, 0, 0)),
        ((1, 0, 0, 1), (1, 0, 1, 0)),
        ((1, 0, 1, 0), (1, 0, 0, 1)),
        ((0, 1, 0, 1), (0, 1, 1, 0)),
        ((0, 1, 1, 0), (0, 1, 0, 1)),
    ],
    "c3": [
        ((0, 0, 0, 0, 0), (0, 0, 0, 0, 0)),
        ((0, 0, 0, 0, 1), (0, 0, 0, 0, 1)),
        ((0, 0, 0, 1, 0), (0, 0, 0, 1, 0)),
        ((0, 0, 1, 0, 0), (0, 0, 1, 0, 0)),
        ((0, 1, 0, 0, 0), (0, 1, 0, 0, 0)),
        ((1, 0, 0, 0, 0), (1, 0, 0, 0, 0)),
        ((1, 0, 0, 0, 1), (1, 0, 0, 1, 0)),
        ((1, 0, 0, 1, 0), (1, 0, 0, 0, 1)),
        ((1, 0, 1, 0, 0), (1, 1, 0, 0, 0)),
        ((1, 1, 0, 0, 0), (1, 0, 1, 0, 0)),
    ],
    "c4": [
        ((0, 0, 0, 0, 0, 0), (0, 0, 0, 0, 0, 0)),
        ((0, 0, 0, 0, 0, 1), (0, 0, 0, 0, 0, 1)),
        ((0, 0, 0, 0, 1, 0), (0, 0, 0, 0, 1, 0)),
        ((0, 0, 0, 1, 0, 0), (0, 0, 0, 1, 0, 0)),
        ((0, 0, 1, 0, 0, 0), (0, 0, 1, 0, 0, 0)),
        ((0, 1, 0, 0, 0, 0), (0, 1, 0, 0, 0, 0)),
        ((1, 0, 0, 0, 0, 0), (1, 0, 0, 0, 0, 0)),
        ((0, 1, 0, 0, 0, 1), (0, 1, 0, 0, 1, 0)),
        ((0, 1, 0, 0, 1, 0), (0, 1, 0, 0, 0, 1)),
        ((0, 1, 0, 1, 0, 0), (0, 1, 1, 0, 0, 0)),
        ((0, 1, 1, 0, 0, 0), (0, 1, 0, 1, 0, 0)),
        ((1, 0, 0, 0, 0, 1), (1, 0, 0, 0, 1, 0)),
        ((1, 0, 0, 0, 1, 0), (1, 0, 0, 0, 0, 1)),
        ((1, 0, 0, 1, 0, 0), (1, 0, 1, 0, 0, 0)),
        ((1, 0, 1, 0, 0, 0), (1, 0, 0, 1, 0, 0)),
    ],
}

# (number of control modes, number of target modes) of each sub-operation
_LAYOUT = {"c1": (1, 2), "c2": (2, 2), "c3": (1, 4), "c4": (2, 4)}
# smallest block size q for which each sub-operation fits the register
MIN_Q = {"c1": 1, "c2": 2, "c3": 2, "c4": 2}


def check_sub_op(name: str) -> str:
    key = name.lower()
    if key not in _TABLES:
        raise ValueError(f"unknown sub-operation {name!r}; expected one of {', '.join(SUB_OPS)}")
    return key


@dataclass(frozen=True)
class GateTable:
    name: str
    mode_count: int
    rows: tuple[tuple[Occupation, Occupation], ...]

    def __post_init__(self):
        inputs = [a for a, _ in self.rows]
        outputs = [b for _, b in self.rows]
        if len(set(inputs)) != len(inputs) or len(set(outputs)) != len(outputs):
            raise ValueError(f"gate table {self.name} is not injective")
        for a, b in self.rows:
            if len(a) != self.mode_count or len(b) != self.mode_count:
                raise ValueError(f"row {a} -> {b} does not have {self.mode_count} modes")
            if sum(a) != sum(b):
                raise ValueError(f"row {a} -> {b} does not preserve photon number")

    @cached_property
    def mapping(self) -> dict[Occupation, Occupation]:
        return dict(self.rows)

    @property
    def photon_numbers(self) -> tuple[int, ...]:
        return tuple(sorted({sum(a) for a, _ in self.rows}))

    def inputs(self, n_photons: int) -> list[Occupation]:
        return [a for a, _ in self.rows if sum(a) == n_photons]

    def is_involution(self) -> bool:
        return all(self.mapping.get(b) == a for a, b in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["input", "output"])
        for a, b in self.rows:
            writer.writerow([format_occupation(a), format_occupation(b)])
        return buf.getvalue()


def builtin_table(name: str) -> GateTable:
    key = check_sub_op(name)
    return GateTable(key.upper(), len(_TABLES[key][0][0]), tuple(_TABLES[key]))


def targets_from_table(table: GateTable, n_photons: int) -> tuple[Basis, Basis, np.ndarray]:
    """Target operator of a table on its ``n_photons`` inputs.

    Returns the input basis (table inputs with that photon number, canonical order), the
    full physical output basis and the 0/1 matrix placing each input on its table image.
    """
    if n_photons not in (0, 1, 2):
        raise ValueError(f"computational photon number must be 0, 1 or 2, got {n_photons}")
    m = table.mode_count
    wanted = set(table.inputs(n_photons))
    inputs = enumerate_basis(n_photons, m, keep=lambda s: s in wanted)
    outputs = enumerate_basis(n_photons, m)
    target = np.zeros((len(outputs), len(inputs)))
    for j, s in enumerate(inputs):
        target[outputs.position(table.mapping[s]), j] = 1.0
    return inputs, outputs, target


def encode_logical(q: int, bits: str) -> Occupation:
    """Two-block Fock state of a ``2q`` bit logical label (first block = first ``q`` bits)."""
    if q < 1:
        raise ValueError(f"block size must be >= 1, got {q}")
    if len(bits) != 2 * q or set(bits) - {"0", "1"}:
        raise ValueError(f"expected a {2 * q}-character bit string, got {bits!r}")
    size = 2**q
    occ = [0] * (2 * size)
    occ[int(bits[:q], 2)] = 1
    occ[size + int(bits[q:], 2)] = 1
    return tuple(occ)


def logical_cnot(bits: str) -> str:
    """CNOT from the first logical qubit onto the last one."""
    if bits[0] == "1":
        return bits[:-1] + ("0" if bits[-1] == "1" else "1")
    return bits


@dataclass(frozen=True)
class SubOpSchedule:
    sub_op: str
    q: int
    applications: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    @property
    def count(self) -> int:
        return len(self.applications)

    @property
    def n_modes(self) -> int:
        return 2 ** (self.q + 1)


def schedule_count(q: int, sub_op: str) -> int:
    key = check_sub_op(sub_op)
    if q < MIN_Q[key]:
        raise ValueError(f"{key} needs block size q >= {MIN_Q[key]}, got {q}")
    n_ctrl, n_tgt = _LAYOUT[key]
    return (2 ** (q - 1) // n_ctrl) * (2**q // n_tgt)


def cnot_schedule(q: int, sub_op: str) -> SubOpSchedule:
    """Mode groups on which ``sub_op`` is applied to build CNOT(first, last).

    Control groups tile the second half of the control block; target groups tile the
    target block in runs of adjacent pairs.  Modes are 0-indexed.
    """
    key = check_sub_op(sub_op)
    schedule_count(q, key)
    n_ctrl, n_tgt = _LAYOUT[key]
    size = 2**q
    second_half = range(size // 2, size)
    target_block = range(size, 2 * size)
    controls = [tuple(second_half[i : i + n_ctrl]) for i in range(0, len(second_half), n_ctrl)]
    targets = [tuple(target_block[i : i + n_tgt]) for i in range(0, len(target_block), n_tgt)]
    apps = tuple((c, t) for c in controls for t in targets)
    return SubOpSchedule(key, q, apps)


def schedule_matches(q: int, sub_op: str) -> tuple[int, int]:
    """Number of logical basis states on which the composed schedule equals CNOT(first, last)."""
    sched = cnot_schedule(q, sub_op)
    table = builtin_table(sub_op)
    gates = [embed_gate(table.mapping, c + t, sched.n_modes) for c, t in sched.applications]
    good = 0
    total = 2 ** (2 * q)
    for k in range(total):
        bits = format(k, f"0{2 * q}b")
        state = encode_logical(q, bits)
        try:
            for g in gates:
                state = g(state)
        except ValueError:
            continue
        good += state == encode_logical(q, logical_cnot(bits))
    return good, total


def verify_schedule(q: int, sub_op: str) -> bool:
    good, total = schedule_matches(q, sub_op)
    return good == total


def block_cnot_probability(q: int, sub_op: str, per_application: float) -> float:
    """Success probability of the full CNOT when every application heralds independently."""
    return per_application ** schedule_count(q, sub_op)

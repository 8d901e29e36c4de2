"""Result-record (JSON) and figure-table (CSV) serialization."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .fock_basis import enumerate_basis, format_occupation, parse_occupation
from .gates import MIN_Q, block_cnot_probability, schedule_count
from .optim import OptimizationResult, realize_ancilla, subspace_operators

RECORD_FORMAT = "photonforge-result/1"
# fields that legitimately differ between otherwise identical runs
VOLATILE_KEYS = ("run",)
FIGURE_COLUMNS = ("sub_op", "q", "applications", "S_per_application", "p")


def complex_pairs(values) -> list[list[float]]:
    """Row-major list of ``[re, im]`` pairs."""
    arr = np.asarray(values, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in arr]


def from_pairs(pairs, shape=None) -> np.ndarray:
    arr = np.array([complex(re, im) for re, im in pairs], dtype=complex)
    return arr.reshape(shape) if shape is not None else arr


def schedule_summary(gate: str, per_application: float, q_max: int = 4) -> dict[str, dict]:
    out = {}
    for q in range(MIN_Q[gate], q_max + 1):
        out[str(q)] = {
            "applications": schedule_count(q, gate),
            "p": block_cnot_probability(q, gate, per_application),
        }
    return out


def result_to_record(
    result: OptimizationResult,
    config: dict | None = None,
    include_kraus: bool = True,
    verify_q: int | None = None,
) -> dict:
    params = result.params
    unitary = params.unitary()
    ancilla = realize_ancilla(params.ancilla_raw, result.n_anc, result.m_anc)
    record = {
        "format": RECORD_FORMAT,
        "config": dict(config or {}),
        "result": {
            "gate": result.gate,
            "n_anc": result.n_anc,
            "m_anc": result.m_anc,
            "projector": format_occupation(result.projector),
            "exact": result.exact,
            "message": result.message,
            "fidelities": {str(k): v for k, v in result.fidelities.items()},
            "successes": {str(k): v for k, v in result.successes.items()},
            "success": result.success,
            "merit": result.merit,
            "epsilon": result.epsilon,
            "seed": result.seed,
            "restarts": result.restarts,
            "restart_index": result.restart_index,
            "iterations": result.iterations,
        },
        "params": {
            "theta": [float(v) for v in params.theta],
            "ancilla_raw": [float(v) for v in params.ancilla_raw],
        },
        "unitary": {"n_modes": int(unitary.shape[0]), "entries": complex_pairs(unitary)},
        "ancilla_state": {
            "basis": [format_occupation(s) for s in ancilla.state.basis],
            "amplitudes": complex_pairs(ancilla.state.amplitudes),
        },
        "schedule": schedule_summary(result.gate, result.success),
        "run": {
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "wall_time": result.wall_time,
        },
    }
    if verify_q is not None:
        record["verify_q"] = int(verify_q)
    if include_kraus:
        ops = subspace_operators(params, result.problem())
        record["kraus"] = {
            str(n): {
                "inputs": [format_occupation(s) for s in op.input_basis],
                "outputs": [format_occupation(s) for s in op.output_basis],
                "matrix": complex_pairs(op.matrix),
            }
            for n, op in ops.items()
        }
    return record


def record_to_result(record: dict) -> OptimizationResult:
    if record.get("format") != RECORD_FORMAT:
        raise ValueError(f"not a {RECORD_FORMAT} record")
    res = record["result"]
    params = record["params"]
    return OptimizationResult(
        gate=res["gate"],
        n_anc=int(res["n_anc"]),
        m_anc=int(res["m_anc"]),
        projector=parse_occupation(res["projector"]),
        theta=np.array(params["theta"], dtype=float),
        ancilla_raw=np.array(params["ancilla_raw"], dtype=float),
        fidelities={int(k): float(v) for k, v in res["fidelities"].items()},
        successes={int(k): float(v) for k, v in res["successes"].items()},
        merit=float(res["merit"]),
        epsilon=float(res["epsilon"]),
        seed=int(res["seed"]),
        restarts=int(res["restarts"]),
        iterations=int(res["iterations"]),
        wall_time=float(record.get("run", {}).get("wall_time", 0.0)),
        restart_index=int(res.get("restart_index", -1)),
        exact=bool(res["exact"]),
        message=res.get("message", ""),
    )


def stable_view(record: dict) -> dict:
    return {k: v for k, v in record.items() if k not in VOLATILE_KEYS}


def dumps_record(record: dict) -> str:
    # float repr is the shortest string that round-trips the double exactly
    return json.dumps(record, indent=1, sort_keys=True, allow_nan=False) + "\n"


def write_record(path, record: dict) -> None:
    Path(path).write_text(dumps_record(record))


def read_record(path) -> dict:
    try:
        record = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"corrupt record {path}: {exc}") from exc
    if not isinstance(record, dict) or record.get("format") != RECORD_FORMAT:
        raise ValueError(f"{path} is not a {RECORD_FORMAT} record")
    return record


def stored_unitary(record: dict) -> np.ndarray:
    u = record["unitary"]
    n = int(u["n_modes"])
    return from_pairs(u["entries"], (n, n))


def stored_ancilla(record: dict) -> np.ndarray:
    res = record["result"]
    basis = enumerate_basis(int(res["n_anc"]), int(res["m_anc"]))
    labels = [parse_occupation(s) for s in record["ancilla_state"]["basis"]]
    if labels != list(basis.states):
        raise ValueError("ancilla basis in record does not match (N_a, M_a)")
    return from_pairs(record["ancilla_state"]["amplitudes"])


def fmt_float(x: float) -> str:
    return format(float(x), ".17g")


def figure_rows(sub_ops: Sequence[str], q_values: Iterable[int], per_application: dict[str, float]):
    q_values = list(q_values)
    for op in sub_ops:
        for q in q_values:
            if q < MIN_Q[op]:
                continue
            s = per_application[op]
            yield (op, q, schedule_count(q, op), s, block_cnot_probability(q, op, s))


def figure_csv(sub_ops: Sequence[str], q_values: Iterable[int], per_application: dict[str, float]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(FIGURE_COLUMNS)
    for op, q, count, s, p in figure_rows(sub_ops, q_values, per_application):
        writer.writerow([op, q, count, fmt_float(s), fmt_float(p)])
    return buf.getvalue()

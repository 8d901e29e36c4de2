"""Acceptance criteria 1 to 11, each reported as a PASS/FAIL line.

Criteria 2 and 3 (C2/C3 recovery, tens of minutes each) run when ``PHOTONFORGE_EXTENDED=1``.
Criterion 4 (C4 recovery, hours) additionally needs ``PHOTONFORGE_RELEASE=1``.
"""

import csv
import io
import itertools
import os
from pathlib import Path

import numpy as np
import pytest

from conftest import random_unitary
from photonforge.cli import main, verify_record
from photonforge.fock_basis import enumerate_basis
from photonforge.gates import MIN_Q, REPORTED_SUCCESS, SUB_OPS, schedule_count, verify_schedule
from photonforge.kraus import success
from photonforge.optim import FIDELITY_TOL, subspace_operators
from photonforge.oracle import symbolic_apply
from photonforge.records import dumps_record, read_record, record_to_result, stable_view
from photonforge.transfer import compose_circuit, render_transfer

EXTENDED = os.environ.get("PHOTONFORGE_EXTENDED") == "1"
RELEASE = os.environ.get("PHOTONFORGE_RELEASE") == "1"

# (gate, N_a, M_a, projector, restarts, reported S)
RECOVERY = {
    "c2": ("c2", 3, 4, "1,1,1,0", 40, 0.0221391),
    "c3": ("c3", 3, 4, "1,1,1,0", 40, 0.0221266),
    "c4": ("c4", 4, 4, "1,1,1,1", 40, 0.00691511),
}

# records emitted during the session; criteria 10 and 11 inspect all of them
EMITTED: list[Path] = []


@pytest.fixture(scope="module")
def outdir(tmp_path_factory):
    keep = os.environ.get("PHOTONFORGE_ACCEPTANCE_DIR")
    if keep:
        Path(keep).mkdir(parents=True, exist_ok=True)
        return Path(keep)
    return tmp_path_factory.mktemp("acceptance")


def run_optimize(path: Path, *argv: str) -> tuple[int, dict]:
    code = main(["optimize", *argv, "--out", str(path)])
    EMITTED.append(path)
    return code, read_record(path)


def recovery_check(report, number, outdir, key, tol):
    gate, na, ma, proj, restarts, reported = RECOVERY[key]
    code, record = run_optimize(
        outdir / f"{gate}.result", "--gate", gate, "--na", str(na), "--ma", str(ma),
        "--projector", proj, "--restarts", str(restarts), "--seed", "0",
    )
    res = record["result"]
    min_f = min(res["fidelities"].values())
    ok = code == 0 and min_f >= 1 - FIDELITY_TOL and abs(res["success"] - reported) <= tol
    ok &= res["projector"] == proj
    detail = f"S={res['success']:.7f} vs {reported}, min F={min_f:.10f}, projector {res['projector']}, {res['message']}"
    assert report(number, f"{gate.upper()} recovery", ok, detail)


def test_criterion_01_klm_recovery(report, outdir):
    code, record = run_optimize(
        outdir / "c1.result", "--gate", "c1", "--na", "2", "--ma", "2",
        "--restarts", "50", "--seed", "7", "--eps", "0.1,1.0", "--q", "2",
    )
    res = record["result"]
    min_f = min(res["fidelities"].values())
    ok = (
        code == 0
        and min_f >= 1 - 1e-4
        and abs(res["success"] - 2 / 27) <= 1e-4
        and res["projector"] == "1,1"
    )
    detail = f"S={res['success']:.9f} vs 2/27={2 / 27:.9f}, min F={min_f:.12f}, projector {res['projector']}"
    assert report(1, "KLM recovery (C1)", ok, detail)


@pytest.mark.extended
@pytest.mark.skipif(not EXTENDED, reason="extended run: set PHOTONFORGE_EXTENDED=1")
def test_criterion_02_c2_recovery(report, outdir):
    recovery_check(report, 2, outdir, "c2", 1e-3)


@pytest.mark.extended
@pytest.mark.skipif(not EXTENDED, reason="extended run: set PHOTONFORGE_EXTENDED=1")
def test_criterion_03_c3_recovery(report, outdir):
    recovery_check(report, 3, outdir, "c3", 1e-3)


@pytest.mark.extended
@pytest.mark.skipif(not (EXTENDED and RELEASE), reason="release run: set PHOTONFORGE_EXTENDED=1 PHOTONFORGE_RELEASE=1")
def test_criterion_04_c4_recovery(report, outdir):
    recovery_check(report, 4, outdir, "c4", 1e-3)


def test_criterion_05_twenty_fold(report):
    ratio = REPORTED_SUCCESS["c4"] / (2 / 27) ** 3
    assert report(5, "twenty-fold comparison", abs(ratio - 17.0) <= 0.1, f"ratio={ratio:.4f}")


def test_criterion_06_figure(report, outdir, capsys):
    path = outdir / "fig2.csv"
    code = main(["figure", "--sub-ops", "c1,c2,c3,c4", "--q", "1..4", "--paper-constants", "--out", str(path)])
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    expected = [(op, q) for op in SUB_OPS for q in range(1, 5) if q >= MIN_Q[op]]
    ok = code == 0 and [(r["sub_op"], int(r["q"])) for r in rows] == expected
    for r in rows:
        op, q = r["sub_op"], int(r["q"])
        ok &= int(r["applications"]) == schedule_count(q, op)
        ok &= float(r["p"]) == REPORTED_SUCCESS[op] ** schedule_count(q, op)
    spot = {(r["sub_op"], int(r["q"])): float(r["p"]) for r in rows}
    ok &= spot[("c1", 2)] == (2 / 27) ** 4
    ok &= spot[("c4", 2)] == 0.00691511
    detail = f"{len(rows)} rows, p(C1,2)={spot[('c1', 2)]:.6g}, p(C4,2)={spot[('c4', 2)]}"
    assert report(6, "figure reproduction", ok, detail)


def oracle_pairs():
    return [(n, m) for m in range(1, 11) for n in range(0, 9) if m**n <= 10**5]


def test_criterion_07_oracle_equivalence(report):
    rng = np.random.default_rng(2024)
    pairs = oracle_pairs()
    worst = 0.0
    for k in range(100):
        n, m = pairs[k % len(pairs)]
        u = random_unitary(m, 1000 + k)
        basis = enumerate_basis(n, m)
        if len(basis) <= 10:
            columns = list(basis.states)
        else:
            columns = [basis.states[i] for i in rng.choice(len(basis), 4, replace=False)]
        rendered = render_transfer(u, enumerate_basis(n, m, keep=lambda s: s in columns), basis)
        for j, state in enumerate(rendered.input_basis):
            expected = symbolic_apply(u, state).amplitudes
            worst = max(worst, float(np.max(np.abs(rendered.matrix[:, j] - expected))))
    ok = worst <= 1e-9
    assert report(7, "oracle equivalence", ok, f"100 instances over {len(pairs)} (N, M) pairs, max dev {worst:.2e}")


def test_criterion_08_homomorphism(report):
    worst = 0.0
    count = 0
    for n, m in itertools.product(range(0, 4), range(1, 6)):
        for seed in range(3):
            u1, u2 = random_unitary(m, 10 * seed + 1), random_unitary(m, 10 * seed + 2)
            basis = enumerate_basis(n, m)
            lhs = render_transfer(compose_circuit([u1, u2]), basis, basis).matrix
            rhs = render_transfer(u2, basis, basis).matrix @ render_transfer(u1, basis, basis).matrix
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
            count += 1
    assert report(8, "homomorphism", worst <= 1e-9, f"{count} instances, max dev {worst:.2e}")


def test_criterion_09_schedules(report):
    cases = [(op, q) for op in SUB_OPS for q in range(1, 4) if q >= MIN_Q[op]]
    failed = [c for c in cases if not verify_schedule(c[1], c[0])]
    assert report(9, "schedule correctness", not failed, f"{len(cases) - len(failed)}/{len(cases)} (sub_op, q) pairs")


def test_criterion_10_isometry(report):
    exact = [record_to_result(read_record(p)) for p in EMITTED]
    exact = [r for r in exact if r.exact]
    worst = 0.0
    for result in exact:
        for e in subspace_operators(result.params, result.problem()).values():
            gram = e.matrix.conj().T @ e.matrix
            worst = max(worst, float(np.max(np.abs(gram - success(e) * np.eye(len(gram))))))
    ok = bool(exact) and worst <= 1e-3
    names = ",".join(r.gate.upper() for r in exact)
    assert report(10, "isometry proportionality", ok, f"{len(exact)} exact solutions ({names}), max dev {worst:.2e}")


def test_criterion_11_determinism(report, outdir, capsys):
    argv = ["--gate", "c1", "--na", "2", "--ma", "2", "--projector", "1,1", "--restarts", "3", "--seed", "3"]
    _, first = run_optimize(outdir / "det_a.result", *argv)
    _, second = run_optimize(outdir / "det_b.result", *argv)
    identical = dumps_record(stable_view(first)) == dumps_record(stable_view(second))
    verdicts = [verify_record(read_record(p))[0] for p in EMITTED]
    ok = identical and all(verdicts)
    detail = f"records identical: {identical}, verify passed on {sum(verdicts)}/{len(verdicts)} records"
    assert report(11, "determinism", ok, detail)

"""``photonforge`` command-line front end."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import gates
from .fock_basis import enumerate_basis, format_occupation, hilbert_dim, parse_occupation
from .gates import REPORTED_SUCCESS, SUB_OPS, builtin_table, check_sub_op, schedule_matches
from .oracle import symbolic_apply
from .optim import DIM_GUARD, EXPLORE_EPS, ProblemSpec, optimize, sweep
from .records import (
    figure_csv,
    fmt_float,
    read_record,
    record_to_result,
    result_to_record,
    stable_view,
    stored_ancilla,
    stored_unitary,
    write_record,
)
from .transfer import check_unitary, render_transfer

log = logging.getLogger("photonforge")

EXIT_OK = 0
EXIT_NOT_EXACT = 1
EXIT_CONFIG = 2
EXIT_GUARD = 3
VERIFY_TOL = 1e-10


class ConfigError(Exception):
    pass


class GuardError(Exception):
    pass


def parse_int_range(text: str) -> list[int]:
    """``"1..4"`` (inclusive), ``"1,3"`` or ``"2"``; an empty string is an empty range."""
    text = text.strip()
    if not text:
        return []
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return list(range(int(lo), int(hi) + 1))
        return [int(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad integer range {text!r}") from exc


def parse_floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    try:
        return [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def load_config(path: str | None) -> dict:
    """Flat ``key: value`` YAML file; keys mirror the long option names."""
    if not path:
        return {}
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict) or any(isinstance(v, dict) for v in data.values()):
        raise ConfigError(f"config {path} must be a flat key-value mapping")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def merged(args: argparse.Namespace, defaults: dict) -> dict:
    """Command-line values override the config file, which overrides defaults."""
    cfg = dict(defaults)
    cfg.update(load_config(getattr(args, "config", None)))
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg


def _unitary_from_args(args) -> np.ndarray:
    if args.unitary:
        import json

        data = json.loads(Path(args.unitary).read_text())
        n = int(data["n_modes"])
        entries = np.array([complex(re, im) for re, im in data["entries"]], dtype=complex)
        return check_unitary(entries.reshape(n, n))
    from scipy.stats import unitary_group

    return unitary_group.rvs(args.modes, random_state=args.seed)


# ---------------------------------------------------------------------------
# subcommands


def cmd_basis(args) -> int:
    dim = hilbert_dim(args.photons, args.modes)
    for state in enumerate_basis(args.photons, args.modes):
        print(format_occupation(state))
    print(f"hilbert_dim(N={args.photons}, M={args.modes}) = {dim}", file=sys.stderr)
    return EXIT_OK


def cmd_render(args) -> int:
    u = _unitary_from_args(args)
    m = u.shape[0]
    if args.inputs:
        states = [parse_occupation(s) for s in args.inputs.split(";")]
        inputs = enumerate_basis(args.photons, m, keep=lambda s: s in states)
    else:
        inputs = enumerate_basis(args.photons, m)
    outputs = enumerate_basis(args.photons, m)
    op = render_transfer(u, inputs, outputs, workers=args.jobs)
    print("output,input,re,im")
    for i, s_out in enumerate(outputs):
        for j, s_in in enumerate(inputs):
            z = op.matrix[i, j]
            print(f'"{format_occupation(s_out)}","{format_occupation(s_in)}",{fmt_float(z.real)},{fmt_float(z.imag)}')
    return EXIT_OK


def cmd_oracle(args) -> int:
    u = _unitary_from_args(args)
    state = symbolic_apply(u, parse_occupation(args.state))
    print("output,re,im")
    for s, z in zip(state.basis, state.amplitudes):
        print(f'"{format_occupation(s)}",{fmt_float(z.real)},{fmt_float(z.imag)}')
    return EXIT_OK


OPTIMIZE_DEFAULTS = {
    "gate": "c1",
    "na": 2,
    "ma": 2,
    "projector": None,
    "eps": list(EXPLORE_EPS),
    "restarts": 50,
    "seed": 0,
    "jobs": 1,
    "dim_guard": DIM_GUARD,
    "q": None,
    "out": None,
}


def _problem(cfg: dict) -> ProblemSpec:
    try:
        gate = builtin_table(check_sub_op(str(cfg["gate"])))
        projectors = ()
        if cfg.get("projector"):
            proj = cfg["projector"]
            items = proj if isinstance(proj, list) else str(proj).split(";")
            projectors = tuple(parse_occupation(str(p)) for p in items)
        eps = parse_floats(cfg["eps"])
        if not eps or any(e < 0 for e in eps):
            raise ConfigError("--eps needs non-negative weights")
        spec = ProblemSpec(gate, int(cfg["na"]), int(cfg["ma"]), projectors, epsilon=eps[0])
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    if spec.joint_dim() > int(cfg["dim_guard"]):
        raise GuardError(
            f"joint Fock dimension {spec.joint_dim()} exceeds guard {cfg['dim_guard']}"
        )
    return spec


def _config_echo(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in ("out", "jobs", "config")}


def cmd_optimize(args) -> int:
    cfg = merged(args, OPTIMIZE_DEFAULTS)
    spec = _problem(cfg)
    if int(cfg["restarts"]) < 1:
        raise ConfigError("--restarts must be >= 1")
    cfg["eps"] = parse_floats(cfg["eps"])
    result = optimize(
        spec, int(cfg["restarts"]), int(cfg["seed"]), explore_eps=cfg["eps"], jobs=int(cfg["jobs"])
    )
    record = result_to_record(result, _config_echo(cfg), verify_q=cfg.get("q"))
    if cfg.get("out"):
        try:
            write_record(cfg["out"], record)
        except OSError as exc:
            raise ConfigError(f"cannot write {cfg['out']}: {exc}") from exc
    fids = " ".join(f"F{n}={fmt_float(f)}" for n, f in result.fidelities.items())
    succ = " ".join(f"S{n}={fmt_float(s)}" for n, s in result.successes.items())
    print(f"gate={result.gate} N_a={result.n_anc} M_a={result.m_anc} projector={format_occupation(result.projector)}")
    print(fids)
    print(succ)
    print(f"success={fmt_float(result.success)} ({result.message})")
    return EXIT_OK if result.exact else EXIT_NOT_EXACT


SWEEP_DEFAULTS = {
    "gate": "c1",
    "na": "1..2",
    "ma": "1..2",
    "eps": list(EXPLORE_EPS),
    "restarts": 10,
    "seed": 0,
    "jobs": 1,
    "dim_guard": DIM_GUARD,
    "out": None,
    "records": None,
}


def cmd_sweep(args) -> int:
    cfg = merged(args, SWEEP_DEFAULTS)
    try:
        gate = builtin_table(check_sub_op(str(cfg["gate"])))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    eps = parse_floats(cfg["eps"])
    if not eps:
        raise ConfigError("--eps needs at least one weight")
    results = sweep(
        gate,
        parse_int_range(str(cfg["na"])),
        parse_int_range(str(cfg["ma"])),
        eps,
        int(cfg["restarts"]),
        int(cfg["seed"]),
        dim_guard=int(cfg["dim_guard"]),
        jobs=int(cfg["jobs"]),
    )
    lines = ["gate,n_anc,m_anc,projector,exact,min_fidelity,success"]
    for r in results:
        lines.append(
            f'{r.gate},{r.n_anc},{r.m_anc},"{format_occupation(r.projector)}",{int(r.exact)},'
            f"{fmt_float(r.min_fidelity)},{fmt_float(r.success)}"
        )
    text = "\n".join(lines) + "\n"
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    if cfg.get("records"):
        outdir = Path(cfg["records"])
        outdir.mkdir(parents=True, exist_ok=True)
        for r in results:
            name = f"{r.gate}_na{r.n_anc}_ma{r.m_anc}.result"
            write_record(outdir / name, result_to_record(r, _config_echo(cfg)))
    return EXIT_OK if results and results[0].exact else EXIT_NOT_EXACT


def cmd_figure(args) -> int:
    sub_ops = [check_sub_op(s) for s in args.sub_ops.split(",") if s.strip()]
    q_values = parse_int_range(args.q)
    if args.reported:
        per_app = dict(REPORTED_SUCCESS)
    else:
        if not args.records:
            raise ConfigError("figure needs --records files or --reported")
        per_app = {}
        for path in args.records:
            res = record_to_result(read_record(path))
            if res.exact and res.success > per_app.get(res.gate, -1.0):
                per_app[res.gate] = res.success
        missing = [op for op in sub_ops if op not in per_app]
        if missing:
            raise ConfigError(f"no exact record for sub-operation(s) {', '.join(missing)}")
    text = figure_csv(sub_ops, q_values, per_app)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def verify_record(record: dict) -> tuple[bool, list[str]]:
    """Recompute fidelities and successes of a stored solution from its circuit and ancilla."""
    from .kraus import AncillaSpec, ProjectorSpec, assemble_paula, fidelity, success
    from .fock_basis import StateVector
    from .gates import targets_from_table

    result = record_to_result(record)
    lines = []
    deviations = {}
    params = result.params
    u_stored = stored_unitary(record)
    psi_stored = stored_ancilla(record)
    deviations["unitary vs theta"] = float(np.max(np.abs(u_stored - params.unitary())))
    from .optim import realize_ancilla

    anc = realize_ancilla(params.ancilla_raw, result.n_anc, result.m_anc)
    deviations["ancilla vs raw"] = float(np.max(np.abs(psi_stored - anc.state.amplitudes)))
    try:
        u = check_unitary(u_stored)
        anc_stored = AncillaSpec(result.n_anc, result.m_anc, StateVector(anc.state.basis, psi_stored))
    except ValueError as exc:
        lines.append(f"stored circuit/ancilla invalid: {exc}")
        u, anc_stored = params.unitary(), anc
        deviations["validity"] = float("inf")
    gate = builtin_table(result.gate)
    proj = ProjectorSpec(result.projector)
    for n_c in sorted(result.fidelities):
        inputs, outputs, target = targets_from_table(gate, n_c)
        e = assemble_paula(u, anc_stored, proj, inputs, outputs)
        f, s = fidelity(e, target), success(e)
        deviations[f"F{n_c}"] = abs(f - result.fidelities[n_c])
        deviations[f"S{n_c}"] = abs(s - result.successes[n_c])
        lines.append(f"N_c={n_c}: F={fmt_float(f)} S={fmt_float(s)}")
    worst_key = max(deviations, key=deviations.get)
    ok = deviations[worst_key] <= VERIFY_TOL
    lines.append(f"max deviation {deviations[worst_key]:.3e} ({worst_key}), tolerance {VERIFY_TOL:g}")
    q = record.get("verify_q")
    if q is not None:
        good, total = schedule_matches(int(q), result.gate)
        last = 2 * int(q)
        if good == total:
            lines.append(f"schedule verified: CNOT_1,{last} reproduced on {good}/{total} states")
        else:
            lines.append(f"schedule FAILED: CNOT_1,{last} reproduced on {good}/{total} states")
            ok = False
    return ok, lines


def cmd_verify(args) -> int:
    all_ok = True
    for path in args.records:
        try:
            record = read_record(path)
            ok, lines = verify_record(record)
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"corrupt record {path}: {exc}") from exc
        for line in lines:
            print(f"{path}: {line}")
        print(f"{path}: {'PASS' if ok else 'FAIL'}")
        all_ok &= ok
    return EXIT_OK if all_ok else EXIT_NOT_EXACT


def cmd_table(args) -> int:
    sys.stdout.write(builtin_table(args.gate).to_csv())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="photonforge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("basis", help="list a Fock basis in canonical order")
    p.add_argument("photons", type=int)
    p.add_argument("modes", type=int)
    p.set_defaults(func=cmd_basis)

    for name, func, helptext in (
        ("render", cmd_render, "print a rendered transfer matrix as CSV"),
        ("oracle", cmd_oracle, argparse.SUPPRESS),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--unitary", help="JSON file with n_modes and row-major [re, im] entries")
        p.add_argument("--modes", type=int, default=2, help="random unitary size (no --unitary)")
        p.add_argument("--seed", type=int, default=0)
        if name == "render":
            p.add_argument("--photons", type=int, required=True)
            p.add_argument("--inputs", help="';'-separated input states, default full basis")
            p.add_argument("--jobs", type=int, default=1)
        else:
            p.add_argument("--state", required=True, help="input occupation, e.g. 1,1")
        p.set_defaults(func=func)

    p = sub.add_parser("optimize", help="search a heralded circuit for one sub-operation")
    p.add_argument("--config")
    p.add_argument("--gate", choices=SUB_OPS)
    p.add_argument("--na", type=int)
    p.add_argument("--ma", type=int)
    p.add_argument("--projector", help="';'-separated outcomes, default all Fock outcomes")
    p.add_argument("--eps", help="comma-separated exploration weights")
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--dim-guard", type=int)
    p.add_argument("--q", type=int, help="block size whose CNOT schedule verify should check")
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="optimize over a grid of ancilla sizes")
    p.add_argument("--config")
    p.add_argument("--gate", choices=SUB_OPS)
    p.add_argument("--na", help="photon range, e.g. 1..2")
    p.add_argument("--ma", help="mode range, e.g. 1..2")
    p.add_argument("--eps")
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--dim-guard", type=int)
    p.add_argument("--out")
    p.add_argument("--records", help="directory for one result record per configuration")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="CNOT success probability versus block size as CSV")
    p.add_argument("--sub-ops", default=",".join(SUB_OPS))
    p.add_argument("--q", default="1..4")
    p.add_argument(
        "--reported", "--paper-constants", dest="reported", action="store_true",
        help="use the published per-application success values",
    )
    p.add_argument("--records", nargs="*", default=[])
    p.add_argument("--out")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("verify", help="recompute a result record")
    p.add_argument("records", nargs="+")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("table", help="print a gate table as CSV")
    p.add_argument("gate", choices=SUB_OPS)
    p.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

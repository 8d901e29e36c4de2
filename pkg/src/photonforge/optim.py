"""Search for heralded linear-optical circuits realizing a gate table.

The circuit ``U = exp(iH)`` and the ancilla state are optimized jointly so that, for every
computational photon number ``N_c`` of the table, the heralded operator ``E_{N_c}`` is
proportional to the target ``T_{N_c}`` (fidelity 1) with the largest possible success
probability.  The objective is

    f(U, ψ_a) = Σ_{N_c} [F(E_{N_c}, T_{N_c}) + ε S(E_{N_c})].

Every restart explores at one weight ε and is then annealed through a decreasing sequence
of weights, which pushes the fidelities onto 1 while success climbs to the constrained
optimum.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize

from .fock_basis import StateVector, enumerate_basis, hilbert_dim
from .gates import GateTable, builtin_table, targets_from_table
from .kraus import AncillaSpec, KrausOperator, ProjectorSpec, assemble_paula, fidelity, success

log = logging.getLogger(__name__)

FIDELITY_TOL = 1e-4
# heralding probability below which a fidelity-1 operator is treated as a vanishing solution
SUCCESS_FLOOR = 1e-6
EXPLORE_EPS = (0.1, 1.0)
POLISH_EPS = (1e-2, 1e-3, 1e-4, 1e-5)
DIM_GUARD = 10**4


# ---------------------------------------------------------------------------
# parametrization


def hermitian_from_theta(theta: np.ndarray, n_modes: int) -> np.ndarray:
    """Hermitian generator: ``theta`` holds the diagonal, then the real and imaginary parts
    of the strict upper triangle (row-major)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (n_modes * n_modes,):
        raise ValueError(f"expected {n_modes * n_modes} generator parameters, got {theta.shape}")
    iu = np.triu_indices(n_modes, 1)
    k = len(iu[0])
    h = np.diag(theta[:n_modes]).astype(complex)
    h[iu] = theta[n_modes : n_modes + k] + 1j * theta[n_modes + k :]
    h[iu[1], iu[0]] = np.conj(h[iu])
    return h


def _expm_eig(theta: np.ndarray, n_modes: int):
    evals, evecs = np.linalg.eigh(hermitian_from_theta(theta, n_modes))
    phases = np.exp(1j * evals)
    u = (evecs * phases) @ evecs.conj().T
    return u, evals, evecs


def realize_unitary(theta, n_modes: int) -> np.ndarray:
    """Mode unitary ``exp(iH)`` for generator parameters ``theta``."""
    return _expm_eig(np.asarray(theta, dtype=float), n_modes)[0]


def _theta_grad(gu: np.ndarray, evals: np.ndarray, evecs: np.ndarray) -> np.ndarray:
    """Pull a conjugate gradient w.r.t. ``U`` back to the generator parameters."""
    n = len(evals)
    diff = evals[:, None] - evals[None, :]
    mean = 0.5 * (evals[:, None] + evals[None, :])
    # divided differences of exp(iλ), stable for degenerate eigenvalues
    kernel = 1j * np.exp(1j * mean) * np.sinc(diff / (2 * np.pi))
    gh = evecs @ ((evecs.conj().T @ gu @ evecs) * np.conj(kernel)) @ evecs.conj().T
    iu = np.triu_indices(n, 1)
    lower = (iu[1], iu[0])
    return np.concatenate(
        [
            np.real(np.diag(gh)),
            np.real(gh[iu] + gh[lower]),
            np.imag(gh[iu]) - np.imag(gh[lower]),
        ]
    )


def _normalize(raw: np.ndarray, dim: int) -> np.ndarray:
    z = raw[:dim] + 1j * raw[dim:]
    nrm = np.linalg.norm(z)
    if nrm < 1e-300:
        z = np.zeros(dim, dtype=complex)
        z[0] = 1.0
        return z
    return z / nrm


def realize_ancilla(raw, n_photons: int, n_modes: int) -> AncillaSpec:
    """Normalized ancilla state from ``2 * d_a`` reals (real parts, then imaginary parts).

    The all-zero vector maps to the first canonical basis state.
    """
    basis = enumerate_basis(n_photons, n_modes)
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (2 * len(basis),):
        raise ValueError(f"expected {2 * len(basis)} ancilla parameters, got {raw.shape}")
    return AncillaSpec(n_photons, n_modes, StateVector(basis, _normalize(raw, len(basis))))


@dataclass(frozen=True)
class Params:
    """Optimization variables: generator parameters of ``U`` and raw ancilla amplitudes."""

    theta: np.ndarray
    ancilla_raw: np.ndarray

    @property
    def n_modes(self) -> int:
        return math.isqrt(len(self.theta))

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.theta, self.ancilla_raw])

    @classmethod
    def from_vector(cls, x, n_modes: int) -> "Params":
        x = np.asarray(x, dtype=float)
        return cls(x[: n_modes * n_modes].copy(), x[n_modes * n_modes :].copy())

    def unitary(self) -> np.ndarray:
        return realize_unitary(self.theta, self.n_modes)


# ---------------------------------------------------------------------------
# problem definition


@dataclass(frozen=True)
class ProblemSpec:
    gate: GateTable
    n_anc: int
    m_anc: int
    projectors: tuple[ProjectorSpec, ...] = ()
    epsilon: float = 0.1
    subspaces: tuple[int, ...] = ()

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.n_anc < 0 or self.m_anc < 0 or (self.n_anc > 0 and self.m_anc == 0):
            raise ValueError(f"invalid ancilla resources N_a={self.n_anc}, M_a={self.m_anc}")
        projectors = tuple(
            p if isinstance(p, ProjectorSpec) else ProjectorSpec(tuple(p)) for p in self.projectors
        )
        if not projectors:
            projectors = tuple(ProjectorSpec(s) for s in enumerate_basis(self.n_anc, self.m_anc))
        for p in projectors:
            if p.n_modes != self.m_anc or p.n_photons != self.n_anc:
                raise ValueError(
                    f"projector {p.outcome} does not match N_a={self.n_anc}, M_a={self.m_anc}"
                )
        object.__setattr__(self, "projectors", projectors)
        if not self.subspaces:
            object.__setattr__(self, "subspaces", self.gate.photon_numbers)

    @property
    def n_modes(self) -> int:
        return self.m_anc + self.gate.mode_count

    @property
    def ancilla_dim(self) -> int:
        return len(enumerate_basis(self.n_anc, self.m_anc))

    @property
    def n_params(self) -> int:
        return self.n_modes**2 + 2 * self.ancilla_dim

    def joint_dim(self) -> int:
        return hilbert_dim(self.n_anc + max(self.subspaces), self.n_modes)


class _Subspace:
    """Heralded operator of one computational photon number, in Ryser-factored form.

    With the output columns ``b = (n_a, out)`` fixed, Ryser's formula writes the amplitude as
    Σ_s w_s Π_r x_r(s)^{a_r} with ``x(s) = U s``.  The row exponents ``a`` split into the
    ancilla part (contracted with ψ_a once per ``s``) and the computational input part.
    """

    def __init__(self, gate: GateTable, n_c: int, n_anc: int, m_anc: int, outcome: tuple[int, ...]):
        self.n_c = n_c
        self.input_basis, self.output_basis, self.target = targets_from_table(gate, n_c)
        self.d_c = len(self.input_basis)
        self.m_anc = m_anc
        anc = enumerate_basis(n_anc, m_anc)
        self.anc_exp = anc.as_array()
        self.anc_norm = np.array([1 / _sqrt_fact(k) for k in anc])
        self.in_exp = self.input_basis.as_array()
        self.in_norm = np.array([1 / _sqrt_fact(k) for k in self.input_basis])
        n_total = n_anc + n_c
        svecs, weights, starts, onorm = [], [], [], []
        for out in self.output_basis:
            cols = tuple(outcome) + tuple(out)
            starts.append(len(svecs))
            onorm.append(1 / _sqrt_fact(cols))
            for s in product(*(range(b + 1) for b in cols)):
                sign = -1.0 if (n_total - sum(s)) % 2 else 1.0
                weights.append(sign * math.prod(math.comb(b, k) for b, k in zip(cols, s)))
                svecs.append(s)
        self.svecs = np.array(svecs, dtype=float).reshape(len(svecs), m_anc + gate.mode_count)
        self.weights = np.array(weights)
        self.starts = np.array(starts)
        self.group = np.repeat(np.arange(len(starts)), np.diff(np.append(starts, len(svecs))))
        self.out_norm = np.array(onorm)
        self.max_pow = max(n_anc, n_c)

    def _powers(self, x: np.ndarray) -> np.ndarray:
        pw = np.empty((self.max_pow + 1,) + x.shape, dtype=complex)
        pw[0] = 1.0
        for k in range(1, self.max_pow + 1):
            pw[k] = pw[k - 1] * x
        return pw

    @staticmethod
    def _factors(pw: np.ndarray, exps: np.ndarray) -> np.ndarray:
        ns, m = pw.shape[1], pw.shape[2]
        return pw[exps[None, :, :], np.arange(ns)[:, None, None], np.arange(m)[None, None, :]]

    @staticmethod
    def _monomial_grad(pw, exps, factors, g):
        ns, m = pw.shape[1], pw.shape[2]
        gx = np.zeros((ns, m), dtype=complex)
        for r in range(m):
            others = np.prod(np.delete(factors, r, axis=2), axis=2)
            lowered = pw[np.maximum(exps[:, r] - 1, 0)[None, :], np.arange(ns)[:, None], r]
            gx[:, r] = np.sum(g * np.conj(others * exps[:, r] * lowered), axis=1)
        return gx

    def forward(self, u: np.ndarray, psi: np.ndarray, keep: bool = False):
        x = self.svecs @ u.T
        pw = self._powers(x)
        ma = self.m_anc
        fa = self._factors(pw[:, :, :ma], self.anc_exp)
        mono_a = fa.prod(axis=2)
        v = psi * self.anc_norm
        p = mono_a @ v
        fc = self._factors(pw[:, :, ma:], self.in_exp)
        q = fc.prod(axis=2) * self.in_norm
        terms = (self.weights * p)[:, None] * q
        e = np.add.reduceat(terms, self.starts, axis=0) * self.out_norm[:, None]
        if not keep:
            return e
        return e, (pw, fa, fc, mono_a, v, p, q)

    def backward(self, ge: np.ndarray, cache) -> tuple[np.ndarray, np.ndarray]:
        """Conjugate gradients w.r.t. ``U`` and ψ_a given the one w.r.t. ``E``."""
        pw, fa, fc, mono_a, v, p, q = cache
        ma = self.m_anc
        gb = (self.out_norm[:, None] * ge)[self.group] * self.weights[:, None]
        gp = np.sum(gb * np.conj(q), axis=1)
        gq = gb * np.conj(p)[:, None]
        gpsi = (mono_a.conj().T @ gp) * self.anc_norm
        g_mono_a = gp[:, None] * np.conj(v)[None, :]
        gx = np.concatenate(
            [
                self._monomial_grad(pw[:, :, :ma], self.anc_exp, fa, g_mono_a),
                self._monomial_grad(pw[:, :, ma:], self.in_exp, fc, gq * self.in_norm),
            ],
            axis=1,
        )
        return gx.T @ self.svecs, gpsi


def _sqrt_fact(occ) -> float:
    return math.sqrt(math.prod(math.factorial(int(k)) for k in occ))


class CompiledProblem:
    """Merit function and its analytic gradient for one fixed projector outcome."""

    def __init__(self, spec: ProblemSpec, projector: ProjectorSpec):
        self.spec = spec
        self.projector = projector
        self.n_modes = spec.n_modes
        self.d_anc = spec.ancilla_dim
        self.subspaces = [
            _Subspace(spec.gate, n_c, spec.n_anc, spec.m_anc, projector.outcome)
            for n_c in spec.subspaces
        ]

    def split(self, x: np.ndarray):
        m2 = self.n_modes**2
        return x[:m2], x[m2:]

    def operators(self, x: np.ndarray) -> list[np.ndarray]:
        theta, raw = self.split(np.asarray(x, dtype=float))
        u = realize_unitary(theta, self.n_modes)
        psi = _normalize(raw, self.d_anc)
        return [sub.forward(u, psi) for sub in self.subspaces]

    def scores(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ops = self.operators(x)
        fids = np.array([fidelity(e, sub.target) for e, sub in zip(ops, self.subspaces)])
        succ = np.array([success(e) for e in ops])
        return fids, succ

    def merit(self, x: np.ndarray, epsilon: float) -> float:
        fids, succ = self.scores(x)
        return float(np.sum(fids + epsilon * succ))

    def merit_and_grad(self, x: np.ndarray, epsilon: float) -> tuple[float, np.ndarray]:
        x = np.asarray(x, dtype=float)
        theta, raw = self.split(x)
        u, evals, evecs = _expm_eig(theta, self.n_modes)
        z = raw[: self.d_anc] + 1j * raw[self.d_anc :]
        znorm = np.linalg.norm(z)
        degenerate = znorm < 1e-300
        psi = _normalize(raw, self.d_anc)
        total = 0.0
        gu = np.zeros_like(u)
        gpsi = np.zeros(self.d_anc, dtype=complex)
        for sub in self.subspaces:
            e, cache = sub.forward(u, psi, keep=True)
            t = float(np.vdot(e, e).real)
            d_c = sub.d_c
            ge = epsilon * 2 * e / d_c
            total += epsilon * t / d_c
            if t >= 1e-300:
                root = math.sqrt(d_c * t)
                fid = float(np.vdot(e, sub.target).real) / root
                total += fid
                ge = ge + sub.target / root - fid * e / t
            gu_s, gpsi_s = sub.backward(ge, cache)
            gu += gu_s
            gpsi += gpsi_s
        g_theta = _theta_grad(gu, evals, evecs)
        if degenerate:
            g_raw = np.zeros(2 * self.d_anc)
        else:
            gz = (gpsi - psi * np.real(np.vdot(psi, gpsi))) / znorm
            g_raw = np.concatenate([gz.real, gz.imag])
        return total, np.concatenate([g_theta, g_raw])


# ---------------------------------------------------------------------------
# public evaluation API


def _projector(spec: ProblemSpec, projector) -> ProjectorSpec:
    if projector is None:
        return spec.projectors[0]
    return projector if isinstance(projector, ProjectorSpec) else ProjectorSpec(tuple(projector))


def _vector(params) -> np.ndarray:
    return params.vector if isinstance(params, Params) else np.asarray(params, dtype=float)


def merit(params, spec: ProblemSpec, projector=None, epsilon: float | None = None) -> float:
    """Σ over subspaces of fidelity + ε·success for one shared circuit and ancilla."""
    eps = spec.epsilon if epsilon is None else epsilon
    return CompiledProblem(spec, _projector(spec, projector)).merit(_vector(params), eps)


def gradient(
    params, spec: ProblemSpec, projector=None, epsilon: float | None = None, step: float = 1e-6
) -> np.ndarray:
    """Central finite-difference gradient of :func:`merit`."""
    eps = spec.epsilon if epsilon is None else epsilon
    problem = CompiledProblem(spec, _projector(spec, projector))
    x = _vector(params)
    grad = np.empty_like(x)
    for i in range(len(x)):
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        grad[i] = (problem.merit(xp, eps) - problem.merit(xm, eps)) / (2 * step)
    return grad


def subspace_operators(params, spec: ProblemSpec, projector=None) -> dict[int, KrausOperator]:
    """Heralded operators rebuilt with :func:`photonforge.kraus.assemble_paula`."""
    proj = _projector(spec, projector)
    p = params if isinstance(params, Params) else Params.from_vector(params, spec.n_modes)
    u = p.unitary()
    anc = realize_ancilla(p.ancilla_raw, spec.n_anc, spec.m_anc)
    ops = {}
    for n_c in spec.subspaces:
        inputs, outputs, _ = targets_from_table(spec.gate, n_c)
        ops[n_c] = assemble_paula(u, anc, proj, inputs, outputs)
    return ops


# ---------------------------------------------------------------------------
# optimization


@dataclass
class OptimizationResult:
    gate: str
    n_anc: int
    m_anc: int
    projector: tuple[int, ...]
    theta: np.ndarray
    ancilla_raw: np.ndarray
    fidelities: dict[int, float]
    successes: dict[int, float]
    merit: float
    epsilon: float
    seed: int
    restarts: int
    iterations: int
    wall_time: float
    restart_index: int = -1
    exact: bool = False
    message: str = ""

    @property
    def success(self) -> float:
        """Heralding probability guaranteed for every input: the smallest subspace success."""
        return min(self.successes.values())

    @property
    def min_fidelity(self) -> float:
        return min(self.fidelities.values())

    @property
    def params(self) -> Params:
        return Params(np.asarray(self.theta, float), np.asarray(self.ancilla_raw, float))

    def problem(self) -> ProblemSpec:
        return ProblemSpec(
            builtin_table(self.gate), self.n_anc, self.m_anc, (ProjectorSpec(self.projector),),
            self.epsilon, tuple(sorted(self.fidelities)),
        )


@dataclass(frozen=True)
class _Task:
    spec: ProblemSpec
    projector_index: int
    restart: int
    seed: int
    explore_eps: float
    polish_eps: tuple[float, ...]
    maxiter: int


@dataclass
class _Outcome:
    projector_index: int
    restart: int
    x: np.ndarray
    fidelities: np.ndarray
    successes: np.ndarray
    merit: float
    iterations: int
    passes: bool = field(init=False)

    def __post_init__(self):
        self.passes = bool(
            np.all(self.fidelities >= 1 - FIDELITY_TOL) and np.min(self.successes) >= SUCCESS_FLOOR
        )

    def rank_key(self):
        # exact solutions first, then by worst-case success; non-exact by merit
        if self.passes:
            primary = (1, float(np.min(self.successes)), self.merit)
        else:
            primary = (0, self.merit, float(np.min(self.successes)))
        return primary + (-self.projector_index, -self.restart)


def initial_point(spec: ProblemSpec, rng: np.random.Generator) -> np.ndarray:
    m = spec.n_modes
    theta = rng.uniform(-np.pi, np.pi, m * m) / m
    raw = rng.standard_normal(2 * spec.ancilla_dim)
    return np.concatenate([theta, raw])


def local_search(
    problem: CompiledProblem, x0: np.ndarray, weights: Sequence[float], maxiter: int = 5000
) -> tuple[np.ndarray, int]:
    """L-BFGS ascent on the merit, warm-started through each weight in turn.

    Stops early once some subspace's success collapses below ``SUCCESS_FLOOR``: the search
    is then sliding toward E = 0, where fidelity alone can still creep up indefinitely.
    """
    x = np.asarray(x0, dtype=float)
    iterations = 0
    for eps in weights:
        if iterations and np.min(problem.scores(x)[1]) < SUCCESS_FLOOR:
            break

        def objective(v, eps=eps):
            f, g = problem.merit_and_grad(v, eps)
            return -f, -g

        res = minimize(
            objective,
            x,
            jac=True,
            method="L-BFGS-B",
            options={
                "maxiter": maxiter,
                "maxfun": 2 * maxiter,
                "gtol": 1e-10,
                "ftol": 1e-15,
                "maxcor": 30,
            },
        )
        x = res.x
        iterations += int(res.nit)
    return x, iterations


def _run_task(task: _Task) -> _Outcome:
    spec = task.spec
    problem = CompiledProblem(spec, spec.projectors[task.projector_index])
    rng = np.random.default_rng(np.random.SeedSequence([task.seed, task.projector_index, task.restart]))
    x0 = initial_point(spec, rng)
    x, nit = local_search(problem, x0, (task.explore_eps, *task.polish_eps), task.maxiter)
    fids, succ = problem.scores(x)
    return _Outcome(
        task.projector_index, task.restart, x, fids, succ,
        float(np.sum(fids + spec.epsilon * succ)), nit,
    )


def optimize(
    spec: ProblemSpec,
    restarts: int,
    seed: int = 0,
    explore_eps: Sequence[float] = EXPLORE_EPS,
    polish_eps: Sequence[float] = POLISH_EPS,
    jobs: int = 1,
    maxiter: int = 5000,
) -> OptimizationResult:
    """Multi-start search over every projector candidate of ``spec``.

    Restart ``r`` explores at ``explore_eps[r % len(explore_eps)]`` and is then polished
    through ``polish_eps``.  The result is reproducible for a given ``seed`` regardless of
    ``jobs``.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if not explore_eps:
        raise ValueError("need at least one exploration weight")
    start = time.perf_counter()
    tasks = [
        _Task(spec, p, r, seed, float(explore_eps[r % len(explore_eps)]), tuple(polish_eps), maxiter)
        for p in range(len(spec.projectors))
        for r in range(restarts)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_task, tasks))
    else:
        outcomes = [_run_task(t) for t in tasks]
    best = max(outcomes, key=_Outcome.rank_key)
    params = Params.from_vector(best.x, spec.n_modes)
    n_exact = sum(o.passes for o in outcomes)
    message = (
        f"{n_exact}/{len(outcomes)} local searches reached the fidelity filter"
        if best.passes
        else "no exact solution found"
    )
    log.info("%s N_a=%d M_a=%d: %s", spec.gate.name, spec.n_anc, spec.m_anc, message)
    return OptimizationResult(
        gate=spec.gate.name.lower(),
        n_anc=spec.n_anc,
        m_anc=spec.m_anc,
        projector=spec.projectors[best.projector_index].outcome,
        theta=params.theta,
        ancilla_raw=params.ancilla_raw,
        fidelities={n: float(f) for n, f in zip(spec.subspaces, best.fidelities)},
        successes={n: float(s) for n, s in zip(spec.subspaces, best.successes)},
        merit=best.merit,
        epsilon=spec.epsilon,
        seed=seed,
        restarts=restarts,
        iterations=sum(o.iterations for o in outcomes),
        wall_time=time.perf_counter() - start,
        restart_index=best.restart,
        exact=best.passes,
        message=message,
    )


def sweep(
    gate: GateTable,
    n_anc_range: Iterable[int],
    m_anc_range: Iterable[int],
    epsilons: Sequence[float] = EXPLORE_EPS,
    restarts: int = 10,
    seed: int = 0,
    dim_guard: int = DIM_GUARD,
    jobs: int = 1,
    polish_eps: Sequence[float] = POLISH_EPS,
) -> list[OptimizationResult]:
    """Optimize every ancilla size on the grid over all single-outcome projectors.

    Configurations whose joint Fock space exceeds ``dim_guard`` are skipped.  Results are
    ordered exact-first, then by decreasing success.
    """
    results = []
    m_values = list(m_anc_range)
    for n_anc in n_anc_range:
        for m_anc in m_values:
            if n_anc > 0 and m_anc == 0:
                log.info("skip N_a=%d M_a=0: photons need modes", n_anc)
                continue
            spec = ProblemSpec(gate, n_anc, m_anc, epsilon=float(epsilons[0]))
            dim = spec.joint_dim()
            if dim > dim_guard:
                log.warning("skip N_a=%d M_a=%d: joint dimension %d > %d", n_anc, m_anc, dim, dim_guard)
                continue
            results.append(
                optimize(spec, restarts, seed, explore_eps=epsilons, polish_eps=polish_eps, jobs=jobs)
            )
    results.sort(key=lambda r: (not r.exact, -r.success))
    return results

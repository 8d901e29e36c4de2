import numpy as np
import pytest
from scipy.stats import unitary_group


def random_unitary(m, seed):
    return unitary_group.rvs(m, random_state=seed) if m > 1 else np.exp(1j * np.array([[seed]]))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


BEAM_SPLITTER = np.array([[1, 1], [1, -1]]) / np.sqrt(2)


@pytest.fixture(scope="session")
def klm_result():
    """C1 with two ancilla photons in two modes heralded on |1,1>, 50 seeded restarts."""
    from photonforge.gates import builtin_table
    from photonforge.optim import ProblemSpec, optimize

    spec = ProblemSpec(builtin_table("c1"), 2, 2, ((1, 1),))
    return optimize(spec, restarts=50, seed=7)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    def _report(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"criterion {number:>2} {title}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

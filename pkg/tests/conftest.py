import numpy as np
import pytest

from seqsel.hmm import HmmParams


def random_params(rng: np.random.Generator, K: int) -> HmmParams:
    return HmmParams(
        pi=rng.dirichlet(np.ones(K)),
        A=rng.dirichlet(np.ones(K), size=K),
        mu=rng.normal(0.0, 2.0, size=K),
        sigma=rng.uniform(0.3, 2.0, size=K),
    )


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def case2_high():
    return HmmParams(pi=[1.0, 0.0], A=[[0.95, 0.05], [0.05, 0.95]], mu=[-2.0, 2.0], sigma=[0.5, 1.0])


ACCEPTANCE_LINES = []


def record_criterion(label, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

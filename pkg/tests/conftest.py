import time

import numpy as np
import pytest

from multilrsga.experiments import bilinear_game, compare_solvers, paper_game
from multilrsga.solvers import SolverConfig

TANH3_ETA = 0.001
TANH3_TAU = 1.0
TANH3_SEED = 0


@pytest.fixture(scope="session")
def tanh3():
    return paper_game()


@pytest.fixture(scope="session")
def bilinear():
    return bilinear_game(1.0)


@pytest.fixture(scope="session")
def tanh3_comparison(tanh3):
    """MultiLRSGA vs GD on the three-player game at the reference settings."""
    multi = SolverConfig(eta=TANH3_ETA, tau=TANH3_TAU, max_iter=50_000,
                         residual_tol=1e-6, secant_init="random", seed=TANH3_SEED)
    gd = SolverConfig(eta=TANH3_ETA, tau=0.0, max_iter=50_000, residual_tol=1e-6)
    start = time.perf_counter()
    report = compare_solvers(tanh3, multi, gd)
    report.elapsed = time.perf_counter() - start
    return report


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _CRITERIA.append((value, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in sorted(_CRITERIA, key=lambda c: c[0]):
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {label}")

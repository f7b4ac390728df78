import re

import numpy as np
import pytest

from chaoscope.game_core import BimatrixGame, NormalFormGame

MP = np.array([[1.0, -1.0], [-1.0, 1.0]])

# three-strategy example with a dominating zero-sum part
EXAMPLE_A = np.array([[4.0, 12.0, -6.0], [-8.0, 0.0, 12.0], [14.0, -8.0, 4.0]])
EXAMPLE_B = np.array([[4.0, -4.0, 10.0], [8.0, 0.0, -4.0], [-2.0, 8.0, 4.0]])


@pytest.fixture
def matching_pennies():
    return BimatrixGame(MP, -MP)


@pytest.fixture
def coordination_pennies():
    return BimatrixGame(MP, MP)


@pytest.fixture
def example_game():
    return BimatrixGame(EXAMPLE_A, EXAMPLE_B)


def random_bimatrix(rng, max_n=6, min_n=2):
    n, m = rng.integers(min_n, max_n + 1, size=2)
    return BimatrixGame(rng.normal(size=(n, m)), rng.normal(size=(n, m)))


def random_normal_form(rng, counts):
    return NormalFormGame(tuple(rng.normal(size=counts) for _ in counts))


def random_dual(rng, counts, scale=2.0, batch=()):
    return [scale * rng.normal(size=tuple(batch) + (n,)) for n in counts]


# --------------------------------------------------------------------------
# one pass/fail line per acceptance criterion

_criteria = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)", report.nodeid)
    if not match:
        return
    key = (int(match.group(1)), match.group(2).replace("_", " "))
    if report.when == "call" or report.outcome != "passed":
        if report.when == "call" or key not in _criteria:
            _criteria[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (number, name), outcome in sorted(_criteria.items()):
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} {name}: {verdict}")

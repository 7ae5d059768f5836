import json
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from defexp import Deformation, family_from_arrays

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
MODELS = FIXTURES / "models"
GOLDEN = Path(__file__).resolve().parent / "golden"

settings.register_profile("defexp", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("defexp")


@pytest.fixture(scope="session")
def derived():
    with open(FIXTURES / "derived_values.json") as fh:
        return json.load(fh)


def two_point(d: Deformation):
    return family_from_arrays(d, [0.5, 0.5], [1.0, 1.0], [[0.0, 1.0]])


def three_point(d: Deformation):
    return family_from_arrays(d, [1.0, 1.0, 1.0], [0.2, 0.3, 0.5], [[1.0, 2.0, 3.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of an acceptance criterion, then assert it."""

    def record(number: int, title: str, passed: bool, detail: str = ""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE[number] = line
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])

from pathlib import Path

import numpy as np
import pytest

from tprmax.data import Dataset

ROOT = Path(__file__).resolve().parent.parent
PIMA_CSV = ROOT / "data" / "pima.csv"
PIMA_SPLIT = ROOT / "data" / "pima_split.txt"


def make_normal(n1=60, n0=80, p=2, shift=1.0, seed=0) -> Dataset:
    rng = np.random.default_rng(seed)
    mu = np.full(p, shift / np.sqrt(p))
    return Dataset(rng.normal(size=(n1, p)) + mu, rng.normal(size=(n0, p)))


@pytest.fixture
def normal_data():
    return make_normal()


ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, ok: bool, detail: str) -> None:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

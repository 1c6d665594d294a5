import os

import numpy as np
import pytest

from sonify.data import AttributeSeries, Dataset

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def fixture_path(name: str) -> str:
    return os.path.abspath(os.path.join(FIXTURES, name))


def make_dataset(name="test", **columns) -> Dataset:
    series = tuple(
        AttributeSeries(name=k, values=np.asarray(v, dtype=float), color=(0, 0, 0))
        for k, v in columns.items()
    )
    return Dataset(name=name, series=series)


# Verdict lines recorded by the acceptance suite; echoed after the test run
# so they show up even with output capture on.
acceptance_results: list[tuple[str, bool]] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_results:
        terminalreporter.section("acceptance criteria")
        for label, ok in acceptance_results:
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}")


@pytest.fixture
def tmp_csv(tmp_path):
    def write(text: str, name: str = "data.csv") -> str:
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write

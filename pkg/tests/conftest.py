from pathlib import Path

import pytest

from eilearn.data import Attribute, Dataset, Instance, Schema

ROOT = Path(__file__).resolve().parent.parent

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def repo_root(monkeypatch):
    monkeypatch.chdir(ROOT)
    return ROOT


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


def numeric_dataset(rows, labels, classes=("a", "b")) -> Dataset:
    """Dataset of numeric attributes x0..x{d-1} from plain lists."""
    d = len(rows[0])
    schema = Schema(tuple(Attribute(f"x{j}") for j in range(d)), "y", tuple(classes))
    return Dataset(
        schema, tuple(Instance(tuple(float(v) for v in r), int(l)) for r, l in zip(rows, labels))
    )

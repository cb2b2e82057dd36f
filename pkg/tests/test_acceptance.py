"""Acceptance criteria at their stated sizes and tolerances.

Each criterion is read from its file under ``scenarios/acceptance`` (the same
file ``starmec verify --scenario`` runs) and prints one PASS/FAIL line.
"""
from pathlib import Path

import pytest

from starmec.harness.verify import load_check_file, run_check

FILES = sorted((Path(__file__).resolve().parents[1] / "scenarios" / "acceptance").glob("*.toml"))


def test_every_criterion_has_a_file():
    assert [int(f.name[:2]) for f in FILES] == list(range(1, 13))


@pytest.mark.slow
@pytest.mark.parametrize("path", FILES, ids=[f.stem for f in FILES])
def test_criterion(path, capsys):
    number = int(path.name[:2])
    checks = [run_check(name, **kw) for name, kw in load_check_file(path)]
    with capsys.disabled():
        for chk in checks:
            print(f"\ncriterion {number:2d}: {chk.line()}", flush=True)
    assert all(c.passed for c in checks), "; ".join(c.detail for c in checks)

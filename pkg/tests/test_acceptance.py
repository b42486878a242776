"""Acceptance criteria A1-A11, each checked at its stated tolerance and time bound.

Every criterion prints one ``A<k> PASS|FAIL`` line (also repeated in the
"acceptance criteria" section of the pytest summary).
"""
import pytest

from rbmlearn.verification import CHECKS, run_check, run_suite

from conftest import ACCEPTANCE_LINES

TIME_BOUNDS = {
    "A1": 60,
    "A2": 30,
    "A3": 120,
    "A4": 120,
    "A5": 600,
    "A6": 300,
    "A7": 10,
    "A8": 30,
    "A9": 600,
    "A10": 120,
}


def report(line: str) -> None:
    print(line)
    ACCEPTANCE_LINES.append(line)


def test_every_criterion_has_a_bound():
    assert set(TIME_BOUNDS) == set(CHECKS)


@pytest.mark.parametrize("name", list(TIME_BOUNDS))
def test_criterion(name):
    result = run_check(name)
    in_time = result.elapsed <= TIME_BOUNDS[name]
    ok = result.passed and in_time
    line = result.line()
    if result.passed and not in_time:
        line = line.replace(" PASS ", " FAIL ", 1) + f" [over the {TIME_BOUNDS[name]} s bound]"
    report(line)
    assert result.passed, result.summary
    assert in_time, f"{name} took {result.elapsed:.1f} s, bound {TIME_BOUNDS[name]} s"
    assert ok


def test_determinism(tmp_path):
    run_suite(out_dir=tmp_path / "first")
    run_suite(out_dir=tmp_path / "second")
    first = (tmp_path / "first" / "acceptance.csv").read_bytes()
    second = (tmp_path / "second" / "acceptance.csv").read_bytes()
    same = first == second
    report(f"A11 {'PASS' if same else 'FAIL'} determinism: acceptance.csv byte-identical across two full runs ({len(first)} bytes)")
    assert same

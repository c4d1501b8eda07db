"""Acceptance criteria, one test per criterion.

Each test records a ``criterion N [PASS|FAIL] ...`` line, printed in the
terminal summary, and asserts both the outcome and the runtime limit.
"""
import pytest

from plbarrier.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, record_property):
    res = run_criterion(number, seed=0)
    print(res.line())
    record_property("criterion", res.line())
    within_time, passed = res.within_time, res.passed
    assert within_time, f"runtime {res.runtime:.2f}s exceeds {res.limit}s"
    assert passed, "; ".join(res.failures)

"""Acceptance criteria at their stated tolerances; one PASS/FAIL line per criterion."""

import pytest

from slitspace import acceptance


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, capsys):
    res = acceptance.CRITERIA[number]()
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()

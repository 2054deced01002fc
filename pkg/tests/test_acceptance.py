"""Acceptance suite: runs every criterion at its stated tolerance and prints
one pass/fail line per criterion.

The heavy streaming criteria dominate the runtime (a few minutes total); run
`pytest tests/test_acceptance.py -s` to watch the per-criterion lines appear.
"""
import pytest

from lifelong.acceptance import ACCEPTANCE_CRITERIA


@pytest.mark.parametrize("cid,criterion", ACCEPTANCE_CRITERIA,
                         ids=[f"criterion_{cid:02d}" for cid, _ in ACCEPTANCE_CRITERIA])
def test_acceptance_criterion(cid, criterion, capsys):
    result = criterion()
    with capsys.disabled():
        print(f"\n{result.line()}")
        for detail in result.details:
            print(f"    {detail}")
    assert result.passed, f"criterion {cid} failed: {result.details}"

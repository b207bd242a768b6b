"""Acceptance battery: every criterion at its stated tolerance.

Each test prints one ``[PASS]`` or ``[FAIL]`` line, visible in ``pytest -v``
output, and fails with the criterion's named failures.
"""
import time

import pytest

from annulus_dilation.acceptance import CRITERIA, verify_suite


@pytest.mark.parametrize("cid", sorted(CRITERIA))
def test_criterion(cid, capsys):
    (result,) = verify_suite(quick=False, only=[cid])
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.failures


def test_quick_suite_under_a_minute(capsys):
    start = time.perf_counter()
    results = verify_suite(quick=True)
    elapsed = time.perf_counter() - start
    with capsys.disabled():
        print(f"\nquick suite: {sum(r.passed for r in results)}/{len(results)} passed in {elapsed:.1f}s")
    assert all(r.passed for r in results)
    assert elapsed < 60.0

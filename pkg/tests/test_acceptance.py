"""Acceptance criteria, each at its stated tolerance.

Every criterion prints one ``[PASS]`` / ``[FAIL]`` line.  Run this file
directly (``python3 tests/test_acceptance.py``) for the plain table.
"""
import functools

import pytest

from phasekit.acceptance import CRITERIA, format_table, run_suite

RESULT_KEYS = ("1", "2", "3", "4", "5a", "5b", "5c", "5d", "5e", "6", "6b", "7", "8", "9", "10")


@functools.lru_cache(maxsize=None)
def _results_for(parent: str) -> dict:
    return {r.key: r for r in run_suite([parent])}


def _parent(key: str) -> str:
    return key.rstrip("abcde")


@pytest.mark.parametrize("key", RESULT_KEYS)
def test_criterion(key, capsys):
    res = _results_for(_parent(key)).get(key)
    assert res is not None, f"criterion {key} produced no result"
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail


def test_every_criterion_is_covered():
    parents = {_parent(k) for k in RESULT_KEYS}
    assert parents == {c.key for c in CRITERIA}


if __name__ == "__main__":
    print(format_table(run_suite(echo=None)))

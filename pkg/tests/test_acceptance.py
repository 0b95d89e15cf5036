"""Acceptance criteria 1-11, one test each.

The whole suite runs once per module (a few minutes); each test prints a
``criterion N <name>: PASS|FAIL`` line with the measured values, uncaptured so
it shows up in the pytest log.
"""

from __future__ import annotations

import logging

import pytest

from penalized_fb.config import ALL_CHECKS
from penalized_fb.verification import VerificationContext, results_csv, run_verification_suite

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def suite():
    logging.getLogger("penalized_fb.freeboundary").setLevel(logging.WARNING)
    results = run_verification_suite(ALL_CHECKS, context=VerificationContext())
    return {r.check: r for r in results}, results_csv(results)


@pytest.mark.parametrize("number, check", list(enumerate(ALL_CHECKS, start=1)), ids=list(ALL_CHECKS))
def test_criterion(suite, capsys, number, check):
    by_name, _ = suite
    r = by_name[check]
    verdict = "PASS" if r.status == "pass" else r.status.upper()
    with capsys.disabled():
        print(f"\ncriterion {number:2d} {check}: {verdict} | measured: {r.measured} | threshold: {r.threshold}")
    assert r.status == "pass", r.detail


def test_report_has_one_row_per_criterion(suite):
    _, text = suite
    lines = text.strip().splitlines()
    assert lines[0] == "check,status,measured,threshold,detail"
    assert [ln.split(",", 1)[0] for ln in lines[1:]] == list(ALL_CHECKS)

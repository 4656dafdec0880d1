"""Acceptance suite: one ``tale verify-all`` run (with its fresh-process rerun),
then one pass/fail line per criterion."""

import json
import subprocess
import sys

import pytest

SEED = "0x5EED"
TIME_LIMITS = {1: 1, 2: 1, 3: 1, 4: 30, 5: 30, 6: 10, 7: 60, 8: 10, 9: 10, 10: 120, 11: 180, 12: 300}
KNOWN_CONFLICT = "Z_m in SO(2), odd m: number of lifts"


@pytest.fixture(scope="session")
def verify_all(tmp_path_factory):
    d = tmp_path_factory.mktemp("verify")
    out, timings = d / "results.json", d / "timings.json"
    proc = subprocess.run([sys.executable, "-m", "tale", "verify-all", "--seed", SEED, "--out", str(out),
                           "--timings", str(timings)], capture_output=True, text=True)
    print("\n" + proc.stdout)
    assert proc.returncode in (0, 2), proc.stderr
    doc = json.loads(out.read_text())
    return {c["criterion"]: c for c in doc["criteria"]}, json.loads(timings.read_text()), proc.returncode


def _report(number, crit, seconds):
    mark = "PASS" if crit["passed"] else "FAIL"
    print(f"\n[{mark}] criterion {number:2d}: {crit['title']} ({seconds:.1f} s)")
    for c in crit["checks"]:
        print(f"    {'ok  ' if c['passed'] else 'FAIL'} {c['name']} = {c['value']} (need {c['limit']})")


def _check(verify_all, number):
    results, times, _ = verify_all
    crit = results[number]
    secs = float(times[str(number)])
    _report(number, crit, secs)
    assert crit["passed"], [c for c in crit["checks"] if not c["passed"]]
    if number in TIME_LIMITS:
        assert secs <= TIME_LIMITS[number]


@pytest.mark.xfail(strict=True, reason="odd m gives one lift to Spin(2), not two: Z_2m has a single subgroup "
                                       "of order m; see the decisions ledger")
def test_criterion_01_spin_lift_counts(verify_all):
    _check(verify_all, 1)


def test_criterion_01_attainable_checks(verify_all):
    results, times, _ = verify_all
    others = [c for c in results[1]["checks"] if c["name"] != KNOWN_CONFLICT]
    assert len(others) == len(results[1]["checks"]) - 1
    assert all(c["passed"] for c in others)
    assert float(times["1"]) <= TIME_LIMITS[1]


@pytest.mark.parametrize("number", range(2, 13))
def test_criterion(verify_all, number):
    _check(verify_all, number)


def test_criterion_13_determinism(verify_all):
    results, times, _ = verify_all
    _report(13, results[13], float(times["13"]))
    assert results[13]["passed"]
    assert float(times["total"]) <= 900

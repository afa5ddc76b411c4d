"""The eleven acceptance criteria at their stated tolerances and time budgets."""

import json

import numpy as np
import pytest

from z2glue import checks
from z2glue.harness import cli


def _accept(result, report, budget):
    report(f"{'PASS' if result.passed else 'FAIL'} {result.criterion} {result.name}: {result.detail}"
           f" [{result.seconds:.1f}s]")
    assert result.status == checks.PASS, result.detail
    assert result.seconds < budget, f"took {result.seconds:.1f}s (budget {budget}s)"


def test_1_cokernel_annihilation(report):
    r = checks.cokernel_annihilation(ells=(1, 2, 4, 8))
    assert r.measured["worst_ratio"] >= 3.0
    _accept(r, report, 60)


def test_2_concentration_law(report):
    r = checks.concentration_law(ells=(1, 2, 4), radii=(0.5, 0.75))
    ls = [row[0] * row[1] for row in r.measured["rows"]]
    assert min(ls) >= 0.5 and max(ls) <= 3 and len(ls) == 6
    assert r.measured["worst_rel_error"] <= 0.02
    _accept(r, report, 60)


def test_3_obstruction_regularity(report):
    r = checks.obstruction_regularity()
    _accept(r, report, 60)


def test_4_symbol_order(report):
    r = checks.symbol_order(ps=(8, 16, 32, 64))
    assert abs(r.measured["slope"] - 0.5) <= 0.1
    assert r.measured["closed_p16"] == pytest.approx(3 * np.pi * 256 * 257 ** -0.75, rel=1e-14)
    _accept(r, report, 300)


def test_5_bg_validation(report):
    r = checks.bg_validation(steps=(1e-3, 1e-4))
    _accept(r, report, 120)


def test_6_weight_two_scaling(report):
    r = checks.weight_two_scaling()
    _accept(r, report, 120)


def test_7_identities(report):
    r = checks.identities(samples=10_000, tol=1e-12)
    _accept(r, report, 30)


def test_8_schwarz_reference(report):
    r = checks.schwarz_reference()
    assert max(r.measured["delta"]) < 1
    assert max(r.measured["u_half_error"]) <= 1e-8
    assert r.measured["monotone"]
    _accept(r, report, 30)


def test_9_semifredholm_cycle(report):
    r = checks.semifredholm_cycle()
    assert r.measured["delta"] < 1
    assert r.measured["stall_ratio"] >= 1e3
    assert r.measured["telescoping"] <= 1e-12
    _accept(r, report, 30)


def test_10_parametrix_support(report):
    r = checks.parametrix_support()
    assert r.measured["outside_band"] <= 1e-8
    _accept(r, report, 30)


def test_11_determinism(report, tmp_path):
    runs = []
    for _ in range(2):
        assert cli.main(["verify-all", "--seed", "7", "--out", str(tmp_path), "-q"]) == 0
    for d in sorted(tmp_path.iterdir()):
        runs.append(json.loads((d / cli.MANIFEST).read_text()))
    assert len(runs) == 2
    same = cli.stable_view(runs[0]) == cli.stable_view(runs[1])
    r = checks.CheckResult(11, "determinism", checks.PASS if same else checks.FAIL,
                           detail="two verify-all runs with seed 7 give identical manifests"
                           if same else "manifests differ")
    _accept(r, report, float("inf"))

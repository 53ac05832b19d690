import numpy as np
import pytest

from kvbf.checks import (CheckResult, TransientProbe, check_energy_decay, check_incompressibility,
                         monomial_integral, p1_cell_matrices, run_checks)


def test_monomial_integral():
    assert monomial_integral(0, 0) == 0.5
    assert monomial_integral(2, 0) == pytest.approx(1 / 12)
    assert monomial_integral(4, 4) == pytest.approx(1 / 6300)


def test_p1_closed_form_right_triangle():
    mass, stiff = p1_cell_matrices([[0, 0], [1, 0], [0, 1]])
    assert np.allclose(stiff, [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]])
    assert np.allclose(mass.sum(), 0.5)


def test_result_line():
    assert CheckResult("x", True, "ok").line() == "[PASS] x: ok"
    assert CheckResult("y", False, "bad").line() == "[FAIL] y: bad"


def test_checks_detect_violations():
    probe = TransientProbe([1.0, 0.5, 0.7], [0.0, 1e-3, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
    assert not check_energy_decay(probe)[0]
    assert not check_incompressibility(probe)[0]


@pytest.mark.parametrize("family", ["taylor_hood", "mini"])
def test_all_checks_pass(family):
    results = run_checks(family)
    assert len(results) == 8
    failed = [r.line() for r in results if not r.passed]
    assert not failed

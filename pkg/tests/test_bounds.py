import math

import pytest

from conftest import DET_T_M2
from rmtbound import bounds
from rmtbound.bounds import (cumulative_w, maple_check, verify_FG, verify_lemma3,
                             verify_lemma4, verify_theorem1)
from rmtbound.special_functions import GIBBS_CONSTANT, w_fourier


def test_theorem1_m2():
    rep = verify_theorem1(2)
    assert rep.theorem1_ok
    assert rep.det_T == pytest.approx(DET_T_M2, abs=1e-12)
    assert rep.det_T >= 0.0865


def test_theorem1_m10():
    rep = verify_theorem1(10, stability_check=True)
    assert rep.theorem1_ok
    assert rep.max_mQ <= 1.827
    assert 1 - rep.lambda1_Kprime >= 0.0865


def test_theorem1_report_fails_when_threshold_raised(monkeypatch):
    monkeypatch.setattr(bounds, "DET_LOWER_BOUND", 0.95)
    rep = verify_theorem1(2)
    assert not rep.theorem1_ok
    assert [c.name for c in rep.failures()] == ["1 - lambda1(K') >= 0.0865", "det T >= 0.0865"]


def test_report_to_dict_roundtrip():
    d = verify_theorem1(3).to_dict()
    assert d["passed"] is True and d["m"] == 3
    assert all(set(c) == {"name", "value", "threshold", "relation", "passed"} for c in d["details"])


def test_lemma3_m2():
    rep = verify_lemma3(2)
    assert rep.passed
    assert rep.sign_changes == 1
    assert rep.x1 == pytest.approx(0.5, abs=1e-12)
    assert rep.x0 < rep.x1


def test_lemma3_m7_endpoint_and_m3_range():
    assert verify_lemma3(7).passed
    rep = verify_lemma3(3)
    assert rep.u_min > -1 / 12


@pytest.mark.parametrize("m", [2, 3, 11, 40, 200])
def test_lemma3_passes(m):
    assert verify_lemma3(m).passed


def test_maple_check():
    rep = maple_check()
    assert rep.passed
    assert rep.minimum > 0.0129
    assert rep.terms[2] == 0.125
    assert all(v > 0 for v in rep.terms.values())
    assert rep.argmin == 15


def test_FG():
    rep = verify_FG()
    assert rep.passed
    assert rep.min_F > 2.607
    assert rep.G_sqrt3 < 41.3
    assert rep.F_at_1 == pytest.approx(math.e, abs=1e-10)
    assert rep.dF_at_1 > 2.304


def test_lemma4_small():
    rep = verify_lemma4(q_list=[3, 101])
    assert rep.passed
    assert rep.per_q[3]["argmax"] == pytest.approx(math.pi / 3, abs=1e-9)
    assert rep.per_q[3]["refined_max"] == pytest.approx(GIBBS_CONSTANT, abs=1e-9)
    assert rep.per_q[101]["refined_max"] <= 1.2180
    assert rep.min_W >= -1e-9


def test_cumulative_w_matches_closed_form():
    import numpy as np
    x = np.linspace(0, math.pi / 2, 500)
    assert np.allclose(cumulative_w(x, 17), w_fourier(x, 17), atol=1e-13, rtol=0)

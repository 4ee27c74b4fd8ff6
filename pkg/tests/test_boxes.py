import json
import math

import numpy as np
import pytest

from nonlocal_distill.boxes import (PL, PNL, Box, CrossSectionPoint, ExtremalIndex,
                                    InvalidBoxError, TRIVIAL_CC_THRESHOLD, box_from_json,
                                    box_to_json, check, chsh, chsh2, cs_point, extremal_boxes,
                                    isotropic_noise, local_extremal, local_index, mix,
                                    nonlocal_extremal, nonlocal_index, validate)


def test_local_extremal_all_zero_is_first_vertex():
    box = local_extremal(0, 0, 0, 0)
    assert np.all(box.p[0, 0] == 1.0)
    assert box.allclose(PL(1))


def test_local_extremal_constant_ones_has_index_6():
    box = local_extremal(0, 1, 0, 1)
    assert np.all(box.p[1, 1] == 1.0)
    assert local_index(0, 1, 0, 1) == 6
    assert box.allclose(PL(6))


def test_local_extremal_a_equals_x_has_index_9():
    box = local_extremal(1, 0, 0, 0)
    for x in (0, 1):
        assert np.all(box.p[x, 0, x, :] == 1.0)
    assert local_index(1, 0, 0, 0) == 9
    assert box.allclose(PL(9))


def test_pr_box_and_its_flip():
    pr = nonlocal_extremal(0, 0, 0)
    for a in (0, 1):
        for b in (0, 1):
            for x in (0, 1):
                for y in (0, 1):
                    want = 0.5 if a ^ b == x * y else 0.0
                    assert pr.p[a, b, x, y] == want
    anti = nonlocal_extremal(0, 0, 1)
    assert nonlocal_index(0, 0, 1) == 2
    assert anti.allclose(PNL(2))
    assert chsh(anti) == pytest.approx(-4)


def test_chsh_reference_values():
    assert chsh(PNL(1)) == pytest.approx(4)
    assert chsh(PL(1)) == pytest.approx(2)
    assert chsh(isotropic_noise()) == pytest.approx(2)


def test_chsh2_reference_values():
    # E00 - E01 + E10 + E11 with E = (1, 1, 1, -1) on the PR box
    assert chsh2(PNL(1)) == pytest.approx(0)
    assert chsh2(PL(1)) == pytest.approx(2)
    assert chsh2(local_extremal(0, 0, 0, 1)) == pytest.approx(-2)


def test_mix_identity_and_noise():
    assert mix([PNL(1)], [1.0]).allclose(PNL(1))
    assert mix([PNL(1), PNL(2)], [0.75, 0.25]).allclose(isotropic_noise())


def test_mix_is_linear_in_chsh():
    b1, b2 = PNL(1), PL(3)
    for w in np.linspace(0, 1, 7):
        assert chsh(mix([b1, b2], [w, 1 - w])) == pytest.approx(w * chsh(b1) + (1 - w) * chsh(b2))


@pytest.mark.parametrize("weights", [[0.5, 0.6], [1.2, -0.2], []])
def test_mix_rejects_bad_weights(weights):
    with pytest.raises(ValueError):
        mix([PNL(1), PL(1)][: len(weights)] if weights else [], weights)


@pytest.mark.parametrize("eta,omega,value", [(0.888, 0.1, 2.2), (0.575, 0.375, 2.75)])
def test_cross_section_chsh(eta, omega, value):
    for cs in ("I", "II", "III"):
        assert chsh(cs_point(cs, eta, omega)) == pytest.approx(value)
        assert chsh(cs_point(cs, eta, omega)) == pytest.approx(2 + 2 * omega)


def test_cross_section_corner_is_pr():
    assert cs_point("I", 0, 1).allclose(PNL(1))
    assert cs_point(CrossSectionPoint("II", 0.0, 1.0)).allclose(PNL(1))


@pytest.mark.parametrize("cs,eta,omega", [("IV", 0.1, 0.1), ("I", -0.1, 0.5), ("I", 0.7, 0.5)])
def test_cross_section_rejects(cs, eta, omega):
    with pytest.raises(ValueError):
        cs_point(cs, eta, omega)


def test_validate_reports():
    rep = validate(PNL(1))
    assert rep.ok and rep.worst == 0

    p = PNL(1).p.copy()
    p[0, 0, 0, 0] += 0.1
    rep = validate(Box(p))
    assert "normalization" in rep.failures() and rep.positivity == 0
    with pytest.raises(InvalidBoxError):
        check(Box(p))

    # deterministic b = x is signalling from Alice to Bob
    s = np.zeros((2, 2, 2, 2))
    for x in (0, 1):
        s[0, x, x, :] = 1.0
    rep = validate(Box(s))
    assert "no_signalling_bob" in rep.failures()
    assert rep.positivity == 0 and rep.normalization == 0


def test_box_is_read_only():
    with pytest.raises(ValueError):
        PNL(1).p[0, 0, 0, 0] = 1.0


def test_box_shape_checked():
    with pytest.raises(ValueError):
        Box(np.zeros((2, 2, 2)))


def test_extremal_index_round_trip():
    for i in range(1, 17):
        assert local_index(*ExtremalIndex("L", i).bits()) == i
    for i in range(1, 9):
        assert nonlocal_index(*ExtremalIndex("NL", i).bits()) == i
    with pytest.raises(ValueError):
        ExtremalIndex("L", 17)
    with pytest.raises(ValueError):
        ExtremalIndex("Q", 1)


def test_extremal_boxes_are_valid_and_distinct():
    boxes = extremal_boxes()
    assert len(boxes) == 24
    flat = np.stack([b.p.ravel() for b in boxes])
    assert len({tuple(r) for r in flat}) == 24
    assert all(validate(b).ok for b in boxes)
    assert all(abs(chsh(b)) <= 2 + 1e-12 for b in boxes[:16])


def test_json_round_trip_is_exact():
    box = cs_point("II", 0.3141592653589793, 0.2718281828459045)
    text = box_to_json(box)
    back = box_from_json(text)
    assert np.array_equal(back.p, box.p)
    obj = json.loads(text)
    assert obj["order"] == "xy-ab"
    # row 2x+y = (1,1), column 2a+b = (0,1)
    assert obj["p"][3][1] == box.p[0, 1, 1, 1]


def test_json_rejects_other_layouts():
    with pytest.raises(ValueError):
        box_from_json({"p": [[0.25] * 4] * 4, "order": "ab-xy"})
    with pytest.raises(ValueError):
        box_from_json({"p": [[0.5] * 2] * 4})


def test_threshold_value():
    assert TRIVIAL_CC_THRESHOLD == pytest.approx(4 * math.sqrt(2 / 3))
    assert 3.2659 < TRIVIAL_CC_THRESHOLD < 3.2661

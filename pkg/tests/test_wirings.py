import numpy as np
import pytest

from nonlocal_distill.boxes import PL, PNL, chsh, cs_point, extremal_boxes, validate
from nonlocal_distill.wirings import (CLASS_BANDS, N_WIRINGS, catalog, catalog_effect, compose2,
                                      format_pair, label_of, named_two_copy,
                                      named_two_copy_labels, parse_pair, validate_effect,
                                      wiring_info)

FWW_POINT = cs_point("I", 0.888, 0.1)


def _output_on(chi, x1, x2, a1, a2):
    col = chi[:, x1, x2, a1, a2]
    return int(np.argmax(col)) if col.any() else None


def test_label_11_is_plain_xor():
    chi = catalog_effect(11)
    info = wiring_info(11)
    assert info.cls == "xor" and dict(info.params) == {"mu": 0, "nu": 0, "sigma": 0}
    for a1 in (0, 1):
        for a2 in (0, 1):
            assert _output_on(chi, 0, 0, a1, a2) == a1 ^ a2
            assert _output_on(chi, 1, 0, a1, a2) is None


def test_label_12_is_complemented_xor():
    chi = catalog_effect(12)
    assert dict(wiring_info(12).params)["sigma"] == 1
    for a1 in (0, 1):
        for a2 in (0, 1):
            assert _output_on(chi, 0, 0, a1, a2) == a1 ^ a2 ^ 1


def test_label_1_is_constant_zero():
    chi = catalog_effect(1)
    assert wiring_info(1).cls == "constant"
    assert chi[1].sum() == 0
    assert chi[0].sum() == 4  # one input pair, four outcome pairs


def test_class_sizes():
    assert [len(b) for b in CLASS_BANDS.values()] == [2, 8, 8, 32, 32]
    assert catalog().shape == (N_WIRINGS, 2, 2, 2, 2, 2)


def test_catalog_entries_are_distinct_behaviours():
    # distinct up to functional equivalence on the extremal boxes
    assert [label_of(catalog_effect(k)) for k in range(1, N_WIRINGS + 1)] == list(range(1, 83))


def test_every_catalog_effect_is_valid():
    for k in range(1, N_WIRINGS + 1):
        ok, worst = validate_effect(catalog_effect(k))
        assert ok and worst <= 1e-9


def test_zero_tensor_is_invalid():
    ok, _ = validate_effect(np.zeros((2, 2, 2, 2, 2)))
    assert not ok


def test_convex_combination_is_valid():
    ok, _ = validate_effect(0.5 * (catalog_effect(11) + catalog_effect(12)))
    assert ok


@pytest.mark.parametrize("label", [0, 83, -1])
def test_bad_labels(label):
    with pytest.raises(ValueError):
        catalog_effect(label)


def test_complemented_xor_pair_reaches_first_serial_value():
    assert chsh(compose2(FWW_POINT, FWW_POINT, (12, 18), (12, 18))) == pytest.approx(2.3525, abs=2e-4)


def test_wirings_of_deterministic_boxes_stay_deterministic():
    rng = np.random.default_rng(0)
    q = PL(1)
    for _ in range(50):
        alice = tuple(int(v) for v in rng.integers(1, 83, 2))
        bob = tuple(int(v) for v in rng.integers(1, 83, 2))
        out = compose2(q, q, alice, bob)
        assert set(np.unique(out.p)) <= {0.0, 1.0}
        assert abs(chsh(out)) == pytest.approx(2)


def test_fww_on_pr_boxes():
    assert chsh(compose2(PNL(1), PNL(1), *named_two_copy("FWW"))) == pytest.approx(2)


def test_named_two_copy_values():
    assert chsh(compose2(FWW_POINT, FWW_POINT, *named_two_copy("FWW"))) == pytest.approx(2.3526, abs=2e-4)
    assert chsh(compose2(FWW_POINT, FWW_POINT, *named_two_copy("ABL1"))) == pytest.approx(2.2815, abs=2e-4)
    assert chsh(compose2(PNL(1), PNL(1), *named_two_copy("ABL1"))) == pytest.approx(4)


def test_named_two_copy_are_catalog_members():
    assert named_two_copy_labels("FWW") == ((11, 17), (11, 17))
    assert named_two_copy_labels("ABL1") == ((58, 62), (12, 62))
    assert named_two_copy_labels("ABL2") == ((19, 43), (19, 43))
    with pytest.raises(ValueError):
        named_two_copy("XYZ")


def test_compose2_rejects_invalid_effect():
    with pytest.raises(ValueError):
        compose2(PNL(1), PNL(1), (np.zeros((2, 2, 2, 2, 2)), 11), (11, 11))


def test_compose_of_extremal_pairs_is_valid():
    boxes = extremal_boxes()
    rng = np.random.default_rng(5)
    for _ in range(100):
        i, j = rng.integers(0, 24, 2)
        alice = tuple(int(v) for v in rng.integers(1, 83, 2))
        bob = tuple(int(v) for v in rng.integers(1, 83, 2))
        assert validate(compose2(boxes[i], boxes[j], alice, bob), 1e-12).ok


def test_pair_format_round_trip():
    text = format_pair((12, 18), (58, 62))
    assert text == "A(12,18)/B(58,62)"
    assert parse_pair(text) == ((12, 18), (58, 62))
    with pytest.raises(ValueError):
        parse_pair("A(1,2)/B(3,99)")

import json

import pytest

from nonlocal_distill.boxes import PNL, cs_point, mix, PL
from nonlocal_distill.distill import (TRIVIAL_CC_THRESHOLD, AlgorithmConfig, certify_trivial_cc,
                                      check_transcript, distill, fixed_repeat, parallel_distill,
                                      serial_distill)

P1 = cs_point("I", 0.888, 0.1)
P2 = cs_point("I", 0.575, 0.375)

SERIAL_1 = [2.3525, 2.4681, 2.5546, 2.6186, 2.6729, 2.7236, 2.7706, 2.8143]
SERIAL_2 = [2.9212, 3.0452, 3.1327, 3.1930, 3.2324, 3.2562, 3.2683, 3.2718]


@pytest.fixture(scope="module")
def serial_p2():
    return serial_distill(P2, AlgorithmConfig("serial", max_rounds=8, method="vertex"))


def test_config_validation():
    with pytest.raises(ValueError):
        AlgorithmConfig("sideways")
    with pytest.raises(ValueError):
        AlgorithmConfig("repeat")
    with pytest.raises(ValueError):
        AlgorithmConfig("repeat", protocol="NOPE")
    with pytest.raises(ValueError):
        AlgorithmConfig(max_rounds=0)
    with pytest.raises(ValueError):
        AlgorithmConfig(method="simplex")


def test_serial_first_point_eight_rounds():
    tr = serial_distill(P1, AlgorithmConfig("serial", max_rounds=8, method="vertex"))
    assert len(tr.values) == 8
    for got, want in zip(tr.values, SERIAL_1):
        assert got >= want - 2e-4
    assert tr.stop_reason == "round_cap"
    assert tr.copies_used == 9


def test_serial_second_point(serial_p2):
    for got, want in zip(serial_p2.values, SERIAL_2):
        assert got >= want - 2e-4
    assert check_transcript(serial_p2) <= 1e-11


def test_lp_and_vertex_rounds_agree():
    lp = serial_distill(P2, AlgorithmConfig("serial", max_rounds=1))
    vx = serial_distill(P2, AlgorithmConfig("serial", max_rounds=1, method="vertex"))
    assert lp.values[0] == pytest.approx(vx.values[0], abs=1e-9)
    assert lp.rounds[0].bob == vx.rounds[0].bob


def test_parallel_on_pr_box_stops():
    tr = parallel_distill(PNL(1), AlgorithmConfig("parallel", method="vertex"))
    assert tr.rounds == [] and tr.stop_reason == "no_improvement"
    assert tr.best == pytest.approx(4)


def test_parallel_round_one_equals_serial_round_one():
    cfg = dict(max_rounds=1, method="vertex")
    s = serial_distill(P1, AlgorithmConfig("serial", **cfg))
    p = parallel_distill(P1, AlgorithmConfig("parallel", **cfg))
    assert p.values == s.values


def test_parallel_never_beats_serial(serial_p2):
    tr = parallel_distill(P2, AlgorithmConfig("parallel", max_rounds=8, method="vertex"))
    for k, v in enumerate(tr.values):
        assert v <= serial_p2.values[k] + 1e-12
    assert tr.copies_at(2) == 4


def test_repeat_abl1_column():
    tr = fixed_repeat(P1, "ABL1")
    assert tr.values == pytest.approx([2.2815, 2.3837, 2.4964, 2.5885, 2.5927], abs=2e-4)
    assert tr.stop_reason == "no_improvement"


def test_repeat_fww_column():
    tr = fixed_repeat(P1, "FWW")
    assert tr.values == pytest.approx([2.3525, 2.5546, 2.7191], abs=2e-4)
    assert tr.stop_reason == "no_improvement"


def test_repeat_abl1_second_point():
    assert fixed_repeat(P2, "ABL1").values == pytest.approx([2.9212, 3.0294], abs=2e-4)


def test_repeat_three_copy_counts_copies():
    tr = fixed_repeat(cs_point("II", 0.5, 0.4), "EQ2", AlgorithmConfig("repeat", "EQ2", max_rounds=2))
    assert tr.copies_per_round == 3
    assert tr.copies_at(len(tr.rounds)) == 3 ** len(tr.rounds)


def test_distill_dispatch_and_json():
    tr = distill(P1, AlgorithmConfig("repeat", protocol="FWW"))
    obj = json.loads(tr.dumps())
    assert obj["architecture"] == "repeat" and len(obj["rounds"]) == 3
    assert obj["rounds"][0]["alice"] == ["FWW"]


def test_certify_already_trivial():
    box = mix([PNL(1), PL(1)], [0.65, 0.35])
    res = certify_trivial_cc(box)
    assert res.trivial and res.copies_used == 1 and res.round == 0


def test_certify_second_point_with_eight_copies():
    res = certify_trivial_cc(P2, AlgorithmConfig("serial", method="vertex"))
    assert res.trivial and res.copies_used <= 8
    assert res.transcript.stop_reason == "threshold_reached"
    assert res.transcript.values[-1] > TRIVIAL_CC_THRESHOLD


def test_certify_reports_failure():
    res = certify_trivial_cc(P1, AlgorithmConfig("repeat", protocol="ABL1"))
    assert not res.trivial and res.copies_used is None


def test_target_stops_early():
    tr = serial_distill(P2, AlgorithmConfig("serial", method="vertex", target=3.0))
    assert tr.stop_reason == "threshold_reached" and len(tr.values) == 2

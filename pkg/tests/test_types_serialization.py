import json

import numpy as np
import pytest

from robustinspect import serialization
from robustinspect.errors import DomainError, InvariantViolation, ParseError
from robustinspect.single_agent import linear_mechanism, maximal_payment_mechanism, three_point_maximal
from robustinspect.types import GridDistribution, MomentSet, type_grid


def test_type_grid_endpoints():
    nu = type_grid(5)
    assert nu.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert type_grid(100)[33] == pytest.approx(1 / 3, abs=1e-15)
    with pytest.raises(DomainError):
        type_grid(1)


def test_weights_must_sum_to_one():
    with pytest.raises(InvariantViolation):
        GridDistribution.on_grid([0.1, 0.5, 0.9], [0.3, 0.3, 0.3])


def test_negative_weight_and_out_of_range_support():
    with pytest.raises(InvariantViolation):
        GridDistribution.on_grid([0.1, 0.9], [1.2, -0.2])
    with pytest.raises(InvariantViolation):
        GridDistribution.on_grid([0.1, 1.1], [0.5, 0.5])


def test_distribution_moments_and_mix():
    q = GridDistribution.on_grid([0.0, 1.0], [0.5, 0.5])
    r = GridDistribution.on_grid([0.5], [1.0])
    m = q.mix(r, 0.25)
    assert m.mean()[0] == pytest.approx(0.5)
    assert m.moment(2) == pytest.approx(0.75 * 0.5 + 0.25 * 0.25)


def test_moment_set_feasibility():
    MomentSet((0.5, 1 / 3))
    with pytest.raises(DomainError):
        MomentSet((0.5, 0.2))
    with pytest.raises(DomainError):
        MomentSet((0.5, 0.6))
    with pytest.raises(DomainError):
        MomentSet((1.0,))


def test_mechanism_round_trip_bit_identical():
    m = maximal_payment_mechanism(0.5)
    text = serialization.dumps(m)
    back = serialization.loads(text)
    assert back.allocation == m.allocation
    assert back.payment == m.payment
    assert back.params == m.params
    assert serialization.dumps(back) == text


def test_three_point_round_trip():
    m = three_point_maximal(0.15)
    back = serialization.loads(serialization.dumps(m))
    assert back.payment == m.payment
    assert back.params.nu_dprime == m.params.nu_dprime


def test_distribution_round_trip():
    q = GridDistribution.on_grid([0.2, 0.7], [0.25, 0.75])
    back = serialization.loads(serialization.dumps(q))
    assert np.array_equal(back.support, q.support)
    assert np.array_equal(back.weights, q.weights)


def test_overlapping_segments_in_file_rejected():
    d = json.loads(serialization.dumps(linear_mechanism(0.5)))
    d["allocation"][1]["lo"] = "0.1"
    with pytest.raises(InvariantViolation):
        serialization.loads(json.dumps(d))


def test_parse_error_names_field():
    d = json.loads(serialization.dumps(linear_mechanism(0.5)))
    d["payment"][0]["c1"] = "eight ninths"
    with pytest.raises(ParseError) as exc:
        serialization.loads(json.dumps(d))
    assert exc.value.field == "payment[0].c1"


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as exc:
        serialization.loads('{\n "kind": "mechanism",\n oops\n}')
    assert exc.value.line == 3


def test_unknown_kind_and_version():
    with pytest.raises(ParseError):
        serialization.loads('{"kind": "banana", "version": 1}')
    d = json.loads(serialization.dumps(linear_mechanism(0.5)))
    d["version"] = 7
    with pytest.raises(ParseError):
        serialization.loads(json.dumps(d))

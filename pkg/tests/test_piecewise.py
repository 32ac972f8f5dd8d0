import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustinspect.errors import DomainError, InvariantViolation
from robustinspect.piecewise import PiecewiseFn, Segment, blend, reward_from_payment, times_identity


def two_piece():
    return PiecewiseFn.from_pieces([
        (0.0, 0.5, {"c1": 2.0}),
        (0.5, 1.0, {"c0": 1.0}),
    ])


def test_half_open_segments():
    f = PiecewiseFn.from_pieces([(0.0, 0.5, {"c0": 1.0}), (0.5, 1.0, {"c0": 2.0})])
    assert f(0.5) == 2.0
    assert f(np.nextafter(0.5, 0)) == 1.0
    assert f(1.0) == 2.0


def test_scalar_and_vector_agree():
    f = two_piece()
    v = np.linspace(0, 1, 41)
    assert np.array_equal(f(v), np.array([f(float(t)) for t in v]))


def test_out_of_range_evaluation():
    with pytest.raises(DomainError):
        two_piece()(1.0000001)
    with pytest.raises(DomainError):
        two_piece()(np.array([-0.1, 0.2]))


def test_overlapping_segments_rejected():
    with pytest.raises(InvariantViolation):
        PiecewiseFn([Segment(0.0, 0.6), Segment(0.5, 1.0)])


def test_gap_and_bad_ends_rejected():
    with pytest.raises(InvariantViolation):
        PiecewiseFn([Segment(0.0, 0.4), Segment(0.5, 1.0)])
    with pytest.raises(InvariantViolation):
        PiecewiseFn([Segment(0.1, 1.0)])
    with pytest.raises(InvariantViolation):
        PiecewiseFn([Segment(0.0, 0.9)])


def test_reciprocal_term_at_zero_rejected():
    with pytest.raises(InvariantViolation):
        PiecewiseFn([Segment(0.0, 1.0, c_m1=1.0)])


def test_nonfinite_coefficient_rejected():
    with pytest.raises(InvariantViolation):
        PiecewiseFn([Segment(0.0, 1.0, c0=math.nan)])


def test_immutable():
    f = two_piece()
    with pytest.raises(AttributeError):
        f._segments = ()


def test_tiny_piece_dropped():
    f = PiecewiseFn.from_pieces([
        (0.0, 0.3, {"c0": 1.0}), (0.3, 0.3 + 1e-17, {"c0": 5.0}), (0.3, 1.0, {"c0": 2.0}),
    ])
    assert len(f.segments) == 2
    assert f.breakpoints == [0.3]


def test_jumps_detect_discontinuity():
    assert two_piece().jumps() == [0.0]
    f = PiecewiseFn.from_pieces([(0.0, 0.5, {"c0": 1.0}), (0.5, 1.0, {"c0": 3.0})])
    assert f.jumps() == [2.0]


def test_integral_matches_quadrature():
    f = PiecewiseFn.from_pieces([
        (0.0, 0.2, {"c1": 1.0, "ch": 0.5}),
        (0.2, 0.7, {"c_m1": 0.1, "c0": 0.3, "c2": -0.4}),
        (0.7, 1.0, {"c0": 1.0, "c1": -0.2}),
    ])
    from scipy.integrate import quad

    ref = sum(quad(f, a, b, epsabs=1e-14)[0] for a, b in ((0, 0.2), (0.2, 0.7), (0.7, 1.0)))
    assert f.integral() == pytest.approx(ref, abs=1e-12)


def test_reward_is_identity_minus_payment():
    p = two_piece()
    r = reward_from_payment(p)
    v = np.linspace(0, 1, 11)
    assert np.allclose(r(v), v - p(v), atol=1e-15)


def test_times_identity_rejects_quadratic():
    with pytest.raises(ValueError):
        times_identity([(0.0, 1.0, {"c2": 1.0})])


coef = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(a=coef, b=coef, c=coef, d=coef, w=st.floats(0, 1), cut=st.floats(0.05, 0.95))
def test_blend_is_pointwise_mix(a, b, c, d, w, cut):
    f = PiecewiseFn.linear(a, b)
    g = PiecewiseFn.from_pieces([(0.0, cut, {"c0": c}), (cut, 1.0, {"c1": d})])
    h = blend(f, g, w)
    v = np.linspace(0, 1, 37)
    assert np.allclose(h(v), (1 - w) * f(v) + w * g(v), atol=1e-12)


def test_blend_weight_domain():
    with pytest.raises(DomainError):
        blend(two_piece(), two_piece(), 1.5)


@settings(max_examples=60, deadline=None)
@given(cuts=st.lists(st.floats(0.01, 0.99), min_size=1, max_size=5, unique=True),
       vals=st.lists(coef, min_size=6, max_size=6))
def test_integral_additive_over_segments(cuts, vals):
    cuts = sorted(cuts)
    edges = [0.0, *cuts, 1.0]
    pieces = [(lo, hi, {"c0": vals[i], "c1": vals[-1 - i]})
              for i, (lo, hi) in enumerate(zip(edges, edges[1:]))]
    f = PiecewiseFn.from_pieces(pieces)
    ref = math.fsum(vals[i] * (hi - lo) + vals[-1 - i] * (hi * hi - lo * lo) / 2
                    for i, (lo, hi) in enumerate(zip(edges, edges[1:])) if hi - lo > 1e-15)
    assert f.integral() == pytest.approx(ref, abs=1e-12)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustinspect.adversary import (
    convex_envelope_value, dirac_bound, r_min, three_point_worst_case, two_agent_upper_bound,
    two_agent_worst_case, two_point_worst_case, worst_case_value,
)
from robustinspect.errors import DomainError, InfeasibleMomentsError
from robustinspect.hull import envelope_at, lower_hull
from robustinspect.single_agent import maximal_payment_mechanism, z_star
from robustinspect.types import MomentSet, type_grid


@pytest.mark.parametrize("mu", [0.1, 0.5, 0.9])
def test_two_point_worst_case_mean(mu):
    q = two_point_worst_case(mu)
    assert q.mean()[0] == pytest.approx(mu, abs=1e-15)
    assert q.support[0, 0] == pytest.approx(z_star(mu))


@pytest.mark.parametrize("mu", [0.05, 0.15, 0.25])
def test_three_point_worst_case_mean(mu):
    q = three_point_worst_case(mu)
    assert q.mean()[0] == pytest.approx(mu, abs=1e-14)


def test_three_point_limit():
    with pytest.raises(DomainError):
        three_point_worst_case(0.9)


def test_lp_matches_closed_form_for_maximal_payment():
    nu = type_grid(2001)
    for mu in (0.4, 0.7, 0.99):
        v, _ = worst_case_value(nu, maximal_payment_mechanism(mu).payment(nu), MomentSet((mu,)))
        assert v == pytest.approx(z_star(mu), abs=1e-6)


def test_unattainable_moments():
    # Variance 0.05 cannot be reached on support inside [0.4, 0.6].
    nu = np.array([0.4, 0.5, 0.6])
    with pytest.raises(InfeasibleMomentsError):
        worst_case_value(nu, nu, MomentSet((0.5, 0.3)))


def test_lower_hull_small_case():
    hx, hy = lower_hull([0, 1, 2, 3], [0, -1, 1, 0])
    assert hx.tolist() == [0, 1, 3]
    assert hy.tolist() == [0, -1, 0]


def test_hull_drops_collinear_and_duplicates():
    hx, _ = lower_hull([0, 0, 1, 2], [1, 0, 1, 2])
    assert hx.tolist() == [0, 2]


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), mu=st.floats(0.05, 0.95))
def test_envelope_matches_lp(seed, mu):
    rng = np.random.default_rng(seed)
    nu = type_grid(41)
    p = rng.uniform(-1, 1, nu.size)
    v, _ = worst_case_value(nu, p, MomentSet((mu,)))
    assert convex_envelope_value(nu, p, mu) == pytest.approx(v, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), mu=st.floats(0.05, 0.95))
def test_envelope_is_convex_minorant(seed, mu):
    rng = np.random.default_rng(seed)
    x = np.sort(rng.uniform(0, 1, 15))
    y = rng.normal(size=15)
    e = envelope_at(x, y, x)
    assert np.all(e <= y + 1e-12)
    hx, hy = lower_hull(x, y)
    slopes = np.diff(hy) / np.diff(hx)
    assert np.all(np.diff(slopes) > -1e-12)


@pytest.mark.parametrize("mu", [0.1, 0.3, 0.5, 0.8])
def test_two_agent_distribution_feasible(mu):
    w = two_agent_worst_case(mu)
    q = w.distribution
    assert q.weights.sum() == pytest.approx(1.0, abs=1e-10)
    assert q.mean() == pytest.approx([mu, mu], abs=1e-9)
    assert r_min(mu) <= w.r <= 1.0
    assert 0 <= w.nu_star <= 1


def test_two_agent_bound_default_sweep():
    # Frozen from a run of the default 99-point sweep.
    b = two_agent_upper_bound(np.linspace(0.01, 0.99, 99))
    assert b.mu_dprime == pytest.approx(0.0881448, abs=1e-6)
    assert b.f_dprime == pytest.approx(0.0785466, abs=1e-6)
    l1, l0 = b.lambdas()
    assert l1 == pytest.approx(0.505263, abs=1e-5)
    assert 2 * l1 + l0 == pytest.approx(1.0)
    assert np.all(b.hull <= b.g + 1e-12)
    assert b.value_at(1.0 - 1e-12) == pytest.approx(1.0, abs=1e-9)


def test_dirac_bound():
    assert dirac_bound(0.3, 3) == 0.3
    with pytest.raises(DomainError):
        dirac_bound(0.3, 2)

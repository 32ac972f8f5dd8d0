import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustinspect.adversary import three_point_worst_case, two_point_worst_case
from robustinspect.errors import DomainError
from robustinspect.single_agent import (
    approx_mid_mu, approx_small_mu, blended_mechanism, boundary_objective, clipped_linear_mechanism,
    linear_mechanism, linear_params, maximal_payment_mechanism, moment_frontier_lp, mu_prime,
    radicand, recover_maximal_payment, synthesize, three_point_maximal, three_point_mechanism,
    three_point_params, z_star,
)
from robustinspect.types import MomentSet, type_grid
from robustinspect.verify import check_feasibility

# Frozen from a 30-digit mpmath solve of the stationarity condition.
MU_PRIME = 0.3149955033
Z_PRIME = 0.186940452661

HIGH_MU = [0.32, 0.4, 0.5, 0.65, 0.8, 0.95, 0.99]


def test_z_star_closed_form():
    assert z_star(0.5) == pytest.approx(1 / 3, abs=1e-15)
    with pytest.raises(DomainError):
        z_star(1.0)


def test_boundary_constant():
    r = mu_prime()
    assert r.mu_prime == pytest.approx(MU_PRIME, abs=1e-9)
    assert r.z_prime == pytest.approx(Z_PRIME, abs=1e-11)
    assert boundary_objective(0.5) == pytest.approx((3 * math.sqrt(2) - 2) / 14, abs=1e-15)


def test_boundary_excludes_isolated_root():
    # The radicand vanishes at t = 1 but is negative just below it.
    assert radicand(1.0) == 0.0
    assert radicand(0.9) < 0.0
    assert mu_prime().t_star < 0.72


def test_linear_params_at_half():
    P = linear_params(0.5)
    assert P.lambda1 == pytest.approx(8 / 9, abs=1e-15)
    assert P.lambda0 == pytest.approx(-1 / 9, abs=1e-15)
    assert P.nu_star == pytest.approx(0.5625, abs=1e-15)
    assert P.breakpoints_ordered()


def test_two_point_window_enforced():
    with pytest.raises(DomainError, match="three_point"):
        linear_mechanism(0.2)


@pytest.mark.parametrize("mu", HIGH_MU)
@pytest.mark.parametrize("build", [linear_mechanism, clipped_linear_mechanism, maximal_payment_mechanism])
def test_two_point_family_feasible(mu, build):
    m = build(mu)
    rep = check_feasibility(m, G=801)
    assert rep.ok, rep
    assert max(m.payment.jumps(), default=0.0) < 1e-12
    assert max(m.allocation.jumps(), default=0.0) < 1e-12


@pytest.mark.parametrize("mu", HIGH_MU)
def test_worst_case_expectation_equals_z_star(mu):
    q = two_point_worst_case(mu)
    for build in (linear_mechanism, clipped_linear_mechanism, maximal_payment_mechanism):
        assert build(mu).expected_payment(q) == pytest.approx(z_star(mu), abs=1e-12)


def test_uniform_integrals_at_half():
    # Oracles: mpmath quadrature (maximal) and exact rational arithmetic (clipped).
    assert maximal_payment_mechanism(0.5).payment.integral() == pytest.approx(0.371620656149977137631, abs=1e-14)
    assert clipped_linear_mechanism(0.5).payment.integral() == pytest.approx(49 / 144, abs=1e-15)
    assert maximal_payment_mechanism(0.5).payment(1.0) == pytest.approx(7 / 9, abs=1e-15)


@pytest.mark.parametrize("mu", HIGH_MU)
def test_maximal_dominates_linear(mu):
    nu = type_grid(1001)
    d = maximal_payment_mechanism(mu).payment(nu) - linear_mechanism(mu).payment(nu)
    assert d.min() >= -1e-12
    assert d.max() > 1e-6


@settings(max_examples=30, deadline=None)
@given(mu=st.floats(0.32, 0.99), w=st.floats(0.0, 1.0))
def test_blends_stay_feasible(mu, w):
    m = blended_mechanism(mu, w)
    assert check_feasibility(m, G=301).ok
    assert m.expected_payment(two_point_worst_case(mu)) == pytest.approx(z_star(mu), abs=1e-12)


@pytest.mark.parametrize("mu", [0.107, 0.15, 0.2])
def test_three_point_family_feasible(mu):
    for build in (three_point_mechanism, three_point_maximal):
        assert check_feasibility(build(mu), G=801).ok


def test_three_point_slack_breaks_near_upper_window_edge():
    # Known: the closed form loses IR just below 0.25 (first at about 0.2471).
    rep = check_feasibility(three_point_mechanism(0.25), G=2001)
    assert rep.min_ir_slack == pytest.approx(-2.3755e-4, rel=1e-3)
    assert check_feasibility(three_point_mechanism(0.247), G=2001).ok


def test_three_point_params_frozen():
    P = three_point_params(0.2)
    assert P.z_star == pytest.approx(0.107063403683561, abs=1e-14)
    assert P.nu_star <= P.nu_prime <= P.nu_dprime <= P.nu_bar
    assert P.breakpoints_ordered()


def test_three_point_worst_case_support_frozen():
    # mpmath oracle at mu = 0.25
    q = three_point_worst_case(0.25)
    assert q.support[:, 0] == pytest.approx([0.118319213143433, 0.392420435486855, 1.0], abs=1e-14)
    assert q.weights == pytest.approx([0.704309394217422, 0.212357272449245, 0.25 / 3], abs=1e-14)
    P = three_point_params(0.25)
    assert three_point_mechanism(0.25).expected_payment(q) == pytest.approx(P.z_star, abs=1e-14)


def test_three_point_window():
    with pytest.raises(DomainError):
        three_point_mechanism(0.3)


def test_synthesize_dispatch():
    assert synthesize(0.5, "maximal").rule == "maximal"
    with pytest.raises(DomainError):
        synthesize(0.5, "quadratic")


@pytest.mark.parametrize("G", [501, 2001])
def test_recovery_matches_closed_form(G):
    m = maximal_payment_mechanism(0.5)
    nu, p = recover_maximal_payment(m.allocation, G)
    assert np.abs(p - m.payment(nu)).max() <= 2.0 / G


def test_recovery_rejects_decreasing_allocation():
    with pytest.raises(DomainError, match="decreases"):
        recover_maximal_payment(np.linspace(1, 0, 11), 11)


# (value - 1/3) * G measured at G = 26, 51, 101, 201: 0.0069, 0.0034, 0.0017, 0.0008.
@pytest.mark.parametrize("G", [26, 51, 101])
def test_frontier_converges(G):
    r = moment_frontier_lp(MomentSet((0.5,)), G)
    assert r.value >= 1 / 3 - 1e-9
    assert (r.value - 1 / 3) * G <= 0.01
    assert r.lambdas[0] <= 0


def test_frontier_two_moments_not_worse():
    one = moment_frontier_lp(MomentSet((0.5,)), 101).value
    two = moment_frontier_lp(MomentSet((0.5, 1 / 3)), 101).value
    assert two >= one - 1e-9


def test_guarantees():
    assert approx_mid_mu(mu_prime().mu_prime).rho == pytest.approx(1.0, abs=1e-12)
    g = approx_small_mu(0.02)
    assert g.rho == pytest.approx(0.4623, abs=1e-4)
    assert approx_small_mu(0.107).c == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        approx_small_mu(0.2)
    with pytest.raises(DomainError):
        approx_mid_mu(0.2)

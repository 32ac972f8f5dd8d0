import numpy as np
import pytest

from robustinspect.errors import DomainError
from robustinspect.experiments import (
    contamination, default_guarantee_grid, first_crossing, guarantee_curves, nominal_optimal_lp,
    posted_price_discrete, posted_price_uniform, split_atom, uniform_comparison, uniform_prior,
    worst_case_on_grid,
)
from robustinspect.types import GridDistribution, type_grid


def test_posted_price():
    assert posted_price_uniform() == (0.5, 0.25)
    q = GridDistribution.on_grid([0.2, 0.6, 1.0], [0.5, 0.3, 0.2])
    assert posted_price_discrete(q) == pytest.approx((0.6, 0.3))


def test_nominal_lp_two_point_prior():
    # Hand solution: low type gets a quarter unit at price 1/16, high type pays 1.
    q = GridDistribution.on_grid([0.25, 1.0], [0.5, 0.5])
    r = nominal_optimal_lp(q)
    assert r.value == pytest.approx(17 / 32, abs=1e-9)
    assert r.x == pytest.approx([0.25, 1.0], abs=1e-9)


def test_nominal_lp_engines_agree():
    q = uniform_prior(30)
    a = nominal_optimal_lp(q, method="simplex").value
    b = nominal_optimal_lp(q, method="highs").value
    assert a == pytest.approx(b, abs=1e-9)


def test_uniform_comparison_rows():
    rows = dict(uniform_comparison())
    assert rows["posted_price"] == 0.25
    assert rows["linear"] == pytest.approx(1 / 3, abs=1e-15)
    assert rows["clipped_linear"] == pytest.approx(49 / 144, abs=1e-15)
    assert rows["maximal"] == pytest.approx(0.37162065614997714, abs=1e-14)
    assert rows["nominal_optimal"] == pytest.approx(0.38081512423603564, abs=1e-9)


def test_split_atom_preserves_mass_and_mean():
    nu = type_grid(10)
    w = split_atom(nu, 0.3, 0.7)
    assert w.sum() == pytest.approx(0.7)
    assert w @ nu == pytest.approx(0.7 * 0.3)
    w = split_atom(nu, nu[4], 0.5)
    assert w[4] == 0.5


def test_worst_case_atom_on_100_grid():
    nu = type_grid(100)
    w = worst_case_on_grid(nu)
    assert np.count_nonzero(w) == 2
    assert w @ nu == pytest.approx(0.5, abs=1e-12)


def test_first_crossing():
    eps = np.array([0.0, 0.5, 1.0])
    assert first_crossing(eps, np.array([-1.0, 1.0, 2.0])) == pytest.approx(0.25)
    assert first_crossing(eps, np.array([1.0, 2.0, 3.0])) is None


def test_small_contamination_run():
    # G - 1 divisible by 3 puts the 1/3 atom on the grid.
    run = contamination(G=31, eps_steps=11)
    assert run.perf_linear[-1] == pytest.approx(1.0, abs=1e-6)
    assert run.perf_maximal[-1] == pytest.approx(1.0, abs=1e-6)
    assert np.all(run.perf_nominal <= 1 + 1e-9)
    assert run.perf_nominal[0] == pytest.approx(1.0)
    head = run.to_csv().splitlines()[0]
    assert head == "eps,perf_nominal,perf_linear,perf_maximal"
    assert "perf_at_full_contamination" in run.summary()


def test_contamination_arguments():
    with pytest.raises(DomainError):
        contamination(G=5)
    with pytest.raises(DomainError):
        contamination(G=30, eps_steps=1)


def test_guarantee_curves():
    text = guarantee_curves(default_guarantee_grid(5))
    lines = text.splitlines()
    assert lines[0] == "mu,rho,c,b,z_approx"
    assert len(lines) == 11
    with pytest.raises(DomainError):
        guarantee_curves([0.2])

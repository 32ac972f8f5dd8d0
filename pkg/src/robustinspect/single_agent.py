"""Closed-form single-agent mechanisms, their boundary constant, and the frontier LP.

Two families are built here.  The two-point family covers means at or above
the boundary ``mu'`` (see :func:`mu_prime`) and comes with a linear payment,
a clipped payment, blends of the two, and a maximal payment.  The
three-point family covers means in ``[0.107, 0.25]``.  Below and between the
windows, :func:`approx_small_mu` and :func:`approx_mid_mu` report how well a
mechanism tuned at a window edge does.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, NumericalError
from .lp import GE, LE, LpBuilder, solve
from .piecewise import PiecewiseFn, blend, times_identity
from .types import MechanismParams, MomentSet, SingleAgentMechanism, type_grid

THREE_POINT_LO = 0.107
THREE_POINT_HI = 0.25


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not 0.0 < mu < 1.0:
        raise DomainError(f"mean mu={mu!r} must lie in (0, 1)")
    return mu


def z_star(mu: float) -> float:
    """Worst-case optimal revenue mu / (2 - mu) for means where the two-point bound binds."""
    mu = _check_mu(mu)
    return mu / (2.0 - mu)


# ------------------------------------------------------------------ boundary


@dataclass(frozen=True)
class MuPrimeResult:
    z_prime: float
    t_star: float
    mu_prime: float


def radicand(t):
    return t**4 + 2 * t**2 - 6 * t + 3


def boundary_objective(t):
    """Objective whose maximum over feasible t defines the boundary mean."""
    r = radicand(t)
    return ((3 * t * t - 2 * t) + t * np.sqrt(2 * np.maximum(r, 0.0))) / (2 - t * t)


@lru_cache(maxsize=1)
def mu_prime(scan_points: int = 10_000) -> MuPrimeResult:
    """Maximize the boundary objective over the feasible component containing t = 1/2.

    The radicand factors as (t - 1)(t^3 + t^2 + 3t - 3): it is nonnegative on
    [0, t_c] with t_c ~ 0.7113 and again only at the isolated point t = 1,
    which is excluded.
    """
    ts = np.linspace(0.0, 1.0, scan_points + 1)
    feas = radicand(ts) >= 0.0
    i_half = int(np.searchsorted(ts, 0.5))
    lo = i_half
    while lo > 0 and feas[lo - 1]:
        lo -= 1
    hi = i_half
    while hi < len(ts) - 1 and feas[hi + 1]:
        hi += 1
    vals = boundary_objective(ts[lo:hi + 1])
    k = lo + int(np.argmax(vals))
    if not lo < k < hi:
        raise NumericalError("boundary objective peaks at the edge of the scan")
    def neg(t):
        return -boundary_objective(t) if radicand(t) >= 0 else np.inf

    res = minimize_scalar(
        neg, bracket=(ts[k - 1], ts[k], ts[k + 1]), method="golden",
        options={"xtol": 1e-11},
    )
    t_star = float(res.x)
    z = float(boundary_objective(t_star))
    return MuPrimeResult(z_prime=z, t_star=t_star, mu_prime=2 * z / (z + 1))


# ----------------------------------------------------------- two-point family


def linear_params(mu: float) -> MechanismParams:
    mu = _check_mu(mu)
    zs = mu / (2.0 - mu)
    l1 = 2.0 * (zs / mu) ** 2
    l0 = -zs * zs
    return MechanismParams(
        mu=mu, z_star=zs, lambda1=l1, lambda0=l0,
        nu_low=mu * mu, nu_circ=zs, nu_star=(mu * (2.0 - mu)) ** 2, nu_bar=l1 + l0,
        family="linear",
    )


def _require_linear_window(mu: float) -> None:
    mp = mu_prime().mu_prime
    if not mp <= mu < 1.0:
        raise DomainError(
            f"mu={mu!r} is below mu'={mp:.6f}; the two-point mechanism is not optimal there. "
            "Use three_point_mechanism (0.107 <= mu <= 0.25) or approx_mid_mu/approx_small_mu."
        )


def linear_allocation(P: MechanismParams) -> PiecewiseFn:
    mu, l1, l0, zs = P.mu, P.lambda1, P.lambda0, P.z_star
    return PiecewiseFn.from_pieces([
        (0.0, P.nu_low, {"c1": l1 / (2 * mu * mu)}),
        (P.nu_low, P.nu_circ, {"c0": l1, "c_m1": l0}),
        (P.nu_circ, P.nu_bar, {"c0": l1 - 2 * zs, "c1": 1.0}),
        (P.nu_bar, 1.0, {"c0": 1.0}),
    ])


def linear_mechanism(mu: float) -> SingleAgentMechanism:
    mu = _check_mu(mu)
    _require_linear_window(mu)
    P = linear_params(mu)
    return SingleAgentMechanism(
        linear_allocation(P), PiecewiseFn.linear(P.lambda1, P.lambda0), P, rule="linear",
    )


def clipped_payment(P: MechanismParams) -> PiecewiseFn:
    cut = -P.lambda0 / P.lambda1
    return PiecewiseFn.from_pieces([
        (0.0, cut, {}),
        (cut, 1.0, {"c0": P.lambda0, "c1": P.lambda1}),
    ])


def clipped_linear_mechanism(mu: float) -> SingleAgentMechanism:
    mu = _check_mu(mu)
    _require_linear_window(mu)
    P = linear_params(mu)
    return SingleAgentMechanism(linear_allocation(P), clipped_payment(P), P, rule="clipped")


def blended_mechanism(mu: float, weight: float) -> SingleAgentMechanism:
    """Linear payment blended toward the clipped one; weight 0 is linear, 1 is clipped."""
    lin = linear_mechanism(mu)
    clip = clipped_payment(lin.params)
    return SingleAgentMechanism(
        lin.allocation, blend(lin.payment, clip, weight), lin.params, rule=f"blend:{weight!r}",
    )


def maximal_payment(P: MechanismParams) -> PiecewiseFn:
    mu, l1, l0, zs = P.mu, P.lambda1, P.lambda0, P.z_star
    return PiecewiseFn.from_pieces([
        (0.0, P.nu_low, {"c2": l1 / (2 * mu * mu)}),
        (P.nu_low, P.nu_circ, {"c0": l0, "c1": l1}),
        (P.nu_circ, P.nu_star, {"c1": l1 - 2 * zs, "c2": 1.0}),
        (P.nu_star, P.nu_bar, {"c1": -2 * zs, "c2": 1.0, "ch": 2 * zs}),
        (P.nu_bar, 1.0, {"c1": 1.0 - l1, "ch": 2 * zs}),
    ])


def maximal_payment_mechanism(mu: float) -> SingleAgentMechanism:
    mu = _check_mu(mu)
    _require_linear_window(mu)
    P = linear_params(mu)
    return SingleAgentMechanism(linear_allocation(P), maximal_payment(P), P, rule="maximal")


# --------------------------------------------------------- three-point family


def three_point_params(mu: float, check_window: bool = True) -> MechanismParams:
    mu = _check_mu(mu)
    if check_window and not THREE_POINT_LO <= mu <= THREE_POINT_HI:
        raise DomainError(
            f"mu={mu!r} outside the three-point window [{THREE_POINT_LO}, {THREE_POINT_HI}]"
        )
    d = mu / (3.0 - mu)
    sd = math.sqrt(d)
    l0 = -d * sd * (sd + 1.0)
    l1 = (sd + 1.0) ** 2 / 3.0 - l0 / mu
    nu_bar = l1 + l0
    if nu_bar > 1.0:
        raise NumericalError(f"nu_bar={nu_bar!r} exceeds 1 at mu={mu!r}")
    nu_star = 2.0 - l1 - 2.0 * math.sqrt(1.0 - nu_bar)
    tau = l1 - nu_star + nu_bar - 1.0
    nu_low = -2.0 * l0 / l1
    disc = l0 * l0 + tau * l0 * nu_star
    if disc < -1e-12:
        raise NumericalError(
            f"radicand {disc:.3g} < 0 at mu={mu!r}: parameters leave the validity window"
        )
    # Rationalized root, stable when tau is small.
    nu_circ = -l0 * nu_star / (-l0 + math.sqrt(max(disc, 0.0)))
    return MechanismParams(
        mu=mu, z_star=mu * (sd + 1.0) ** 2 / 3.0, lambda1=l1, lambda0=l0,
        nu_low=nu_low, nu_circ=nu_circ, nu_star=nu_star, nu_bar=nu_bar,
        family="three_point", tau=tau,
        nu_prime=-nu_low**2 / l0, nu_dprime=-nu_circ**2 / l0,
    )


def three_point_allocation(P: MechanismParams) -> PiecewiseFn:
    l1, l0 = P.lambda1, P.lambda0
    return PiecewiseFn.from_pieces([
        (0.0, P.nu_low, {"c1": -l0 / P.nu_low**2}),
        (P.nu_low, P.nu_circ, {"c0": l1, "c_m1": l0}),
        (P.nu_circ, P.nu_star, {"c1": -l0 / P.nu_circ**2, "c0": l1 + 2 * l0 / P.nu_circ}),
        (P.nu_star, P.nu_bar, {"c1": 1.0, "c0": 1.0 - P.nu_bar}),
        (P.nu_bar, 1.0, {"c0": 1.0}),
    ])


def three_point_mechanism(mu: float) -> SingleAgentMechanism:
    P = three_point_params(mu)
    return SingleAgentMechanism(
        three_point_allocation(P), PiecewiseFn.linear(P.lambda1, P.lambda0), P, rule="three-point",
    )


def three_point_maximal_payment(P: MechanismParams, x: PiecewiseFn) -> PiecewiseFn:
    pieces = times_identity(x.restrict(0.0, P.nu_prime))
    pieces += [
        (P.nu_prime, P.nu_dprime,
         {"c1": 1.0 - P.nu_bar - P.lambda1, "c2": 1.0, "ch": 2.0 * math.sqrt(-P.lambda0)}),
        (P.nu_dprime, P.nu_bar, {"c0": P.nu_star, "c1": -P.nu_star, "c2": 1.0}),
        (P.nu_bar, 1.0, {"c0": P.nu_star, "c1": P.nu_bar - P.nu_star}),
    ]
    return PiecewiseFn.from_pieces(pieces)


def three_point_maximal(mu: float) -> SingleAgentMechanism:
    P = three_point_params(mu)
    x = three_point_allocation(P)
    return SingleAgentMechanism(x, three_point_maximal_payment(P, x), P, rule="three-point-maximal")


RULES = {
    "linear": linear_mechanism,
    "clipped": clipped_linear_mechanism,
    "maximal": maximal_payment_mechanism,
    "three-point": three_point_mechanism,
    "three-point-maximal": three_point_maximal,
}


def synthesize(mu: float, rule: str) -> SingleAgentMechanism:
    if rule not in RULES:
        raise DomainError(f"unknown rule {rule!r}; choose from {sorted(RULES)}")
    return RULES[rule](mu)


# ---------------------------------------------------------- payment recovery


def recover_maximal_payment(x, G: int, chunk: int = 512) -> tuple[np.ndarray, np.ndarray]:
    """Largest IC/IR payment for allocation ``x`` on the G-point grid.

    ``x`` is a PiecewiseFn or an array of G samples.  Returns (types, payments)
    where each payment is the minimum over grid reports at or below the type.
    """
    nu = type_grid(G)
    xs = x(nu) if isinstance(x, PiecewiseFn) else np.asarray(x, dtype=float)
    if xs.shape != (G,):
        raise DomainError(f"expected {G} allocation samples, got shape {xs.shape}")
    drops = np.flatnonzero(np.diff(xs) < -1e-12)
    if drops.size:
        i = int(drops[0])
        raise DomainError(
            f"allocation decreases between grid points {i} and {i + 1} "
            f"(nu={nu[i]:.6g}: {xs[i]:.6g} > nu={nu[i + 1]:.6g}: {xs[i + 1]:.6g})"
        )
    p = np.empty(G)
    for start in range(0, G, chunk):
        stop = min(G, start + chunk)
        v = nu[start:stop, None]
        cand = v * (xs[start:stop, None] - xs[None, :stop]) + nu[None, :stop]
        mask = np.arange(stop)[None, :] > np.arange(start, stop)[:, None]
        cand[mask] = np.inf
        p[start:stop] = cand.min(axis=1)
    return nu, p


# -------------------------------------------------------------- frontier LP


@dataclass(frozen=True)
class FrontierResult:
    lambdas: np.ndarray
    nu: np.ndarray
    x: np.ndarray
    value: float
    iterations: int


def moment_frontier_lp(k: MomentSet, G: int, method: str = "auto") -> FrontierResult:
    """Best polynomial payment lower bound on the G-point grid.

    Variables are the polynomial coefficients and the sampled allocation.
    The bound must sit below every downward-deviation payoff of each type.
    """
    if k.agents != 1:
        raise DomainError("the frontier LP is single-agent")
    if G < 3:
        raise DomainError(f"grid needs at least 3 points, got {G}")
    N = k.order
    nu = type_grid(G)
    powers = nu[:, None] ** np.arange(N + 1)[None, :]
    nl = N + 1
    b = LpBuilder(nl + G)
    b.lower[:nl] = -np.inf
    b.upper[:nl] = np.inf
    b.upper[nl:] = 1.0
    b.c[:nl] = (1.0,) + k.moments
    for i in range(G):
        for h in range(i + 1):
            cols = list(range(nl))
            vals = list(powers[i])
            if h != i:
                cols += [nl + i, nl + h]
                vals += [-nu[i], nu[i]]
            b.add_row(cols, vals, LE, nu[h])
    lp = b.build(sense="max")
    sol = solve(lp, method=method)
    if not sol.optimal:
        raise NumericalError(f"frontier LP (N={N}, G={G}) returned {sol.status}")
    lam = sol.x[:nl]
    if lam[0] > 1e-9:
        raise NumericalError(f"frontier LP gave a positive constant term {lam[0]!r}")
    return FrontierResult(lam, nu, sol.x[nl:], sol.objective, sol.iterations)


# ------------------------------------------------------------ approximations


@dataclass(frozen=True)
class PerfGuarantee:
    mu: float
    z_approx: float
    b: float
    rho: float
    c: float


def upper_bound(mu: float) -> float:
    """Smaller of the two-point and three-point worst-case revenue bounds."""
    d = mu / (3.0 - mu)
    return min(mu / (2.0 - mu), mu * (math.sqrt(d) + 1.0) ** 2 / 3.0)


def _guarantee(mu, z):
    b = upper_bound(mu)
    return PerfGuarantee(mu=mu, z_approx=z, b=b, rho=z / b, c=b - z)


def approx_small_mu(mu: float) -> PerfGuarantee:
    """Three-point mechanism tuned at the window edge 0.107, used at a smaller mean."""
    mu = float(mu)
    if not 0.0 < mu <= THREE_POINT_LO:
        raise DomainError(f"mu={mu!r} outside (0, {THREE_POINT_LO}]")
    P = three_point_params(THREE_POINT_LO)
    if mu <= P.nu_low:
        z = mu * (-P.lambda0 / P.nu_low**2) * mu
    else:
        z = P.lambda1 * mu + P.lambda0
    return _guarantee(mu, z)


def approx_mid_mu(mu: float) -> PerfGuarantee:
    """Two-point mechanism tuned at mu', used at a mean between 0.25 and mu'."""
    mu = float(mu)
    mp = mu_prime().mu_prime
    if not THREE_POINT_HI < mu <= mp:
        raise DomainError(f"mu={mu!r} outside ({THREE_POINT_HI}, {mp:.6f}]")
    P = linear_params(mp)
    return _guarantee(mu, P.lambda1 * mu + P.lambda0)

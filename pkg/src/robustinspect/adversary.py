"""Worst-case distributions and worst-case values against a fixed mechanism."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, InfeasibleMomentsError, NumericalError
from .hull import envelope_at, lower_hull
from .lp import EQ, LpBuilder, solve
from .types import GridDistribution, MomentSet

THREE_POINT_MAX_MU = (15.0 - 3.0 * math.sqrt(5.0)) / 10.0


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not 0.0 < mu < 1.0:
        raise DomainError(f"mean mu={mu!r} must lie in (0, 1)")
    return mu


def two_point_worst_case(mu: float) -> GridDistribution:
    mu = _check_mu(mu)
    return GridDistribution.on_grid([mu / (2.0 - mu), 1.0], [1.0 - mu / 2.0, mu / 2.0])


def three_point_worst_case(mu: float) -> GridDistribution:
    mu = _check_mu(mu)
    if mu > THREE_POINT_MAX_MU:
        raise DomainError(
            f"mu={mu!r} above {THREE_POINT_MAX_MU:.6f}: the middle support point would exceed 1"
        )
    d = mu / (3.0 - mu)
    sd = math.sqrt(d)
    lo, mid = d * (sd + 1.0), sd * (sd + 1.0)
    return GridDistribution.on_grid([lo, mid, 1.0], [mu / (3 * lo), mu / (3 * mid), mu / 3.0])


def worst_case_value(nu, p, moments: MomentSet, method: str = "simplex"):
    """Minimum expected payment over grid distributions matching ``moments``.

    Returns ``(value, distribution)``; the distribution is a basic optimal
    solution, so it has at most N + 1 support points.
    """
    nu = np.asarray(nu, dtype=float)
    p = np.asarray(p, dtype=float)
    if nu.shape != p.shape or nu.ndim != 1:
        raise DomainError("types and payments must be matching 1-D arrays")
    if not np.all(np.isfinite(p)):
        raise DomainError("payment samples must be finite")
    if moments.agents != 1:
        raise DomainError("worst_case_value handles one agent")
    G = nu.size
    b = LpBuilder(G)
    b.c[:] = p
    cols = np.arange(G)
    b.add_row(cols, np.ones(G), EQ, 1.0, name="mass")
    for i, k in enumerate(moments.moments, start=1):
        b.add_row(cols, nu**i, EQ, k, name=f"m{i}")
    sol = solve(b.build("min"), method=method)
    if sol.status == "infeasible":
        raise InfeasibleMomentsError(f"moments {moments.moments} not attainable on this grid")
    if not sol.optimal:
        raise NumericalError(f"adversary LP returned {sol.status}")
    q = np.clip(sol.x, 0.0, None)
    keep = q > 1e-14
    q = q[keep] / q[keep].sum()
    return sol.objective, GridDistribution.on_grid(nu[keep], q, weight_tol=1e-9)


def convex_envelope_value(nu, p, mu: float) -> float:
    """First-moment worst case via the lower convex envelope of (nu, p(nu))."""
    nu = np.asarray(nu, dtype=float)
    if not nu.min() <= mu <= nu.max():
        raise DomainError(f"mu={mu!r} outside the grid range")
    return float(envelope_at(nu, p, mu))


# ----------------------------------------------------------- two agents


@dataclass(frozen=True)
class TwoAgentWorstCase:
    mu: float
    r: float
    nu_star: float
    beta: float
    f_mu: float
    distribution: GridDistribution


def _nu_star(mu, r):
    """Positive root of r n^2 + (2r + 3 - 2mu) n - mu (r + 1/r + 2) = 0 (cancellation-free)."""
    a = r
    b = 2 * r + 3 - 2 * mu
    c = -mu * (r + 1.0 / r + 2)
    return -2 * c / (b + np.sqrt(b * b - 4 * a * c))


def _objective(mu, r):
    ns = _nu_star(mu, r)
    beta = 1.0 / (2 * ns + r + 1.0 / r + 2)
    return 2 * beta * ns * (r * r + 1.5 * r + ns + 1), ns, beta


def r_min(mu: float) -> float:
    """Smallest r for which the root stays at or below 1."""
    a, b, c = 3.0 - mu, 3.0 - 4.0 * mu, -mu
    return float(-2 * c / (b + math.sqrt(b * b - 4 * a * c)))


def lemma3_distribution(r: float, ns: float, beta: float) -> GridDistribution:
    lo = r * ns
    pts = [(lo, lo), (ns, lo), (lo, ns), (ns, ns), (1.0, lo), (lo, 1.0)]
    w = [beta / r, beta, beta, beta * r, beta * ns, beta * ns]
    return GridDistribution(np.array(pts), np.array(w), weight_tol=1e-10)


def two_agent_worst_case(mu: float, scan: int = 20_000) -> TwoAgentWorstCase:
    """Six-profile two-agent adversary, optimized over its shape parameter r."""
    mu = _check_mu(mu)
    lo = max(r_min(mu), 1e-6)
    if lo > 1.0:
        raise NumericalError(f"no feasible shape parameter at mu={mu!r}")
    rs = np.linspace(lo, 1.0, scan)
    F, ns, _ = _objective(mu, rs)
    F = np.where((ns >= 0) & (ns <= 1.0 + 1e-12), F, np.inf)
    k = int(np.argmin(F))
    if not np.isfinite(F[k]):
        raise NumericalError(f"no feasible shape parameter at mu={mu!r}")
    r = float(rs[k])
    if 0 < k < scan - 1 and F[k] < F[k - 1] and F[k] < F[k + 1]:
        res = minimize_scalar(lambda t: _objective(mu, t)[0],
                              bracket=(rs[k - 1], rs[k], rs[k + 1]), method="golden",
                              options={"xtol": 1e-10})
        if lo <= res.x <= 1.0 and res.fun <= F[k]:
            r = float(res.x)
    f, ns, beta = _objective(mu, r)
    ns = min(float(ns), 1.0)
    return TwoAgentWorstCase(mu=mu, r=r, nu_star=ns, beta=float(beta), f_mu=float(f),
                             distribution=lemma3_distribution(r, ns, float(beta)))


@dataclass(frozen=True)
class TwoAgentBound:
    mu: np.ndarray
    f: np.ndarray
    g: np.ndarray
    hull: np.ndarray
    mu_dprime: float
    f_dprime: float

    @property
    def slope(self) -> float:
        return (1.0 - self.f_dprime) / (1.0 - self.mu_dprime)

    def value_at(self, mu: float) -> float:
        if mu >= self.mu_dprime:
            return 1.0 - self.slope * (1.0 - mu)
        return float(np.interp(mu, self.mu, self.hull))

    def lambdas(self) -> tuple[float, float]:
        """Aggregate payment line through (mu'', f(mu'')) per agent and (1, 1)."""
        l1 = (1.0 - self.f_dprime) / (2.0 * (1.0 - self.mu_dprime))
        return l1, 1.0 - 2.0 * l1


def _g(mu):
    return min(two_agent_worst_case(mu).f_mu, mu)


def two_agent_upper_bound(mu_grid) -> TwoAgentBound:
    """Convex upper bound on the two-agent optimum: hull of min(f, mu) and the point (1, 1)."""
    mus = np.asarray(mu_grid, dtype=float)
    if mus.ndim != 1 or mus.size < 3 or np.any(np.diff(mus) <= 0):
        raise DomainError("mu grid must be ascending with at least 3 points")
    if mus[0] <= 0.0 or mus[-1] >= 1.0:
        raise DomainError("mu grid must lie inside (0, 1)")
    f = np.array([two_agent_worst_case(m).f_mu for m in mus])
    g = np.minimum(f, mus)
    slopes = (1.0 - g) / (1.0 - mus)
    k = int(np.argmax(slopes))
    mu_dp = float(mus[k])
    if 0 < k < mus.size - 1:
        res = minimize_scalar(lambda m: -(1.0 - _g(m)) / (1.0 - m),
                              bracket=(mus[k - 1], mus[k], mus[k + 1]), method="golden",
                              options={"xtol": 1e-9})
        if mus[k - 1] <= res.x <= mus[k + 1] and -res.fun >= slopes[k]:
            mu_dp = float(res.x)
    f_dp = _g(mu_dp)
    hx, hy = lower_hull(np.append(mus, [mu_dp, 1.0]), np.append(g, [f_dp, 1.0]))
    hull = np.interp(mus, hx, hy)
    return TwoAgentBound(mu=mus, f=f, g=g, hull=hull, mu_dprime=mu_dp, f_dprime=f_dp)


def dirac_bound(mu: float, J: int) -> float:
    """With three or more agents the point mass at the mean is the worst case."""
    if J < 3:
        raise DomainError(f"dirac_bound needs at least 3 agents, got {J}")
    return _check_mu(mu)

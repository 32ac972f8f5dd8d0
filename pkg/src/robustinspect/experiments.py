"""Numerical studies: uniform-prior comparison, contamination sweep, guarantee curves."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .adversary import two_point_worst_case
from .errors import DomainError, NumericalError
from .lp import LE, LpBuilder, solve
from .single_agent import (
    THREE_POINT_HI, THREE_POINT_LO, approx_mid_mu, approx_small_mu,
    clipped_linear_mechanism, linear_mechanism, maximal_payment_mechanism, mu_prime,
)
from .types import GridDistribution, type_grid


@dataclass(frozen=True)
class NominalResult:
    nu: np.ndarray
    x: np.ndarray
    p: np.ndarray
    value: float


def nominal_optimal_lp(prior: GridDistribution, method: str = "auto") -> NominalResult:
    """Revenue-optimal mechanism for a known discrete prior.

    Every support point is a type (zero weights allowed).  Constraints: IC for
    each ordered pair of types, IR, and 0 <= x <= 1.
    """
    if prior.dims != 1:
        raise DomainError("nominal LP is single-agent")
    nu = prior.support[:, 0]
    order = np.argsort(nu, kind="stable")
    nu = nu[order]
    w = prior.weights[order]
    if np.any(np.diff(nu) <= 0):
        raise DomainError("prior support points must be distinct")
    G = nu.size
    b = LpBuilder(2 * G)
    b.upper[:G] = 1.0
    b.lower[G:] = -np.inf
    b.c[G:] = w
    k, h = np.meshgrid(np.arange(G), np.arange(G), indexing="ij")
    mask = k != h
    k, h = k[mask], h[mask]
    # p(v_k) <= v_k (x(v_k) - x(v_h)) + v_h
    b.add_rows(np.column_stack([G + k, k, h]),
               np.column_stack([np.ones(k.size), -nu[k], nu[k]]), LE, nu[h], name="ic")
    idx = np.arange(G)
    b.add_rows(np.column_stack([G + idx, idx]), np.column_stack([np.ones(G), -nu]), LE, 0.0, name="ir")
    sol = solve(b.build("max"), method=method)
    if not sol.optimal:
        raise NumericalError(f"nominal LP returned {sol.status}")
    return NominalResult(nu, sol.x[:G], sol.x[G:], sol.objective)


def posted_price_uniform(thresholds: int = 1001) -> tuple[float, float]:
    """Best take-it-or-leave-it price under the uniform prior on [0, 1].

    Scans grid thresholds t (revenue t (1 - t)); returns (price, revenue).
    """
    t = type_grid(thresholds)
    rev = t * (1.0 - t)
    k = int(np.argmax(rev))
    return float(t[k]), float(rev[k])


def posted_price_discrete(prior: GridDistribution) -> tuple[float, float]:
    """Best posted price among support points of a discrete prior."""
    nu = prior.support[:, 0]
    order = np.argsort(nu)
    nu, w = nu[order], prior.weights[order]
    survival = np.cumsum(w[::-1])[::-1]
    rev = nu * survival
    k = int(np.argmax(rev))
    return float(nu[k]), float(rev[k])


def uniform_prior(G: int) -> GridDistribution:
    """G equidistant points with equal weight 1/G (endpoints included)."""
    return GridDistribution.on_grid(type_grid(G), np.full(G, 1.0 / G))


def uniform_comparison(G_nominal: int = 100, method: str = "auto") -> list[tuple[str, float]]:
    """Expected revenue of each rule under the uniform prior with mean 1/2."""
    mu = 0.5
    rows = [("posted_price", posted_price_uniform()[1])]
    for name, build in (("linear", linear_mechanism), ("clipped_linear", clipped_linear_mechanism),
                        ("maximal", maximal_payment_mechanism)):
        rows.append((name, build(mu).payment.integral()))
    rows.append(("nominal_optimal", nominal_optimal_lp(uniform_prior(G_nominal), method=method).value))
    return rows


def comparison_csv(rows) -> str:
    return "rule,expected_payment\n" + "".join(f"{n},{v:.17g}\n" for n, v in rows)


# ------------------------------------------------------------ contamination


def split_atom(nu: np.ndarray, point: float, mass: float) -> np.ndarray:
    """Weights on ``nu`` placing ``mass`` at ``point`` with its mean preserved.

    An on-grid point (within 1e-12) keeps its whole mass; otherwise the mass
    is split between the two bracketing grid points.
    """
    w = np.zeros_like(nu)
    i = int(np.searchsorted(nu, point))
    if i < nu.size and abs(nu[i] - point) <= 1e-12:
        w[i] = mass
        return w
    if i > 0 and abs(nu[i - 1] - point) <= 1e-12:
        w[i - 1] = mass
        return w
    if i == 0 or i == nu.size:
        raise DomainError(f"point {point!r} outside the grid")
    lo, hi = nu[i - 1], nu[i]
    w[i - 1] = mass * (hi - point) / (hi - lo)
    w[i] = mass * (point - lo) / (hi - lo)
    return w


def worst_case_on_grid(nu: np.ndarray, mu: float = 0.5) -> np.ndarray:
    wc = two_point_worst_case(mu)
    w = np.zeros_like(nu)
    for pt, mass in zip(wc.support[:, 0], wc.weights):
        w += split_atom(nu, float(pt), float(mass))
    return w


@dataclass(frozen=True)
class ContaminationRun:
    G: int
    eps: np.ndarray
    value_nominal: np.ndarray
    value_linear: np.ndarray
    value_maximal: np.ndarray
    value_optimal: np.ndarray
    eps1: float | None
    eps2: float | None

    @property
    def perf_nominal(self):
        return self.value_nominal / self.value_optimal

    @property
    def perf_linear(self):
        return self.value_linear / self.value_optimal

    @property
    def perf_maximal(self):
        return self.value_maximal / self.value_optimal

    def to_csv(self) -> str:
        lines = ["eps,perf_nominal,perf_linear,perf_maximal"]
        for row in zip(self.eps, self.perf_nominal, self.perf_linear, self.perf_maximal):
            lines.append(",".join(f"{v:.17g}" for v in row))
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        return {
            "grid": self.G,
            "eps_steps": int(self.eps.size),
            "eps1_maximal_beats_nominal": self.eps1,
            "eps2_nominal_below_both": self.eps2,
            "perf_at_full_contamination": {
                "linear": float(self.perf_linear[-1]),
                "maximal": float(self.perf_maximal[-1]),
                "nominal": float(self.perf_nominal[-1]),
            },
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=1) + "\n"


def first_crossing(eps: np.ndarray, diff: np.ndarray) -> float | None:
    """First eps where ``diff`` turns from negative to nonnegative (linear interpolation)."""
    for k in range(len(eps) - 1):
        a, b = diff[k], diff[k + 1]
        if a < 0.0 <= b:
            return float(eps[k] - a * (eps[k + 1] - eps[k]) / (b - a))
    return None


def contamination(G: int = 100, eps_steps: int = 101, method: str = "auto") -> ContaminationRun:
    """Mix the uniform prior with the mean-1/2 worst case and track relative revenue."""
    if G < 10:
        raise DomainError(f"grid needs at least 10 points, got {G}")
    if eps_steps < 2:
        raise DomainError("need at least two contamination levels")
    nu = type_grid(G)
    qN = np.full(G, 1.0 / G)
    qW = worst_case_on_grid(nu)
    nominal = nominal_optimal_lp(GridDistribution.on_grid(nu, qN), method=method)
    p_lin = linear_mechanism(0.5).payment(nu)
    p_max = maximal_payment_mechanism(0.5).payment(nu)
    eps = np.linspace(0.0, 1.0, eps_steps)
    v_nom, v_lin, v_max, v_opt = (np.empty(eps_steps) for _ in range(4))
    for i, e in enumerate(eps):
        q = (1.0 - e) * qN + e * qW
        v_nom[i] = q @ nominal.p
        v_lin[i] = q @ p_lin
        v_max[i] = q @ p_max
        v_opt[i] = nominal.value if e == 0.0 else nominal_optimal_lp(
            GridDistribution.on_grid(nu, q, weight_tol=1e-12), method=method).value
    eps1 = first_crossing(eps, (v_max - v_nom) / v_opt)
    eps2 = first_crossing(eps, (np.minimum(v_lin, v_max) - v_nom) / v_opt)
    return ContaminationRun(G, eps, v_nom, v_lin, v_max, v_opt, eps1, eps2)


# -------------------------------------------------------- guarantee curves


def guarantee_rows(mu_grid) -> list:
    rows = []
    mp = mu_prime().mu_prime
    for mu in mu_grid:
        mu = float(mu)
        if 0.0 < mu <= THREE_POINT_LO:
            g = approx_small_mu(mu)
        elif THREE_POINT_HI < mu <= mp:
            g = approx_mid_mu(mu)
        else:
            raise DomainError(
                f"mu={mu!r} outside (0, {THREE_POINT_LO}] and ({THREE_POINT_HI}, {mp:.6f}]"
            )
        rows.append(g)
    return rows


def guarantee_curves(mu_grid) -> str:
    lines = ["mu,rho,c,b,z_approx"]
    for g in guarantee_rows(mu_grid):
        lines.append(f"{g.mu:.17g},{g.rho:.17g},{g.c:.17g},{g.b:.17g},{g.z_approx:.17g}")
    return "\n".join(lines) + "\n"


def default_guarantee_grid(n: int = 50) -> np.ndarray:
    mp = mu_prime().mu_prime
    small = np.linspace(THREE_POINT_LO / n, THREE_POINT_LO, n)
    mid = np.linspace(THREE_POINT_HI, mp, n + 1)[1:]
    return np.concatenate([small, mid])

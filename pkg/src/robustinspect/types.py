"""Value objects shared by the solvers: mechanisms, distributions, moment sets, tables."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError, InvariantViolation
from .piecewise import PiecewiseFn

ALLOC_TOL = 1e-9


def type_grid(G: int) -> np.ndarray:
    """G equidistant types in [0, 1], both endpoints included."""
    if G < 2:
        raise DomainError(f"grid needs at least 2 points, got {G}")
    nu = np.arange(G, dtype=float) / (G - 1)
    nu[-1] = 1.0
    return nu


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MechanismParams:
    """Parameter block of a closed-form mechanism.

    ``family`` is ``"linear"`` for the two-point family (valid for mu >= mu')
    and ``"three_point"`` for the small-mean family.  ``nu_star`` is the
    breakpoint where the maximal payment changes regime.
    """

    mu: float
    z_star: float
    lambda1: float
    lambda0: float
    nu_low: float
    nu_circ: float
    nu_star: float
    nu_bar: float
    family: str = "linear"
    tau: Optional[float] = None
    nu_prime: Optional[float] = None
    nu_dprime: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise InvariantViolation(f"mu={self.mu!r} outside (0, 1)")
        if self.family not in ("linear", "three_point"):
            raise InvariantViolation(f"unknown mechanism family {self.family!r}")
        if self.lambda0 > 0.0:
            raise InvariantViolation(f"lambda0={self.lambda0!r} must be <= 0")
        if not self.breakpoints_ordered():
            raise InvariantViolation(f"breakpoints out of order: {self.breakpoints()}")

    def breakpoints(self) -> tuple[float, float, float, float]:
        return (self.nu_low, self.nu_circ, self.nu_star, self.nu_bar)

    def breakpoints_ordered(self, tol: float = 1e-12) -> bool:
        seq = (0.0, *self.breakpoints(), 1.0)
        return all(a <= b + tol for a, b in zip(seq, seq[1:]))

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass(frozen=True)
class SingleAgentMechanism:
    allocation: PiecewiseFn
    payment: PiecewiseFn
    params: MechanismParams
    rule: str = "linear"

    def __post_init__(self):
        xs = self.allocation(type_grid(2001))
        if xs.min() < -ALLOC_TOL or xs.max() > 1.0 + ALLOC_TOL:
            raise InvariantViolation(
                f"allocation leaves [0, 1]: range [{xs.min():.3g}, {xs.max():.3g}]"
            )

    @property
    def mu(self) -> float:
        return self.params.mu

    def sample(self, G: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(types, allocation, payment) on the G-point grid."""
        nu = type_grid(G)
        return nu, self.allocation(nu), self.payment(nu)

    def expected_payment(self, dist: "GridDistribution") -> float:
        if dist.dims != 1:
            raise DomainError("single-agent mechanisms need a one-dimensional distribution")
        return float(np.dot(dist.weights, self.payment(dist.support[:, 0])))


@dataclass(frozen=True)
class GridDistribution:
    """Finitely supported distribution on [0, 1]^J.  ``support`` has shape (n, J)."""

    support: np.ndarray
    weights: np.ndarray
    weight_tol: float = field(default=1e-12, compare=False)

    def __post_init__(self):
        s = np.asarray(self.support, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        w = np.asarray(self.weights, dtype=float)
        if s.ndim != 2 or s.shape[0] != w.shape[0] or s.shape[1] < 1:
            raise InvariantViolation(
                f"support shape {s.shape} does not match {w.shape[0]} weights"
            )
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(w))):
            raise InvariantViolation("support or weights not finite")
        if np.any(w < 0.0):
            raise InvariantViolation("negative weight")
        total = math.fsum(w)
        if abs(total - 1.0) > self.weight_tol:
            raise InvariantViolation(f"weights sum to {total!r}, expected 1")
        if s.size and (s.min() < 0.0 or s.max() > 1.0):
            raise InvariantViolation("support point outside [0, 1]^J")
        object.__setattr__(self, "support", _frozen(s))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def on_grid(cls, nu, weights, **kw) -> "GridDistribution":
        return cls(np.asarray(nu, dtype=float)[:, None], weights, **kw)

    @property
    def dims(self) -> int:
        return self.support.shape[1]

    def mean(self) -> np.ndarray:
        return self.weights @ self.support

    def moment(self, i: int, axis: int = 0) -> float:
        return float(np.dot(self.weights, self.support[:, axis] ** i))

    def expect(self, values) -> float:
        return float(np.dot(self.weights, values))

    def mix(self, other: "GridDistribution", eps: float) -> "GridDistribution":
        """(1 - eps) self + eps other, support merged without deduplication."""
        if other.dims != self.dims:
            raise DomainError("cannot mix distributions of different dimension")
        return GridDistribution(
            np.vstack([self.support, other.support]),
            np.concatenate([(1.0 - eps) * self.weights, eps * other.weights]),
            weight_tol=max(self.weight_tol, other.weight_tol),
        )


@dataclass(frozen=True)
class MomentSet:
    """First N moments per agent (one shared list in the symmetric case)."""

    moments: tuple
    agents: int = 1

    def __post_init__(self):
        ks = tuple(float(k) for k in self.moments)
        object.__setattr__(self, "moments", ks)
        if self.agents < 1:
            raise InvariantViolation("need at least one agent")
        if not ks:
            raise InvariantViolation("empty moment list")
        for i, k in enumerate(ks, start=1):
            if not 0.0 < k < 1.0:
                raise DomainError(f"moment k{i}={k!r} must lie in (0, 1)")
        if len(ks) >= 2:
            k1, k2 = ks[0], ks[1]
            if k2 < k1 * k1 or k2 > k1:
                raise DomainError(
                    f"moments ({k1!r}, {k2!r}) not attainable on [0, 1]: need k1^2 <= k2 <= k1"
                )

    @property
    def order(self) -> int:
        return len(self.moments)

    @property
    def mean(self) -> float:
        return self.moments[0]


@dataclass(frozen=True)
class MultiAgentTable:
    """LP solution tabulated on the J-dimensional grid.

    ``x``, ``p`` and ``pm`` have shape ``(G,)*J + (J,)``; the last axis is the
    agent.  An infeasible solve keeps ``status`` and leaves the arrays empty.
    """

    agents: int
    grid: int
    x: np.ndarray
    p: np.ndarray
    pm: np.ndarray
    lambda1: float
    lambda0: float
    flags: frozenset
    status: str = "optimal"
    objective: Optional[float] = None
    engine: str = ""

    def __post_init__(self):
        object.__setattr__(self, "flags", frozenset(self.flags))
        for name in ("x", "p", "pm"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.status != "optimal":
            return
        shape = (self.grid,) * self.agents + (self.agents,)
        for name in ("x", "p", "pm"):
            if getattr(self, name).shape != shape:
                raise InvariantViolation(
                    f"{name} has shape {getattr(self, name).shape}, expected {shape}"
                )
        worst = float(self.x.sum(axis=-1).max())
        if worst > 1.0 + 1e-7:
            raise InvariantViolation(f"total allocation {worst!r} exceeds 1")
        if "aggregate_polynomial_equality" in self.flags:
            gap = np.abs(self.p.sum(axis=-1) - self.aggregate_bound()).max()
            if gap > 1e-6:
                raise InvariantViolation(f"aggregate payment equality off by {gap:.3g}")

    @property
    def feasible(self) -> bool:
        return self.status == "optimal"

    def types(self) -> np.ndarray:
        return type_grid(self.grid)

    def aggregate_bound(self) -> np.ndarray:
        """lambda1 * sum(nu) + lambda0 on every scenario."""
        nu = self.types()
        mesh = np.meshgrid(*([nu] * self.agents), indexing="ij")
        return self.lambda1 * sum(mesh) + self.lambda0

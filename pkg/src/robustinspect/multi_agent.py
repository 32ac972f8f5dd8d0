"""Discretized LPs for symmetric two- and three-agent mechanisms.

Variables live on the J-dimensional grid of G points per axis.  Scenario
``s`` is the C-order flat index of the type profile; the variable of kind
``k`` (0 = allocation x, 1 = payment p, 2 = maximal payment pm) for agent
``j`` sits at column ``s * 3J + k * J + j``.

Row census, with S = G^J and A = G^(J-1) (G-1) adjacent pairs along one axis:

=============================  ==========================================
family                          rows
=============================  ==========================================
DS-IC (p and pm)                2 J S (G-1)
EP-IR (p and pm)                2 J S
total allocation <= 1           S
aggregate_polynomial_equality   2 S  (sum p equality and sum pm >= sum p)
symmetry                        3 S (J-1), plus 3 G^2 (G-1)/2 when J = 3
x_monotone_own_up               J A
x_monotone_other_down           J (J-1) A
p_monotone_own_up               J A
p_monotone_other_down           J (J-1) A
p_zero_at_zero_type             J G^(J-1)
p_increasing_in_nu2_at_top      J (J-1) G^(J-2) (G-2)
=============================  ==========================================
"""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import DomainError, SizeGuardError
from .lp import EQ, ENGINE_VERSION, GE, LE, LinearProgram, LpBuilder, solve
from .types import MultiAgentTable, type_grid

DEFAULT_NNZ_CAP = 2_000_000
X, P, PM = 0, 1, 2


@dataclass(frozen=True)
class ConstraintSet:
    aggregate_polynomial_equality: bool = True
    symmetry: bool = True
    x_monotone_own_up: bool = True
    x_monotone_other_down: bool = True
    p_monotone_own_up: bool = True
    p_monotone_other_down: bool = False
    p_zero_at_zero_type: bool = False
    p_increasing_in_nu2_at_top: bool = False

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_flags(cls, flags) -> "ConstraintSet":
        flags = set(flags)
        unknown = flags - set(cls.names())
        if unknown:
            raise DomainError(f"unknown constraint flags: {sorted(unknown)}")
        return cls(**{n: n in flags for n in cls.names()})

    @property
    def flags(self) -> frozenset:
        return frozenset(n for n in self.names() if getattr(self, n))

    def with_flags(self, **kw) -> "ConstraintSet":
        d = {n: getattr(self, n) for n in self.names()}
        d.update(kw)
        return ConstraintSet(**d)


STANDARD_FLAGS_2 = ConstraintSet()
STANDARD_FLAGS_3 = ConstraintSet(p_zero_at_zero_type=True, p_increasing_in_nu2_at_top=True)


def standard_flags(J: int) -> ConstraintSet:
    return STANDARD_FLAGS_2 if J == 2 else STANDARD_FLAGS_3


def constraint_census(J: int, G: int, cs: ConstraintSet) -> dict:
    """Row count per constraint family, from the closed-form census above."""
    S = G**J
    A = G ** (J - 1) * (G - 1)
    rows = {
        "ds_ic": 2 * J * S * (G - 1),
        "ep_ir": 2 * J * S,
        "alloc_sum": S,
    }
    if cs.aggregate_polynomial_equality:
        rows["aggregate_eq"] = S
        rows["pm_ge_p"] = S
    if cs.symmetry:
        rows["symmetry"] = 3 * S * (J - 1) + (3 * G * G * (G - 1) // 2 if J == 3 else 0)
    if cs.x_monotone_own_up:
        rows["x_monotone_own_up"] = J * A
    if cs.x_monotone_other_down:
        rows["x_monotone_other_down"] = J * (J - 1) * A
    if cs.p_monotone_own_up:
        rows["p_monotone_own_up"] = J * A
    if cs.p_monotone_other_down:
        rows["p_monotone_other_down"] = J * (J - 1) * A
    if cs.p_zero_at_zero_type:
        rows["p_zero_at_zero_type"] = J * G ** (J - 1)
    if cs.p_increasing_in_nu2_at_top:
        rows["p_increasing_in_nu2_at_top"] = J * (J - 1) * G ** (J - 2) * max(G - 2, 0)
    return rows


def _nnz_estimate(J, G, cs) -> int:
    per_row = {"ds_ic": 3, "ep_ir": 2, "alloc_sum": J, "aggregate_eq": J, "pm_ge_p": 2 * J}
    return sum(n * per_row.get(k, 2) for k, n in constraint_census(J, G, cs).items())


class _Layout:
    def __init__(self, J, G):
        self.J, self.G = J, G
        self.S = G**J
        self.shape = (G,) * J
        self.t = np.indices(self.shape).reshape(J, self.S).T  # (S, J)
        self.s = np.arange(self.S)
        self.stride = np.array([G ** (J - 1 - k) for k in range(J)])
        self.nu = type_grid(G)

    def var(self, kind, s, j):
        return s * 3 * self.J + kind * self.J + j

    def swap(self, s, a, b):
        t = self.t[s].copy()
        t[:, [a, b]] = t[:, [b, a]]
        return t @ self.stride


def build_lp(J: int, G: int, lambda1: float, lambda0: float, cs: ConstraintSet,
             nnz_cap: int = DEFAULT_NNZ_CAP) -> LinearProgram:
    if J not in (2, 3):
        raise DomainError(f"J must be 2 or 3, got {J}")
    if G < 4:
        raise DomainError(f"grid needs at least 4 points, got {G}")
    if not (np.isfinite(lambda1) and np.isfinite(lambda0)):
        raise DomainError("lambda coefficients must be finite")
    est = _nnz_estimate(J, G, cs)
    if est > nnz_cap:
        raise SizeGuardError(
            f"LP for J={J}, G={G} needs about {est} nonzeros, above the cap {nnz_cap}; use a smaller grid"
        )
    L = _Layout(J, G)
    S, nu, v = L.S, L.nu, L.var
    b = LpBuilder(3 * J * S)
    b.lower[:] = -np.inf
    b.upper[:] = np.inf
    xcols = v(X, L.s[:, None], np.arange(J)[None, :]).ravel()
    b.lower[xcols] = 0.0
    b.upper[xcols] = 1.0
    b.c[v(PM, L.s[:, None], np.arange(J)[None, :]).ravel()] = 1.0

    # DS-IC: every report on the grid, for both payment rules.
    hs = np.arange(G)
    for j in range(J):
        tj = L.t[:, j]
        ss, hh = np.meshgrid(L.s, hs, indexing="ij")
        mask = hh != tj[:, None]
        ss, hh = ss[mask], hh[mask]
        s2 = ss + (hh - L.t[ss, j]) * L.stride[j]
        vj = nu[L.t[ss, j]]
        for kind in (P, PM):
            cols = np.column_stack([v(kind, ss, j), v(X, ss, j), v(X, s2, j)])
            vals = np.column_stack([np.ones_like(vj), -vj, vj])
            b.add_rows(cols, vals, LE, nu[hh], name="ic")
    for j in range(J):
        vj = nu[L.t[:, j]]
        for kind in (P, PM):
            cols = np.column_stack([v(kind, L.s, j), v(X, L.s, j)])
            b.add_rows(cols, np.column_stack([np.ones(S), -vj]), LE, 0.0, name="ir")
    agents = np.arange(J)[None, :]
    b.add_rows(v(X, L.s[:, None], agents), 1.0, LE, 1.0, name="alloc")

    if cs.aggregate_polynomial_equality:
        rhs = lambda1 * nu[L.t].sum(axis=1) + lambda0
        b.add_rows(v(P, L.s[:, None], agents), 1.0, EQ, rhs, name="agg")
        cols = np.hstack([v(PM, L.s[:, None], agents), v(P, L.s[:, None], agents)])
        vals = np.hstack([np.ones(J), -np.ones(J)])
        b.add_rows(cols, vals, GE, 0.0, name="pmp")

    if cs.symmetry:
        for j in range(1, J):
            s2 = L.swap(L.s, 0, j)
            for kind in (X, P, PM):
                cols = np.column_stack([v(kind, L.s, j), v(kind, s2, 0)])
                b.add_rows(cols, [1.0, -1.0], EQ, 0.0, name="sym")
        if J == 3:
            sel = L.s[L.t[:, 1] < L.t[:, 2]]
            s2 = L.swap(sel, 1, 2)
            for kind in (X, P, PM):
                cols = np.column_stack([v(kind, sel, 0), v(kind, s2, 0)])
                b.add_rows(cols, [1.0, -1.0], EQ, 0.0, name="sym")

    for j in range(J):
        for k in range(J):
            sel = L.s[L.t[:, k] < G - 1]
            up = sel + L.stride[k]
            if k == j:
                if cs.x_monotone_own_up:
                    b.add_rows(np.column_stack([v(X, sel, j), v(X, up, j)]), [1.0, -1.0], LE, 0.0, name="mono")
                if cs.p_monotone_own_up:
                    b.add_rows(np.column_stack([v(P, sel, j), v(P, up, j)]), [1.0, -1.0], LE, 0.0, name="mono")
                continue
            if cs.x_monotone_other_down:
                b.add_rows(np.column_stack([v(X, up, j), v(X, sel, j)]), [1.0, -1.0], LE, 0.0, name="mono")
            if cs.p_monotone_other_down:
                b.add_rows(np.column_stack([v(P, up, j), v(P, sel, j)]), [1.0, -1.0], LE, 0.0, name="mono")
            if cs.p_increasing_in_nu2_at_top:
                top = L.s[(L.t[:, j] == G - 1) & (L.t[:, k] + 1 < G - 1)]
                b.add_rows(np.column_stack([v(P, top, j), v(P, top + L.stride[k], j)]),
                           [1.0, -1.0], LE, 0.0, name="top")
        if cs.p_zero_at_zero_type:
            zero = L.s[L.t[:, j] == 0]
            b.add_rows(v(P, zero, j)[:, None], 1.0, EQ, 0.0, name="zero")
    return b.build(sense="max")


def lambdas_for(J: int, mu_context=None) -> tuple[float, float]:
    """Aggregate payment coefficients.

    For two agents ``mu_context`` is ``(mu'', f(mu''))`` or an object with
    ``lambdas()``; when omitted the two-agent bound is computed on a default
    sweep.  Three agents always use (1/3, 0).
    """
    if J == 3:
        return 1.0 / 3.0, 0.0
    if J != 2:
        raise DomainError(f"J must be 2 or 3, got {J}")
    if mu_context is None:
        from .adversary import two_agent_upper_bound

        mu_context = two_agent_upper_bound(np.linspace(0.01, 0.99, 99))
    if hasattr(mu_context, "lambdas"):
        return mu_context.lambdas()
    mu_dp, f_dp = mu_context
    l1 = (1.0 - f_dp) / (2.0 * (1.0 - mu_dp))
    return l1, 1.0 - 2.0 * l1


def solve_multi_agent(J: int, G: int, mu_context=None, cs: ConstraintSet | None = None,
                      method: str = "highs", nnz_cap: int = DEFAULT_NNZ_CAP) -> MultiAgentTable:
    """Solve the pinned-coefficient LP.  Infeasibility is returned, not raised."""
    cs = standard_flags(J) if cs is None else cs
    l1, l0 = lambdas_for(J, mu_context)
    lp = build_lp(J, G, l1, l0, cs, nnz_cap=nnz_cap)
    sol = solve(lp, method=method)
    engine = f"{ENGINE_VERSION}:{sol.engine}"
    if not sol.optimal:
        empty = np.zeros(0)
        return MultiAgentTable(J, G, empty, empty, empty, l1, l0, cs.flags,
                               status=sol.status, engine=engine)
    vals = sol.x.reshape(G**J, 3, J)
    shape = (G,) * J + (J,)
    return MultiAgentTable(
        J, G,
        vals[:, X, :].reshape(shape), vals[:, P, :].reshape(shape), vals[:, PM, :].reshape(shape),
        l1, l0, cs.flags, status="optimal", objective=sol.objective, engine=engine,
    )


def table_residuals(t: MultiAgentTable) -> dict:
    """Constraint residuals recomputed from the table alone (positive = violated)."""
    if not t.feasible:
        raise DomainError("table holds no solution")
    J, G = t.agents, t.grid
    nu = t.types()
    out = {}
    worst_ic = -np.inf
    worst_ir = -np.inf
    for j in range(J):
        vj = nu.reshape([G if a == j else 1 for a in range(J)])
        xj = t.x[..., j]
        for pay in (t.p[..., j], t.pm[..., j]):
            worst_ir = max(worst_ir, float((pay - vj * xj).max()))
            xm = np.moveaxis(xj, j, -1)
            pm_ = np.moveaxis(pay, j, -1)[..., :, None]
            vv = nu[:, None]
            # Type nu (axis -2) reporting h (axis -1).
            slack = vv * (xm[..., :, None] - xm[..., None, :]) + nu[None, :] - pm_
            worst_ic = max(worst_ic, float((-slack).max()))
    out["ds_ic"] = worst_ic
    out["ep_ir"] = worst_ir
    out["alloc_sum"] = float(t.x.sum(axis=-1).max() - 1.0)
    out["alloc_bounds"] = float(max(-t.x.min(), t.x.max() - 1.0))
    f = t.flags
    if "aggregate_polynomial_equality" in f:
        out["aggregate_eq"] = float(np.abs(t.p.sum(axis=-1) - t.aggregate_bound()).max())
        out["pm_ge_p"] = float((t.p.sum(axis=-1) - t.pm.sum(axis=-1)).max())
    if "symmetry" in f:
        out["symmetry"] = symmetry_residual(t)
    for name, arr, sign, own in (
        ("x_monotone_own_up", t.x, 1, True),
        ("x_monotone_other_down", t.x, -1, False),
        ("p_monotone_own_up", t.p, 1, True),
        ("p_monotone_other_down", t.p, -1, False),
    ):
        if name in f:
            out[name] = monotone_residual(arr, sign, own)
    if "p_increasing_in_nu2_at_top" in f:
        out["p_increasing_in_nu2_at_top"] = top_residual(t)
    if "p_zero_at_zero_type" in f:
        out["p_zero_at_zero_type"] = float(max(
            np.abs(np.take(t.p[..., j], 0, axis=j)).max() for j in range(J)))
    return out


def monotone_residual(arr, sign: int, own: bool) -> float:
    """Largest violation of monotonicity along own (or other) axes, per agent."""
    J = arr.shape[-1]
    worst = 0.0
    for j in range(J):
        for k in range(J):
            if (k == j) != own:
                continue
            d = np.diff(arr[..., j], axis=k)
            worst = max(worst, float((-sign * d).max()))
    return worst


def top_residual(t: MultiAgentTable) -> float:
    """Violation of p_j increasing in each other type while nu_j = 1 and both types stay below 1."""
    worst = 0.0
    G = t.grid
    for j in range(t.agents):
        top = np.take(t.p[..., j], G - 1, axis=j)
        for k in range(t.agents - 1):
            d = np.diff(np.take(top, np.arange(G - 1), axis=k), axis=k)
            worst = max(worst, float((-d).max()))
    return worst


def symmetry_residual(t: MultiAgentTable) -> float:
    worst = 0.0
    for arr in (t.x, t.p, t.pm):
        for j in range(1, t.agents):
            perm = list(range(t.agents))
            perm[0], perm[j] = perm[j], perm[0]
            worst = max(worst, float(np.abs(arr[..., j] - np.transpose(arr[..., 0], perm)).max()))
        if t.agents == 3:
            worst = max(worst, float(np.abs(arr[..., 0] - np.transpose(arr[..., 0], (0, 2, 1))).max()))
    return worst


def table_surfaces(t: MultiAgentTable, fixed_coords: dict | None = None) -> str:
    """CSV slice of agent 1's allocation and payments over the two free axes.

    ``fixed_coords`` maps axis -> grid index and must pin all but two axes.
    """
    if not t.feasible:
        raise DomainError("table holds no solution")
    fixed = dict(fixed_coords or {})
    for ax, idx in fixed.items():
        if not 0 <= ax < t.agents:
            raise IndexError(f"axis {ax} out of range for {t.agents} agents")
        if not 0 <= idx < t.grid:
            raise IndexError(f"grid index {idx} out of range for G={t.grid}")
    free = [a for a in range(t.agents) if a not in fixed]
    if len(free) != 2:
        raise IndexError(f"need exactly two free axes, got {len(free)}")
    nu = t.types()
    lines = ["nu_a,nu_b,x1,p1,pm1"]
    for ia in range(t.grid):
        for ib in range(t.grid):
            idx = [0] * t.agents
            for ax, val in fixed.items():
                idx[ax] = val
            idx[free[0]], idx[free[1]] = ia, ib
            key = tuple(idx) + (0,)
            lines.append(
                f"{nu[ia]:.17g},{nu[ib]:.17g},{t.x[key] + 0.0:.17g},{t.p[key] + 0.0:.17g},{t.pm[key] + 0.0:.17g}"
            )
    return "\n".join(lines) + "\n"

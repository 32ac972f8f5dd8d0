"""Bounded-variable revised primal simplex.

Every row gets a slack, ``A x + s = b``, whose bounds encode the relation
(``<=``: s >= 0, ``>=``: s <= 0, ``=``: s = 0).  Rows whose starting slack is
out of bounds get an artificial column and phase one minimizes their sum.
The basis inverse is kept explicitly, updated by rank-one pivots and
refactorized every ``refactor`` iterations.

Pricing defaults to Dantzig's rule and falls back to the smallest-index rule
after a run of degenerate pivots, so every solve terminates.  Both rules are
deterministic, so equal inputs give equal pivot sequences.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import LpFailure
from .lp import EQ, GE, LE, LinearProgram, LpSolution, _empty

_AT_LOWER, _AT_UPPER, _FREE_ZERO, _BASIC = 0, 1, 2, 3


def _scale(A: sp.csr_matrix, passes: int = 4):
    """Alternate row and column max-abs equilibration."""
    m, n = A.shape
    r = np.ones(m)
    col = np.ones(n)
    M = A.tocsr(copy=True)
    M.data = np.abs(M.data)
    for _ in range(passes):
        rmax = (sp.diags(r) @ M @ sp.diags(col)).max(axis=1).toarray().ravel()
        rmax[rmax == 0] = 1.0
        r /= rmax
        cmax = (sp.diags(r) @ M @ sp.diags(col)).max(axis=0).toarray().ravel()
        cmax[cmax == 0] = 1.0
        col /= cmax
    return r, col


def _presolve(lp: LinearProgram):
    """Drop fixed columns and exact duplicate rows.

    Returns the kept row and column indices, the rhs shifted by the fixed
    columns, and the fixed values.  Duplicate rows keep their first copy.
    """
    fixed = lp.lower == lp.upper
    keep_cols = np.flatnonzero(~fixed)
    x_fixed = np.where(fixed, lp.lower, 0.0)
    b = lp.b - lp.A @ x_fixed
    sub = lp.A[:, keep_cols].tocsr()
    seen = {}
    keep_rows = []
    for i in range(lp.n_rows):
        lo, hi = sub.indptr[i], sub.indptr[i + 1]
        key = (sub.indices[lo:hi].tobytes(), sub.data[lo:hi].tobytes(), lp.rel[i], b[i])
        if key in seen:
            continue
        seen[key] = i
        keep_rows.append(i)
    return np.array(keep_rows, dtype=np.int64), keep_cols, b, x_fixed


def _empty_row_status(rel: str, rhs: float, tol: float) -> bool:
    if rel == LE:
        return 0.0 <= rhs + tol
    if rel == GE:
        return 0.0 >= rhs - tol
    return abs(rhs) <= tol


class _Simplex:
    def __init__(self, A, b, c, lo, up, pricing, max_iter, refactor, tol):
        self.A = A  # dense m x n, slacks and artificials included
        self.b = b
        self.c = c
        self.lo = lo
        self.up = up
        self.pricing = pricing
        self.max_iter = max_iter
        self.refactor = refactor
        self.tol = tol
        self.iterations = 0

    def setup(self, basis, state, xN):
        self.basis = np.array(basis, dtype=np.int64)
        self.state = np.array(state)
        self.x = np.array(xN, dtype=float)
        self.reinvert()

    def reinvert(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            raise LpFailure("basis matrix became singular") from None
        if not np.all(np.isfinite(self.Binv)):
            raise LpFailure("basis inverse not finite")
        nonbasic = self.state != _BASIC
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.Binv @ rhs
        self.since_refactor = 0

    def run(self, cost):
        """Iterate to optimality for ``cost``.  Returns 'optimal' or 'unbounded'."""
        degenerate_run = 0
        movable = self.lo < self.up
        while True:
            if self.iterations >= self.max_iter:
                raise LpFailure(f"simplex hit the iteration limit ({self.max_iter})")
            y = cost[self.basis] @ self.Binv
            d = cost - y @ self.A
            st = self.state
            can_up = movable & (self.x < self.up) & (((st == _AT_LOWER) | (st == _FREE_ZERO)) & (d < -self.tol))
            can_dn = movable & (self.x > self.lo) & (((st == _AT_UPPER) | (st == _FREE_ZERO)) & (d > self.tol))
            cand = np.flatnonzero(can_up | can_dn)
            if cand.size == 0:
                self.y = y
                self.d = d
                return "optimal"
            use_bland = self.pricing == "bland" or degenerate_run > 50
            if use_bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if can_up[q] else -1.0
            w = self.Binv @ self.A[:, q]
            theta, leave, leave_to_upper = self._ratio(w, direction, q)
            if theta == np.inf:
                return "unbounded"
            degenerate_run = degenerate_run + 1 if theta <= self.tol else 0
            self.x[self.basis] -= theta * direction * w
            self.x[q] += theta * direction
            self.iterations += 1
            if leave is None:
                self.state[q] = _AT_UPPER if direction > 0 else _AT_LOWER
                self.x[q] = self.up[q] if direction > 0 else self.lo[q]
                continue
            out = self.basis[leave]
            self.state[out] = _AT_UPPER if leave_to_upper else _AT_LOWER
            self.x[out] = self.up[out] if leave_to_upper else self.lo[out]
            self.basis[leave] = q
            self.state[q] = _BASIC
            piv = w[leave]
            row = self.Binv[leave] / piv
            self.Binv -= np.outer(w, row)
            self.Binv[leave] = row
            self.since_refactor += 1
            if self.since_refactor >= self.refactor:
                self.reinvert()

    def _ratio(self, w, direction, q):
        """Longest step keeping basics in bounds; ties go to the smallest index."""
        xb = self.x[self.basis]
        lo_b = self.lo[self.basis]
        up_b = self.up[self.basis]
        delta = -direction * w  # change of x_B per unit step
        theta = self.up[q] - self.lo[q]
        leave = None
        to_upper = False
        piv_tol = 1e-9
        best_idx = None
        with np.errstate(divide="ignore", invalid="ignore"):
            dec = delta < -piv_tol
            inc = delta > piv_tol
            lim = np.full(len(xb), np.inf)
            lim[dec] = np.where(np.isfinite(lo_b[dec]), (xb[dec] - lo_b[dec]) / -delta[dec], np.inf)
            lim[inc] = np.where(np.isfinite(up_b[inc]), (up_b[inc] - xb[inc]) / delta[inc], np.inf)
        lim = np.maximum(lim, 0.0)
        tmin = lim.min() if lim.size else np.inf
        if tmin < theta:
            ties = np.flatnonzero(lim <= tmin + 1e-12)
            # Prefer the largest pivot among near-ties for stability, then the smallest index.
            mags = np.abs(w[ties])
            good = ties[mags >= 0.1 * mags.max()]
            best_idx = int(good[np.argmin(self.basis[good])])
            theta = lim[best_idx]
            leave = best_idx
            to_upper = bool(inc[best_idx])
        return theta, leave, to_upper


def solve_simplex(lp: LinearProgram, pricing: str = "dantzig", max_iter: int = 50000,
                  refactor: int = 50, tol: float = 1e-9, scale: bool = True) -> LpSolution:
    if pricing not in ("dantzig", "bland"):
        raise ValueError(f"unknown pricing rule {pricing!r}")
    rows, cols, b_shift, x_fixed = _presolve(lp)
    sgn = 1.0 if lp.sense == "min" else -1.0
    A = lp.A[rows][:, cols].tocsr()
    b = b_shift[rows]
    rel = [lp.rel[i] for i in rows]
    c = sgn * lp.c[cols]
    lo = lp.lower[cols].copy()
    up = lp.upper[cols].copy()
    m, n = A.shape

    # Rows with no coefficients left are checked and dropped.
    nz = np.diff(A.indptr)
    for i in np.flatnonzero(nz == 0):
        if not _empty_row_status(rel[i], b[i], 1e-9):
            return _empty("infeasible", lp, "simplex", 0)
    live = np.flatnonzero(nz > 0)
    A = A[live]
    b = b[live]
    rel = [rel[i] for i in live]
    rows = rows[live]
    m = len(live)

    if scale and m and n:
        r_s, c_s = _scale(A)
    else:
        r_s, c_s = np.ones(m), np.ones(n)
    As = (sp.diags(r_s) @ A @ sp.diags(c_s)).toarray()
    bs = r_s * b
    cs = c * c_s
    with np.errstate(invalid="ignore"):
        los = lo / c_s
        ups = up / c_s

    # Slack bounds per relation.
    s_lo = np.array([0.0 if r == LE else (-np.inf if r == GE else 0.0) for r in rel])
    s_up = np.array([np.inf if r == LE else 0.0 for r in rel])

    # Nonbasic structural start: a finite bound, else zero (free).
    x0 = np.where(np.isfinite(los), los, np.where(np.isfinite(ups), ups, 0.0))
    st0 = np.where(np.isfinite(los), _AT_LOWER, np.where(np.isfinite(ups), _AT_UPPER, _FREE_ZERO))
    resid = bs - As @ x0
    s0 = np.clip(resid, s_lo, s_up)
    need = np.flatnonzero(np.abs(resid - s0) > 0)
    art_sign = np.sign(resid[need] - s0[need])
    k = need.size

    full = np.zeros((m, n + m + k))
    full[:, :n] = As
    full[:, n:n + m] = np.eye(m)
    for t, i in enumerate(need):
        full[i, n + m + t] = art_sign[t]
    lo_all = np.concatenate([los, s_lo, np.zeros(k)])
    up_all = np.concatenate([ups, s_up, np.full(k, np.inf)])

    x_all = np.concatenate([x0, s0, np.zeros(k)])
    state = np.concatenate([st0, np.full(m, _BASIC), np.full(k, _AT_LOWER)])
    basis = list(range(n, n + m))
    for t, i in enumerate(need):
        # Artificial replaces the slack in the basis; the slack sits at its bound.
        basis[i] = n + m + t
        state[n + m + t] = _BASIC
        s_i = n + i
        if np.isfinite(s_lo[i]) and s0[i] == s_lo[i]:
            state[s_i] = _AT_LOWER
        else:
            state[s_i] = _AT_UPPER
        x_all[s_i] = s0[i]
    eng = _Simplex(full, bs, None, lo_all, up_all, pricing, max_iter, refactor, tol)
    eng.setup(basis, state, x_all)

    if k:
        phase1 = np.zeros(n + m + k)
        phase1[n + m:] = 1.0
        eng.run(phase1)
        infeas = float(eng.x[n + m:].sum())
        if infeas > 1e-7 * (1.0 + np.abs(bs).max(initial=0.0)):
            return _empty("infeasible", lp, "simplex", eng.iterations)
        # Artificials are pinned at zero for phase two.
        eng.up[n + m:] = 0.0
        eng.x[n + m:] = np.where(eng.state[n + m:] == _BASIC, eng.x[n + m:], 0.0)

    cost = np.concatenate([cs, np.zeros(m + k)])
    status = eng.run(cost)
    if status == "unbounded":
        return _empty("unbounded", lp, "simplex", eng.iterations)
    eng.reinvert()
    y_s = cost[eng.basis] @ eng.Binv
    xs = eng.x[:n] * c_s

    x = x_fixed.copy()
    x[cols] = np.clip(xs, lp.lower[cols], lp.upper[cols])
    y = np.zeros(lp.n_rows)
    y[rows] = sgn * y_s * r_s
    d = lp.c - lp.A.T @ y
    return LpSolution("optimal", float(lp.c @ x), x, y, d, eng.iterations, "simplex")

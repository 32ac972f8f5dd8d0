"""Solver-agnostic linear programs, solutions and optimality certificates.

``solve`` dispatches to the in-house bounded-variable simplex for small
problems and to HiGHS (through :func:`scipy.optimize.linprog`) for large ones.
Both paths report duals in the same convention, ``y_i = d(objective)/d(b_i)``
in the problem's own sense, and both are checked by :func:`certificate`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import InvariantViolation, LpFailure, ParseError

LE, EQ, GE = "<=", "=", ">="
RELATIONS = (LE, EQ, GE)

# Problems with at most this many rows go to the in-house simplex under "auto".
AUTO_SIMPLEX_ROWS = 400

ENGINE_VERSION = "robustinspect-lp/1"


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """max/min c.x subject to sparse rows ``A x (rel) b`` and ``lower <= x <= upper``."""

    c: np.ndarray
    A: sp.csr_matrix
    rel: tuple
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    sense: str = "min"
    row_names: Optional[tuple] = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        A = sp.csr_matrix(self.A, dtype=float)
        b = np.array(self.b, dtype=float)
        lo = np.array(self.lower, dtype=float)
        up = np.array(self.upper, dtype=float)
        n = c.shape[0]
        if A.shape != (b.shape[0], n):
            raise InvariantViolation(f"A has shape {A.shape}, expected ({b.shape[0]}, {n})")
        if len(self.rel) != b.shape[0]:
            raise InvariantViolation("one relation per row required")
        if any(r not in RELATIONS for r in self.rel):
            raise InvariantViolation(f"relations must be in {RELATIONS}")
        if lo.shape != (n,) or up.shape != (n,):
            raise InvariantViolation("bounds must have one entry per variable")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(b)) and np.all(np.isfinite(A.data))):
            raise InvariantViolation("NaN or infinite coefficient")
        if np.any(np.isnan(lo)) or np.any(np.isnan(up)) or np.any(lo > up):
            raise InvariantViolation("inconsistent variable bounds")
        if np.any(lo == np.inf) or np.any(up == -np.inf):
            raise InvariantViolation("bound at the wrong infinity")
        if self.sense not in ("min", "max"):
            raise InvariantViolation(f"sense must be 'min' or 'max', got {self.sense!r}")
        A.sum_duplicates()
        A.sort_indices()
        for name, arr in (("c", c), ("b", b), ("lower", lo), ("upper", up)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "rel", tuple(self.rel))

    @property
    def n_vars(self) -> int:
        return self.c.shape[0]

    @property
    def n_rows(self) -> int:
        return self.b.shape[0]

    @property
    def nnz(self) -> int:
        return self.A.nnz


class LpBuilder:
    """Accumulates sparse rows; ``build`` freezes them into a LinearProgram."""

    def __init__(self, n_vars: int):
        self.n_vars = n_vars
        self.c = np.zeros(n_vars)
        self.lower = np.zeros(n_vars)
        self.upper = np.full(n_vars, np.inf)
        self._rows: list[np.ndarray] = []
        self._cols: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._rel: list[str] = []
        self._b: list[float] = []
        self._names: list[str] = []

    @property
    def n_rows(self) -> int:
        return len(self._b)

    @property
    def nnz(self) -> int:
        return sum(len(v) for v in self._vals)

    def add_row(self, cols, vals, rel: str, rhs: float, name: str = "") -> int:
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        if cols.shape != vals.shape:
            raise InvariantViolation("row index and coefficient lengths differ")
        if cols.size and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise InvariantViolation(f"row references a variable outside [0, {self.n_vars})")
        i = len(self._b)
        self._rows.append(np.full(cols.size, i, dtype=np.int64))
        self._cols.append(cols)
        self._vals.append(vals)
        self._rel.append(rel)
        self._b.append(float(rhs))
        self._names.append(name or f"r{i}")
        return i

    def add_rows(self, cols, vals, rel: str, rhs, name: str = "") -> None:
        """Append R rows at once; ``cols`` and ``vals`` have shape (R, k)."""
        cols = np.atleast_2d(np.asarray(cols, dtype=np.int64))
        vals = np.broadcast_to(np.asarray(vals, dtype=float), cols.shape)
        rhs = np.broadcast_to(np.asarray(rhs, dtype=float), (cols.shape[0],))
        if cols.size and (cols.min() < 0 or cols.max() >= self.n_vars):
            raise InvariantViolation(f"row references a variable outside [0, {self.n_vars})")
        R, k = cols.shape
        first = len(self._b)
        self._rows.append(np.repeat(np.arange(first, first + R, dtype=np.int64), k))
        self._cols.append(cols.reshape(-1))
        self._vals.append(np.array(vals, dtype=float).reshape(-1))
        self._rel.extend([rel] * R)
        self._b.extend(rhs.tolist())
        self._names.extend(f"{name or 'r'}{first + i}" for i in range(R))

    def build(self, sense: str = "min") -> LinearProgram:
        m = len(self._b)
        if m:
            rows = np.concatenate(self._rows)
            cols = np.concatenate(self._cols)
            vals = np.concatenate(self._vals)
        else:
            rows = cols = np.zeros(0, dtype=np.int64)
            vals = np.zeros(0)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, self.n_vars))
        return LinearProgram(
            self.c, A, tuple(self._rel), np.array(self._b), self.lower, self.upper,
            sense=sense, row_names=tuple(self._names),
        )


@dataclass(frozen=True)
class LpSolution:
    status: str
    objective: float
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    iterations: int
    engine: str
    certificate: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def row_activity(lp: LinearProgram, x) -> np.ndarray:
    return lp.A @ np.asarray(x, dtype=float)


def certificate(lp: LinearProgram, x, y) -> dict:
    """Residuals that certify optimality of the pair (x, y).

    All measures are relative: violations are divided by ``1 + |rhs|`` or
    ``1 + |bound|`` and the duality gap by ``1 + |objective|``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    act = row_activity(lp, x)
    scale = 1.0 + np.abs(lp.b)
    viol = np.zeros(lp.n_rows)
    rel = np.array(lp.rel)
    le, ge, eq = rel == LE, rel == GE, rel == EQ
    viol[le] = np.maximum(act[le] - lp.b[le], 0.0)
    viol[ge] = np.maximum(lp.b[ge] - act[ge], 0.0)
    viol[eq] = np.abs(act[eq] - lp.b[eq])
    row_res = float((viol / scale).max()) if lp.n_rows else 0.0
    lo_v = np.where(np.isfinite(lp.lower), np.maximum(lp.lower - x, 0.0) / (1 + np.abs(np.nan_to_num(lp.lower))), 0.0)
    up_v = np.where(np.isfinite(lp.upper), np.maximum(x - lp.upper, 0.0) / (1 + np.abs(np.nan_to_num(lp.upper))), 0.0)
    bound_res = float(max(lo_v.max(initial=0.0), up_v.max(initial=0.0)))

    # Work in minimization form: min s*c.x with duals s*y.
    s = 1.0 if lp.sense == "min" else -1.0
    ym = s * y
    d = s * lp.c - lp.A.T @ ym
    # Dual feasibility: sign of y per row, sign of d per bound status.
    dual_inf = 0.0
    if lp.n_rows:
        dual_inf = max(dual_inf, float(np.maximum(ym[le], 0.0).max(initial=0.0)))
        dual_inf = max(dual_inf, float(np.maximum(-ym[ge], 0.0).max(initial=0.0)))
    dscale = 1.0 + np.abs(lp.c)
    neg_ok = np.isfinite(lp.upper)
    pos_ok = np.isfinite(lp.lower)
    dual_inf = max(dual_inf, float((np.where(pos_ok, 0.0, np.maximum(d, 0.0)) / dscale).max(initial=0.0)))
    dual_inf = max(dual_inf, float((np.where(neg_ok, 0.0, np.maximum(-d, 0.0)) / dscale).max(initial=0.0)))

    # Complementary slackness on rows and on bounds.
    row_slack = np.abs(act - lp.b)
    cs_rows = float(np.abs(ym * row_slack).max(initial=0.0))
    dist_lo = np.where(pos_ok, x - np.nan_to_num(lp.lower, neginf=0.0), np.inf)
    dist_up = np.where(neg_ok, np.nan_to_num(lp.upper, posinf=0.0) - x, np.inf)
    dist = np.where(d > 0, dist_lo, dist_up)
    dist = np.where(np.isfinite(dist), dist, 0.0)
    cs_cols = float(np.abs(d * dist).max(initial=0.0))

    primal = float(lp.c @ x)
    lo_f = np.nan_to_num(lp.lower, neginf=0.0)
    up_f = np.nan_to_num(lp.upper, posinf=0.0)
    dual_min = float(lp.b @ ym + np.where(d > 0, d * lo_f, d * up_f).sum())
    gap = abs(s * primal - dual_min) / (1.0 + abs(primal))
    return {
        "primal_residual": max(row_res, bound_res),
        "dual_infeasibility": dual_inf,
        "complementary_slackness": max(cs_rows, cs_cols),
        "duality_gap": gap,
        "primal_objective": primal,
        "dual_objective": s * dual_min,
    }


def solve(lp: LinearProgram, method: str = "auto", **opts) -> LpSolution:
    """Solve ``lp``.  ``method`` is ``"auto"``, ``"simplex"`` or ``"highs"``.

    Infeasible and unbounded problems come back as solutions with that
    status; only engine breakdowns raise :class:`LpFailure`.
    """
    if method == "auto":
        method = "simplex" if lp.n_rows <= AUTO_SIMPLEX_ROWS else "highs"
    if method == "simplex":
        from .simplex import solve_simplex

        sol = solve_simplex(lp, **opts)
    elif method == "highs":
        sol = _solve_highs(lp)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if sol.optimal:
        cert = certificate(lp, sol.x, sol.duals)
        sol = LpSolution(sol.status, sol.objective, sol.x, sol.duals, sol.reduced_costs,
                         sol.iterations, sol.engine, cert)
    return sol


def _solve_highs(lp: LinearProgram) -> LpSolution:
    s = 1.0 if lp.sense == "min" else -1.0
    rel = np.array(lp.rel)
    ub_rows = np.flatnonzero(rel != EQ)
    eq_rows = np.flatnonzero(rel == EQ)
    flip = np.where(rel[ub_rows] == GE, -1.0, 1.0)
    A_ub = sp.diags(flip) @ lp.A[ub_rows] if ub_rows.size else None
    b_ub = flip * lp.b[ub_rows] if ub_rows.size else None
    A_eq = lp.A[eq_rows] if eq_rows.size else None
    b_eq = lp.b[eq_rows] if eq_rows.size else None
    bounds = np.column_stack([
        np.where(np.isfinite(lp.lower), lp.lower, np.nan),
        np.where(np.isfinite(lp.upper), lp.upper, np.nan),
    ])
    bounds = [tuple(None if math.isnan(v) else v for v in pair) for pair in bounds]
    res = linprog(s * lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    n = lp.n_vars
    if res.status == 2:
        return _empty("infeasible", lp, "highs", res.nit)
    if res.status == 3:
        return _empty("unbounded", lp, "highs", res.nit)
    if res.status != 0:
        raise LpFailure(f"HiGHS stopped: {res.message}", status=res.status)
    y = np.zeros(lp.n_rows)
    if ub_rows.size:
        y[ub_rows] = flip * res.ineqlin.marginals
    if eq_rows.size:
        y[eq_rows] = res.eqlin.marginals
    d = res.lower.marginals + res.upper.marginals
    x = np.asarray(res.x, dtype=float).reshape(n)
    return LpSolution("optimal", float(lp.c @ x), x, s * y, s * d, int(res.nit), "highs")


def _empty(status, lp, engine, it) -> LpSolution:
    nan = np.full(lp.n_vars, np.nan)
    return LpSolution(status, float("nan"), nan, np.full(lp.n_rows, np.nan), nan, int(it), engine)


# ---------------------------------------------------------------- text dump

_REL_CODE = {LE: "L", EQ: "E", GE: "G"}
_CODE_REL = {v: k for k, v in _REL_CODE.items()}


def _g(v: float) -> str:
    return format(float(v), ".17g")


def to_mps(lp: LinearProgram, name: str = "LP") -> str:
    """Free-format MPS text (NAME/OBJSENSE/ROWS/COLUMNS/RHS/BOUNDS/ENDATA)."""
    names = lp.row_names or tuple(f"r{i}" for i in range(lp.n_rows))
    out = [f"NAME {name}", "OBJSENSE", "    MAX" if lp.sense == "max" else "    MIN", "ROWS", " N obj"]
    out += [f" {_REL_CODE[r]} {nm}" for r, nm in zip(lp.rel, names)]
    out.append("COLUMNS")
    csc = lp.A.tocsc()
    for j in range(lp.n_vars):
        if lp.c[j] != 0.0:
            out.append(f"    x{j} obj {_g(lp.c[j])}")
        for k in range(csc.indptr[j], csc.indptr[j + 1]):
            out.append(f"    x{j} {names[csc.indices[k]]} {_g(csc.data[k])}")
        if lp.c[j] == 0.0 and csc.indptr[j] == csc.indptr[j + 1]:
            out.append(f"    x{j} obj 0")
    out.append("RHS")
    out += [f"    rhs {names[i]} {_g(v)}" for i, v in enumerate(lp.b) if v != 0.0]
    out.append("BOUNDS")
    for j in range(lp.n_vars):
        lo, up = lp.lower[j], lp.upper[j]
        if lo == up:
            out.append(f" FX bnd x{j} {_g(lo)}")
            continue
        if lo == -np.inf and up == np.inf:
            out.append(f" FR bnd x{j}")
            continue
        if lo == -np.inf:
            out.append(f" MI bnd x{j}")
        elif lo != 0.0:
            out.append(f" LO bnd x{j} {_g(lo)}")
        if up != np.inf:
            out.append(f" UP bnd x{j} {_g(up)}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def from_mps(text: str) -> LinearProgram:
    """Inverse of :func:`to_mps` (columns must be named ``x<index>``)."""
    section = None
    sense = "min"
    rows: dict[str, int] = {}
    rel: list[str] = []
    entries: list[tuple[int, int, float]] = []
    c: dict[int, float] = {}
    rhs: dict[int, float] = {}
    bounds: dict[int, list] = {}
    n = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("*"):
            continue
        if not raw[0].isspace():
            section = line.split()[0]
            if section == "ENDATA":
                break
            continue
        tok = line.split()
        try:
            if section == "OBJSENSE":
                sense = "max" if tok[0].upper() == "MAX" else "min"
            elif section == "ROWS":
                if tok[0] != "N":
                    rows[tok[1]] = len(rel)
                    rel.append(_CODE_REL[tok[0]])
            elif section == "COLUMNS":
                j = int(tok[0][1:])
                n = max(n, j + 1)
                for rname, val in zip(tok[1::2], tok[2::2]):
                    if rname == "obj":
                        c[j] = float(val)
                    else:
                        entries.append((rows[rname], j, float(val)))
            elif section == "RHS":
                for rname, val in zip(tok[1::2], tok[2::2]):
                    rhs[rows[rname]] = float(val)
            elif section == "BOUNDS":
                j = int(tok[2][1:])
                bounds.setdefault(j, []).append((tok[0], float(tok[3]) if len(tok) > 3 else None))
            else:
                raise ParseError(f"unexpected data in section {section!r}", line=lineno)
        except (KeyError, IndexError, ValueError) as exc:
            raise ParseError(f"bad MPS record: {exc}", line=lineno) from None
    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for j, items in bounds.items():
        for kind, v in items:
            if kind == "FX":
                lower[j] = upper[j] = v
            elif kind == "FR":
                lower[j], upper[j] = -np.inf, np.inf
            elif kind == "MI":
                lower[j] = -np.inf
            elif kind == "LO":
                lower[j] = v
            elif kind == "UP":
                upper[j] = v
    m = len(rel)
    r_idx = np.array([e[0] for e in entries], dtype=np.int64)
    c_idx = np.array([e[1] for e in entries], dtype=np.int64)
    vals = np.array([e[2] for e in entries])
    A = sp.csr_matrix((vals, (r_idx, c_idx)), shape=(m, n))
    cvec = np.zeros(n)
    for j, v in c.items():
        cvec[j] = v
    b = np.zeros(m)
    for i, v in rhs.items():
        b[i] = v
    names = [None] * m
    for nm, i in rows.items():
        names[i] = nm
    return LinearProgram(cvec, A, tuple(rel), b, lower, upper, sense=sense, row_names=tuple(names))

"""Grid check of incentive compatibility and individual rationality."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .types import SingleAgentMechanism, type_grid

FEAS_TOL = 1e-8


@dataclass(frozen=True)
class FeasibilityReport:
    grid: int
    min_ic_slack: float
    ic_argmin: tuple  # (true type, report)
    min_ir_slack: float
    ir_argmin: float
    alloc_min: float
    alloc_max: float

    @property
    def ok(self) -> bool:
        return (
            self.min_ic_slack >= -FEAS_TOL
            and self.min_ir_slack >= -FEAS_TOL
            and self.alloc_min >= -1e-9
            and self.alloc_max <= 1.0 + 1e-9
        )

    def as_dict(self) -> dict:
        return {
            "grid": self.grid,
            "min_ic_slack": self.min_ic_slack,
            "ic_argmin": list(self.ic_argmin),
            "min_ir_slack": self.min_ir_slack,
            "ir_argmin": self.ir_argmin,
            "alloc_min": self.alloc_min,
            "alloc_max": self.alloc_max,
            "ok": self.ok,
        }


def ic_ir_slacks(nu, x, p, chunk: int = 512):
    """Minimum IC slack (with its arg pair) and minimum IR slack over sampled values.

    IC slack of type v reporting w is v (x(v) - x(w)) + w - p(v), over all w.
    """
    nu = np.asarray(nu, dtype=float)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    best = np.inf
    arg = (0, 0)
    for start in range(0, len(nu), chunk):
        stop = min(len(nu), start + chunk)
        v = nu[start:stop, None]
        s = v * (x[start:stop, None] - x[None, :]) + nu[None, :] - p[start:stop, None]
        k = int(np.argmin(s))
        if s.flat[k] < best:
            best = float(s.flat[k])
            i, j = divmod(k, len(nu))
            arg = (start + i, j)
    ir = nu * x - p
    i_ir = int(np.argmin(ir))
    return best, arg, float(ir[i_ir]), i_ir


def check_feasibility(mech: SingleAgentMechanism, G: int = 2001) -> FeasibilityReport:
    nu = type_grid(G)
    x = mech.allocation(nu)
    p = mech.payment(nu)
    ic, (i, j), ir, k = ic_ir_slacks(nu, x, p)
    return FeasibilityReport(
        grid=G,
        min_ic_slack=ic,
        ic_argmin=(float(nu[i]), float(nu[j])),
        min_ir_slack=ir,
        ir_argmin=float(nu[k]),
        alloc_min=float(x.min()),
        alloc_max=float(x.max()),
    )

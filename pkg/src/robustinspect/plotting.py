"""Matplotlib figures written next to the CSV outputs.

SVG output is made byte-stable by fixing the hash salt and dropping the date.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .types import type_grid  # noqa: E402

plt.rcParams["svg.hashsalt"] = "robustinspect"


def save(fig, path) -> None:
    fmt = str(path).rsplit(".", 1)[-1].lower()
    meta = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, format=fmt, metadata=meta)
    plt.close(fig)


def mechanism_figure(mech, G: int = 501):
    nu = type_grid(G)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(nu, mech.allocation(nu), label="allocation")
    ax.plot(nu, mech.payment(nu), label="payment")
    for bp in mech.params.breakpoints():
        ax.axvline(bp, color="0.8", lw=0.6)
    ax.set_xlabel("type")
    ax.set_title(f"{mech.rule} rule, mean {mech.mu:.4g}")
    ax.legend()
    return fig


def contamination_figure(run):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(run.eps, run.perf_nominal, label="nominal")
    ax.plot(run.eps, run.perf_linear, label="linear")
    ax.plot(run.eps, run.perf_maximal, label="maximal")
    for e in (run.eps1, run.eps2):
        if e is not None:
            ax.axvline(e, color="0.6", ls="--", lw=0.8)
    ax.set_xlabel("contamination level")
    ax.set_ylabel("relative performance")
    ax.legend()
    return fig


def comparison_figure(rows):
    fig, ax = plt.subplots(figsize=(6, 4))
    names = [r[0] for r in rows]
    ax.bar(range(len(rows)), [r[1] for r in rows])
    ax.set_xticks(range(len(rows)), names, rotation=20)
    ax.set_ylabel("expected payment, uniform prior")
    fig.tight_layout()
    return fig


def guarantee_figure(rows):
    mu = np.array([g.mu for g in rows])
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.5))
    a1.plot(mu, [g.rho for g in rows], ".")
    a1.set_xlabel("mean")
    a1.set_ylabel("relative guarantee")
    a2.plot(mu, [g.c for g in rows], ".")
    a2.set_xlabel("mean")
    a2.set_ylabel("absolute gap")
    fig.tight_layout()
    return fig


def two_agent_figure(bound):
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(bound.mu, np.minimum(bound.f, 1.2), label="six-profile adversary")
    ax.plot(bound.mu, bound.mu, color="0.6", lw=0.8, label="mean")
    ax.plot(bound.mu, bound.hull, label="convex bound")
    ax.axvline(bound.mu_dprime, color="0.7", ls="--", lw=0.8)
    ax.set_xlabel("mean")
    ax.legend()
    return fig


def sweep_figure(x, ys: dict, xlabel: str):
    fig, ax = plt.subplots(figsize=(6, 4))
    for name, y in ys.items():
        ax.plot(x, y, label=name)
    ax.set_xlabel(xlabel)
    ax.legend()
    return fig


def surface_figure(table, fixed=None):
    from .multi_agent import table_surfaces

    rows = np.loadtxt(table_surfaces(table, fixed).splitlines()[1:], delimiter=",", ndmin=2)
    G = table.grid
    fig, axes = plt.subplots(1, 3, figsize=(11, 3.4))
    for ax, col, name in zip(axes, (2, 3, 4), ("x1", "p1", "pm1")):
        im = ax.imshow(rows[:, col].reshape(G, G).T, origin="lower", extent=(0, 1, 0, 1))
        ax.set_title(name)
        fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    return fig

"""Render study results as figures next to the CSV output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_ERROR_COLUMNS = [
    ("rel_h1_fem", "FEM gradient"),
    ("rel_grad_ppr", "recovered gradient"),
    ("rel_grad_rppr", "extrapolated recovery"),
    ("rel_grad_ppr_interp", "recovery of interpolant"),
]


def _by_k(records):
    groups = {}
    for r in records:
        groups.setdefault(r.k, []).append(r)
    return groups


def _slope_guide(ax, h, err, slope):
    h = np.asarray(h, dtype=float)
    anchor = err * 0.6
    ax.loglog(h, anchor * (h / h[-1]) ** slope, "k--", lw=0.8, alpha=0.6,
              label=f"slope {slope}")


def study_figure(records, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    guide_done = False
    for k, rows in _by_k(records).items():
        for column, label in _ERROR_COLUMNS:
            data = [(r.h, getattr(r, column)) for r in rows if getattr(r, column)]
            if not data:
                continue
            h, e = zip(*data)
            ax.loglog(h, e, "o-", ms=3, label=f"k={k:g} {label}")
        if not guide_done and rows and rows[-1].rel_h1_fem:
            hs = [r.h for r in rows]
            _slope_guide(ax, hs, rows[-1].rel_h1_fem, 1)
            if rows[-1].rel_grad_ppr:
                _slope_guide(ax, hs, rows[-1].rel_grad_ppr, 2)
            guide_done = True
    ax.set_xlabel("h")
    ax.set_ylabel("relative error")
    ax.invert_xaxis()
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def estimate_figure(records, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for k, rows in _by_k(records).items():
        data = [(r.m, r.eta) for r in rows if r.eta]
        if data:
            m, eta = zip(*data)
            ax.loglog(m, eta, "o-", ms=3, label=f"k={k:g}")
    ax.set_xlabel("m")
    ax.set_ylabel("estimator")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def pollution_figure(records, path):
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 4.0))
    ks = [r.k for r in records if r.rel_h1_fem]
    axes[0].plot(ks, [r.rel_h1_fem for r in records if r.rel_h1_fem], "o-",
                 label="FEM gradient")
    ppr = [(r.k, r.rel_grad_ppr) for r in records if r.rel_grad_ppr]
    if ppr:
        axes[0].plot(*zip(*ppr), "s-", label="recovered gradient")
    axes[0].set_xlabel("k")
    axes[0].set_ylabel("relative error")
    axes[0].legend(fontsize=8)
    diff = [(r.k, r.rel_grad_diff) for r in records if r.rel_grad_diff]
    if diff:
        axes[1].plot(*zip(*diff), "o-")
    axes[1].set_xlabel("k")
    axes[1].set_ylabel("recovered minus FEM gradient (relative)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def critical_figure(records, path):
    fig, ax = plt.subplots(figsize=(5.5, 4.2))
    data = [(r.k, r.h) for r in records if r.h]
    if data:
        k, h = zip(*data)
        ax.loglog(k, h, "o-", label="h(k)")
        kk = np.asarray(k, dtype=float)
        ax.loglog(kk, h[0] * (kk / kk[0]) ** -1.5, "k--", lw=0.8, label="slope -1.5")
    ax.set_xlabel("k")
    ax.set_ylabel("critical h")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

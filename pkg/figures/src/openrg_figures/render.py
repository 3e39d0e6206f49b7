"""Per-figure renderers.

Every plotted quantity comes straight from the input tables; the only
derived number is the gap guide of the sector scatters, which is the
minimum-|Re| nonzero eigenvalue already present in the CSV.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_ZERO_TOL = 1e-8  # |gamma| below this is the steady state, not a mode
_DPI = 150


def gap_guide(rows):
    """Re gamma of the minimum-|Re| nonzero eigenvalue, or None."""
    best = None
    for row in rows:
        z = complex(float(row["re_gamma"]), float(row["im_gamma"]))
        if abs(z) <= _ZERO_TOL:
            continue
        if best is None or abs(z.real) < abs(best):
            best = z.real
    return best


def _caption(fig, tables):
    names = ", ".join(t.path.rsplit("/", 1)[-1] for t in tables)
    sources = sorted({row["source"] for t in tables for row in t.rows
                      if "source" in t.columns})
    text = f"data: {names}"
    if sources:
        text += f" | source: {', '.join(sources)}"
    fig.text(0.01, 0.005, text, fontsize=6, color="0.4")


def _finish(fig, tables, out):
    _caption(fig, tables)
    fig.savefig(out, dpi=_DPI)
    plt.close(fig)
    return out


def _render_flow(spec, tables):
    table = tables[0]
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
    by_label = {}
    for row in table.rows:
        by_label.setdefault(row["label"], []).append(
            (float(row["g"]), float(row["re_gamma_over_g"]),
             float(row["im_gamma"])))
    for pts in by_label.values():
        pts.sort()
        gs = [p[0] for p in pts]
        axes[0].plot(gs, [p[1] for p in pts], lw=0.8)
        axes[1].plot(gs, [p[2] for p in pts], lw=0.8)
    axes[0].set_ylabel(r"Re $\gamma$ / g")
    axes[1].set_ylabel(r"Im $\gamma$")
    axes[1].set_xlabel("g")
    fig.tight_layout(rect=(0, 0.02, 1, 1))
    return _finish(fig, tables, spec.out)


def _render_scatter(spec, tables):
    table = tables[0]
    fig, ax = plt.subplots(figsize=(6, 4))
    sectors = sorted({int(row["sector"]) for row in table.rows})
    cmap = plt.get_cmap(spec.sector_cmap)
    span = max([1] + [abs(s) for s in sectors])
    for s in sectors:
        pts = [(float(row["re_gamma"]), float(row["im_gamma"]))
               for row in table.rows if int(row["sector"]) == s]
        ax.scatter([p[0] for p in pts], [p[1] for p in pts], s=12,
                   color=cmap(0.5 + 0.5 * s / span), label=f"$S^z$ = {s}")
    guide = gap_guide(table.rows)
    if guide is not None:
        ax.axvline(guide, ls=":", color="k", lw=1)
    ax.set_xlabel(r"Re $\gamma$")
    ax.set_ylabel(r"Im $\gamma$")
    if 0 < len(sectors) <= 9:
        ax.legend(fontsize=7)
    fig.tight_layout(rect=(0, 0.02, 1, 1))
    return _finish(fig, tables, spec.out)


def _render_gap_scaling(spec, tables):
    table = tables[0]
    fig, ax = plt.subplots(figsize=(6, 4))
    L = table.column("L")
    gaps = table.column("gap_abs_re")
    ax.semilogx(L, gaps, "o", label="exact")
    slope = float(table.footer.get("fit_slope", "nan"))
    intercept = float(table.footer.get("fit_intercept", "nan"))
    if L and not (math.isnan(slope) or math.isnan(intercept)):
        n = 200
        lo, hi = math.log(min(L)), math.log(max(L))
        xs = [math.exp(lo + (hi - lo) * i / (n - 1)) for i in range(n)]
        ax.semilogx(xs, [slope * math.log(x) + intercept for x in xs],
                    "--", label=r"$a\,\log L + b$")
        ax.legend()
    ax.set_xlabel("L")
    ax.set_ylabel(r"|Re $\gamma$|")
    fig.tight_layout(rect=(0, 0.02, 1, 1))
    return _finish(fig, tables, spec.out)


def _render_charge_trace(spec, tables):
    table = tables[0]
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(6, 6))
    labels = sorted({row["label"] for row in table.rows})
    by_curve = {}
    for row in table.rows:
        by_curve.setdefault((row["label"], int(row["j"])), []).append(
            (float(row["g"]), float(row["re_q_over_g"]),
             float(row["im_q"])))
    for (label, _j), pts in sorted(by_curve.items()):
        pts.sort()
        style = "-" if labels and label == labels[0] else "--"
        gs = [p[0] for p in pts]
        axes[0].plot(gs, [p[1] for p in pts], style, lw=0.8)
        axes[1].plot(gs, [p[2] for p in pts], style, lw=0.8)
    for aux in tables[1:]:
        if "g_star" not in aux.columns:
            continue
        for row in aux.rows:
            g_star = float(row["g_star"])
            if math.isnan(g_star):
                continue
            for ax in axes:
                ax.axvline(g_star, ls=":", color="k", lw=1)
    axes[0].set_ylabel(r"Re $q_j$ / g")
    axes[1].set_ylabel(r"Im $q_j$")
    axes[1].set_xlabel("g")
    fig.tight_layout(rect=(0, 0.02, 1, 1))
    return _finish(fig, tables, spec.out)


_RENDERERS = {
    "fig1": _render_flow,
    "fig2": _render_scatter,
    "fig3": _render_scatter,
    "fig4": _render_gap_scaling,
    "fig5": _render_flow,
    "fig6": _render_charge_trace,
}


def render(spec):
    """Validate the inputs and write the figure; returns the output path."""
    tables = spec.load()
    return _RENDERERS[spec.figure](spec, tables)

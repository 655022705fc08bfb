"""Rendering of bound-report and coverage figures to image files.

Figures use the Agg backend and deterministic layout, so identical
reports produce byte-identical image files.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .bounds import BoundReport  # noqa: E402
from .runner import CoverageResult  # noqa: E402


def _scaling(report: BoundReport) -> tuple[float, float]:
    """(divisor, clip ceiling) implied by the report's normalization."""
    scale = report.metadata.get("fit_trace_mean")
    if scale is None:
        return 1.0, float("inf")
    divisor = (
        float(scale) if report.metadata.get("normalization") == "trace" else 1.0
    )
    return divisor, float(scale) / divisor


def _series(report: BoundReport, name: str, divisor: float, lo=None, hi=None):
    vals = []
    for row in report.rows:
        v = getattr(row, name)
        if v is None:
            return None
        v = v / divisor
        if lo is not None:
            v = max(v, lo)
        if hi is not None:
            v = min(v, hi)
        vals.append(v)
    return vals


def render_report_figure(report: BoundReport, path) -> Path:
    """Two-panel figure: projection curves (left), residual curves (right).

    Bound curves are clipped to [0, mean kernel diagonal] exactly as the
    CSV's ``*_clipped`` columns are.
    """
    divisor, hi = _scaling(report)
    ks = [row.k for row in report.rows]
    alpha = report.metadata.get("alpha_resolved")
    alpha_label = f"alpha={alpha:.4g}" if alpha is not None else "alpha"

    fig, (ax_p, ax_r) = plt.subplots(1, 2, figsize=(12.0, 4.5), dpi=120)

    panels = (
        (
            ax_p,
            "squared projection",
            (
                ("oracle_proj_mean", "oracle mean", dict(color="tab:green", lw=1.8)),
                ("emp_proj_mean", "empirical mean", dict(color="tab:gray", ls="--")),
                ("eig_proj_mean", "eigen sum / m", dict(color="black", ls=":")),
                ("split_proj_lower", "split lower", dict(color="tab:blue")),
                ("st_proj_lower", "st2005 lower", dict(color="tab:orange")),
                (
                    "pb_proj_upper",
                    f"pb upper ({alpha_label})",
                    dict(color="tab:red"),
                ),
                (
                    "pb_proj_upper_half",
                    "pb upper (alpha=1/2)",
                    dict(color="tab:purple", ls="--"),
                ),
            ),
        ),
        (
            ax_r,
            "squared residual",
            (
                ("oracle_resid_mean", "oracle mean", dict(color="tab:green", lw=1.8)),
                ("emp_resid_mean", "empirical mean", dict(color="tab:gray", ls="--")),
                ("eig_resid_mean", "eigen tail / m", dict(color="black", ls=":")),
                ("split_resid_upper", "split upper", dict(color="tab:blue")),
                ("st_resid_upper", "st2005 upper", dict(color="tab:orange")),
                (
                    "pb_resid_lower",
                    f"pb lower ({alpha_label})",
                    dict(color="tab:red"),
                ),
                (
                    "pb_resid_lower_half",
                    "pb lower (alpha=1/2)",
                    dict(color="tab:purple", ls="--"),
                ),
            ),
        ),
    )
    bound_names = {
        "st_proj_lower",
        "st_resid_upper",
        "split_proj_lower",
        "split_resid_upper",
        "pb_proj_upper",
        "pb_resid_lower",
        "pb_proj_upper_half",
        "pb_resid_lower_half",
    }
    for ax, ylabel, curves in panels:
        for name, label, style in curves:
            clip_lo, clip_hi = (0.0, hi) if name in bound_names else (None, None)
            vals = _series(report, name, divisor, clip_lo, clip_hi)
            if vals is not None:
                ax.plot(ks, vals, label=label, **style)
        ax.set_xlabel("k")
        suffix = " / mean diag" if divisor != 1.0 else ""
        ax.set_ylabel(f"mean {ylabel}{suffix}")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8, loc="center right")

    kernel = report.metadata.get("kernel", "")
    m_fit = report.metadata.get("m_fit", "?")
    delta = report.metadata.get("delta", "?")
    fig.suptitle(f"{kernel}, m={m_fit}, delta={delta}", fontsize=11)
    fig.tight_layout(rect=(0, 0, 1, 0.95))
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path


def render_coverage_figure(result: CoverageResult, path) -> Path:
    """Per-k violation rates for each bound, with the nominal delta line."""
    fig, ax = plt.subplots(figsize=(8.0, 4.5), dpi=120)
    by_bound: dict[str, tuple[list[int], list[float]]] = {}
    aggregates: dict[str, float] = {}
    for row in result.rows:
        if row.k is None:
            aggregates[row.bound] = row.violation_rate
        else:
            by_bound.setdefault(row.bound, ([], []))
            by_bound[row.bound][0].append(row.k)
            by_bound[row.bound][1].append(row.violation_rate)
    for name in sorted(by_bound):
        ks, rates = by_bound[name]
        agg = aggregates.get(name)
        label = name if agg is None else f"{name} (any k: {agg:.3f})"
        ax.plot(ks, rates, label=label)
    delta = result.metadata.get("delta")
    if delta is not None:
        ax.axhline(delta, color="black", ls="--", lw=1.0, label=f"nominal {delta:g}")
    ax.set_xlabel("k")
    ax.set_ylabel("violation rate")
    trials = result.rows[0].trials if result.rows else "?"
    ax.set_title(f"bound violation rates over {trials} trials")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path

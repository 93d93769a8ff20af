"""Plain-text SVG report figures: a grouped bar chart of mean segmentation
metrics per condition, and per-attack search traces (best Dice vs iteration).

Rendered values are also embedded as ``data-*`` attributes so downstream
tooling (and the test suite) can read the numbers straight out of the markup.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .harness import RunResult, condition_label

__all__ = ["render_plots"]

_BAR_METRICS = ("dice", "iou", "precision", "recall")
_METRIC_COLORS = {
    "dice": "#4477aa",
    "iou": "#ee6677",
    "precision": "#228833",
    "recall": "#ccbb44",
}
_TRACE_COLORS = {"ssaa": "#4477aa", "fdua": "#ee6677"}


def _svg_document(width: int, height: int, body: list) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def _y_axis(left: float, top: float, plot_h: float, plot_w: float, title: str) -> list:
    parts = [f'<g stroke="#999" stroke-width="1">']
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = top + plot_h * (1.0 - frac)
        parts.append(f'<line x1="{left}" y1="{y:.1f}" x2="{left + plot_w:.1f}" y2="{y:.1f}"/>')
    parts.append("</g>")
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = top + plot_h * (1.0 - frac)
        parts.append(
            f'<text x="{left - 6}" y="{y + 4:.1f}" text-anchor="end" fill="#333">{frac:g}</text>'
        )
    parts.append(
        f'<text x="14" y="{top + plot_h / 2:.1f}" text-anchor="middle" fill="#333" '
        f'transform="rotate(-90 14 {top + plot_h / 2:.1f})">{escape(title)}</text>'
    )
    return parts


def _bar_chart_svg(records) -> str:
    conditions = []
    for r in records:
        key = (r.attack, r.defense)
        if key not in conditions:
            conditions.append(key)
    means = {
        key: {
            m: float(np.mean([getattr(r.metrics, m) for r in records if (r.attack, r.defense) == key]))
            for m in _BAR_METRICS
        }
        for key in conditions
    }

    bar_w, group_gap = 14, 18
    group_w = bar_w * len(_BAR_METRICS) + group_gap
    left, top, plot_h = 64, 46, 300
    plot_w = group_w * len(conditions)
    width = left + plot_w + 24
    height = top + plot_h + 150

    body = _y_axis(left, top, plot_h, plot_w, "mean metric value")
    lx = left
    for i, metric in enumerate(_BAR_METRICS):
        body.append(
            f'<rect x="{lx + i * 90}" y="16" width="10" height="10" fill="{_METRIC_COLORS[metric]}"/>'
            f'<text x="{lx + i * 90 + 14}" y="25" fill="#333">{metric}</text>'
        )

    for ci, key in enumerate(conditions):
        gx = left + ci * group_w + group_gap / 2
        label = condition_label(*key)
        for mi, metric in enumerate(_BAR_METRICS):
            value = means[key][metric]
            h = plot_h * max(0.0, min(1.0, value))
            x = gx + mi * bar_w
            y = top + plot_h - h
            body.append(
                f'<rect x="{x:.1f}" y="{y:.2f}" width="{bar_w - 2}" height="{h:.2f}" '
                f'fill="{_METRIC_COLORS[metric]}" data-condition={quoteattr(label)} '
                f'data-metric="{metric}" data-value="{value!r}"/>'
            )
        tx = gx + (group_w - group_gap) / 2
        ty = top + plot_h + 12
        body.append(
            f'<text x="{tx:.1f}" y="{ty}" text-anchor="end" fill="#333" '
            f'transform="rotate(-40 {tx:.1f} {ty})">{escape(label)}</text>'
        )
    return _svg_document(width, height, body)


def _mean_trace(traces) -> list:
    longest = max(len(t.trace) for t in traces)
    out = []
    for i in range(longest):
        vals = [t.trace[i] for t in traces if len(t.trace) > i]
        out.append(float(np.mean(vals)))
    return out


def _trace_plot_svg(traces) -> str:
    attacks = []
    for t in traces:
        if t.attack not in attacks:
            attacks.append(t.attack)
    series = {a: _mean_trace([t for t in traces if t.attack == a]) for a in attacks}

    left, top, plot_h, plot_w = 64, 46, 300, 480
    width = left + plot_w + 24
    height = top + plot_h + 60

    body = _y_axis(left, top, plot_h, plot_w, "best Dice (mean over cases)")
    body.append(
        f'<text x="{left + plot_w / 2:.1f}" y="{top + plot_h + 34}" text-anchor="middle" '
        f'fill="#333">iteration</text>'
    )
    for i, attack in enumerate(attacks):
        color = _TRACE_COLORS.get(attack, "#333333")
        vals = series[attack]
        n = len(vals)
        points = " ".join(
            f"{left + (plot_w * (j / max(1, n - 1))):.2f},{top + plot_h * (1.0 - v):.3f}"
            for j, v in enumerate(vals)
        )
        data_vals = ",".join(repr(v) for v in vals)
        body.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{points}" '
            f'data-attack="{attack}" data-values="{data_vals}"/>'
        )
        body.append(
            f'<rect x="{left + i * 90}" y="16" width="10" height="10" fill="{color}"/>'
            f'<text x="{left + i * 90 + 14}" y="25" fill="#333">{attack.upper()}</text>'
        )
    return _svg_document(width, height, body)


def render_plots(result: RunResult, outdir) -> list:
    """Write the report figures; skips any figure whose data is missing."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if result.records:
        path = out / "figure_metrics_bars.svg"
        path.write_text(_bar_chart_svg(result.records), encoding="utf-8")
        written.append(path)
    if result.traces:
        path = out / "figure_attack_traces.svg"
        path.write_text(_trace_plot_svg(result.traces), encoding="utf-8")
        written.append(path)
    return written

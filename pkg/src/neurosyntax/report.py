"""Tabular and SVG emission for ROI reports.

Charts are self-contained SVG (no plotting dependency): one grouped bar
chart per hemisphere, a bar per analysis within each ROI, whiskers at
+/- one standard error.  Every numeric value in the SVG title
attributes is the same repr() string written to the CSV, so the chart
and the table cannot drift apart.
"""

from __future__ import annotations

import json

from . import atlas
from .stats import RoiSummary

_BAR_COLORS = (
    "#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
    "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd",
)


def summaries_csv(per_analysis: dict[str, list[RoiSummary]]) -> str:
    lines = ["analysis,roi,hemisphere,n_subjects,mean_pct,se_pct,mean_r2,se_r2"]
    for analysis in sorted(per_analysis):
        for s in per_analysis[analysis]:
            lines.append(
                f"{analysis},{s.roi},{s.hemisphere},{s.n_subjects},"
                f"{s.mean_pct!r},{s.se_pct!r},{s.mean_r2!r},{s.se_r2!r}"
            )
    return "\n".join(lines) + "\n"


def summaries_json(per_analysis: dict[str, list[RoiSummary]], run_hash: str) -> str:
    payload = {
        "run_config_hash": run_hash,
        "analyses": {
            name: [
                {
                    "roi": s.roi,
                    "hemisphere": s.hemisphere,
                    "n_subjects": s.n_subjects,
                    "mean_pct": s.mean_pct,
                    "se_pct": s.se_pct,
                    "mean_r2": s.mean_r2,
                    "se_r2": s.se_r2,
                }
                for s in summaries
            ]
            for name, summaries in per_analysis.items()
        },
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _fmt(x: float) -> str:
    return repr(x)


def grouped_bar_svg(
    per_analysis: dict[str, list[RoiSummary]],
    hemisphere: str,
    title: str,
    run_hash: str,
    value: str = "pct",
) -> str:
    """Grouped bars of mean +/- SE per ROI; value is "pct" or "r2"."""
    analyses = sorted(per_analysis)
    rois = list(atlas.ROI_NAMES)
    width, height = 900, 360
    margin_l, margin_b, margin_t = 60, 60, 40
    plot_w = width - margin_l - 20
    plot_h = height - margin_b - margin_t

    def pick(s: RoiSummary):
        return (s.mean_pct, s.se_pct) if value == "pct" else (s.mean_r2, s.se_r2)

    cells: dict[tuple[str, str], tuple[float, float]] = {}
    for name in analyses:
        for s in per_analysis[name]:
            if s.hemisphere == hemisphere:
                cells[(name, s.roi)] = pick(s)
    peak = max((m + e for m, e in cells.values()), default=1.0)
    peak = max(peak, 1e-9)
    floor = min(0.0, min((m - e for m, e in cells.values()), default=0.0))
    span = peak - floor

    def y_of(v: float) -> float:
        return margin_t + plot_h * (1.0 - (v - floor) / span)

    group_w = plot_w / len(rois)
    bar_w = group_w * 0.8 / max(1, len(analyses))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f"<desc>run_config_hash={run_hash}</desc>",
        f'<text x="{width / 2}" y="20" text-anchor="middle" '
        f'font-size="14" font-family="sans-serif">{title}</text>',
        f'<line x1="{margin_l}" y1="{y_of(max(0.0, floor))}" x2="{width - 20}" '
        f'y2="{y_of(max(0.0, floor))}" stroke="#333"/>',
    ]
    for ri, roi in enumerate(rois):
        x0 = margin_l + ri * group_w + group_w * 0.1
        parts.append(
            f'<text x="{margin_l + (ri + 0.5) * group_w}" y="{height - 30}" '
            f'text-anchor="middle" font-size="11" font-family="sans-serif">{roi}</text>'
        )
        for ai, name in enumerate(analyses):
            if (name, roi) not in cells:
                continue
            mean, se = cells[(name, roi)]
            x = x0 + ai * bar_w
            y_top = y_of(max(mean, 0.0))
            y_zero = y_of(0.0)
            bar_h = abs(y_zero - y_top) if mean >= 0 else abs(y_of(mean) - y_zero)
            y_rect = y_top if mean >= 0 else y_zero
            color = _BAR_COLORS[ai % len(_BAR_COLORS)]
            parts.append(
                f'<rect x="{x:.2f}" y="{y_rect:.2f}" width="{bar_w:.2f}" '
                f'height="{bar_h:.2f}" fill="{color}">'
                f"<title>{name} {roi} {hemisphere} mean={_fmt(mean)} se={_fmt(se)}</title></rect>"
            )
            cx = x + bar_w / 2
            parts.append(
                f'<line x1="{cx:.2f}" y1="{y_of(mean - se):.2f}" '
                f'x2="{cx:.2f}" y2="{y_of(mean + se):.2f}" stroke="#222"/>'
            )
    for ai, name in enumerate(analyses):
        color = _BAR_COLORS[ai % len(_BAR_COLORS)]
        x = margin_l + ai * 140
        y = height - 8
        parts.append(f'<rect x="{x}" y="{y - 10}" width="10" height="10" fill="{color}"/>')
        parts.append(
            f'<text x="{x + 14}" y="{y}" font-size="10" '
            f'font-family="sans-serif">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

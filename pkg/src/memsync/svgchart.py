"""Deterministic SVG grouped bar chart on a logarithmic axis.

Hand-rolled so that identical data always produces identical bytes; no
plotting library is involved.
"""

from __future__ import annotations

import math

_COLORS = ("#4878cf", "#d65f5f", "#6acc65", "#b47cc7", "#c4ad66")

_UNIT_STEPS = (
    (3.15576e7, "yr"),
    (86400.0, "d"),
    (3600.0, "h"),
    (1.0, "s"),
    (1e-3, "ms"),
    (1e-6, "us"),
    (1e-9, "ns"),
)


def humanize_seconds(seconds: float) -> str:
    """Render a duration with a human-scale unit (ns .. years)."""
    if seconds <= 0.0 or not math.isfinite(seconds):
        return str(seconds)
    for scale, unit in _UNIT_STEPS:
        if seconds >= scale:
            return f"{seconds / scale:.3g} {unit}"
    scale, unit = _UNIT_STEPS[-1]
    return f"{seconds / scale:.3g} {unit}"


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def render_grouped_log_bars(categories, series, title="", xlabel="",
                            ylabel="", unit_annotation=humanize_seconds,
                            width=880, height=520) -> str:
    """Build an SVG document for grouped bars over a log10 value axis.

    Args:
        categories: x-axis group labels, in order.
        series: ordered mapping name -> list of values (None skips a bar).
        unit_annotation: optional value -> text used in decade tick labels.

    Returns:
        The SVG document as a string.
    """
    values = [v for vals in series.values() for v in vals
              if v is not None and v > 0.0 and math.isfinite(v)]
    if not values:
        lo_dec, hi_dec = -1, 1
    else:
        lo_dec = math.floor(math.log10(min(values)))
        hi_dec = math.ceil(math.log10(max(values)))
        if hi_dec == lo_dec:
            hi_dec += 1

    left, right, top, bottom = 90, 30, 50, 70
    plot_w = width - left - right
    plot_h = height - top - bottom
    n_groups = len(categories)
    n_series = len(series)
    group_w = plot_w / max(n_groups, 1)
    bar_w = group_w * 0.8 / max(n_series, 1)

    def y_of(value: float) -> float:
        frac = (math.log10(value) - lo_dec) / (hi_dec - lo_dec)
        return top + plot_h * (1.0 - frac)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="16">{title}</text>',
    ]

    for dec in range(lo_dec, hi_dec + 1):
        y = y_of(10.0**dec)
        label = f"1e{dec}"
        if unit_annotation is not None:
            label += f" ({unit_annotation(10.0 ** dec)})"
        out.append(
            f'<line x1="{left}" y1="{_fmt(y)}" x2="{width - right}" y2="{_fmt(y)}" '
            f'stroke="#dddddd" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{left - 6}" y="{_fmt(y + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )

    for gi, cat in enumerate(categories):
        x0 = left + gi * group_w + group_w * 0.1
        for si, (name, vals) in enumerate(series.items()):
            v = vals[gi]
            if v is None or v <= 0.0 or not math.isfinite(v):
                continue
            v_clip = min(max(v, 10.0**lo_dec), 10.0**hi_dec)
            y = y_of(v_clip)
            x = x0 + si * bar_w
            out.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(bar_w * 0.92)}" '
                f'height="{_fmt(top + plot_h - y)}" fill="{_COLORS[si % len(_COLORS)]}"/>'
            )
        out.append(
            f'<text x="{_fmt(x0 + group_w * 0.4)}" y="{height - bottom + 18}" '
            f'text-anchor="middle" font-family="sans-serif" font-size="12">{cat}</text>'
        )

    out.append(
        f'<line x1="{left}" y1="{top + plot_h}" x2="{width - right}" '
        f'y2="{top + plot_h}" stroke="black" stroke-width="1"/>'
    )
    out.append(
        f'<text x="{width / 2:.0f}" y="{height - 16}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{xlabel}</text>'
    )
    out.append(
        f'<text x="20" y="{top + plot_h / 2:.0f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13" '
        f'transform="rotate(-90 20 {top + plot_h / 2:.0f})">{ylabel}</text>'
    )

    lx = left + 10
    for si, name in enumerate(series):
        ly = top + 8 + si * 18
        out.append(
            f'<rect x="{lx}" y="{ly}" width="12" height="12" '
            f'fill="{_COLORS[si % len(_COLORS)]}"/>'
        )
        out.append(
            f'<text x="{lx + 18}" y="{ly + 10}" font-family="sans-serif" '
            f'font-size="12">{name}</text>'
        )

    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Minimal standalone SVG charts (no plotting dependencies).

Output is always well-formed XML, even with zero data points.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 480
MARGIN = 56

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _limits(values: list[float]) -> tuple[float, float]:
    finite = [v for v in values if v == v]  # drop NaN
    if not finite:
        return 0.0, 1.0
    lo, hi = min(finite), max(finite)
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


class _Frame:
    def __init__(self, xs: list[float], ys: list[float], x_label: str, y_label: str):
        self.x_lo, self.x_hi = _limits(xs)
        self.y_lo, self.y_hi = _limits(ys)
        self.x_label = x_label
        self.y_label = y_label

    def px(self, x: float) -> float:
        span = self.x_hi - self.x_lo
        return MARGIN + (x - self.x_lo) / span * (WIDTH - 2 * MARGIN)

    def py(self, y: float) -> float:
        span = self.y_hi - self.y_lo
        return HEIGHT - MARGIN - (y - self.y_lo) / span * (HEIGHT - 2 * MARGIN)

    def axes(self) -> list[str]:
        parts = [
            f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
            f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="#333"/>'
        ]
        for frac in (0.0, 0.5, 1.0):
            xv = self.x_lo + frac * (self.x_hi - self.x_lo)
            yv = self.y_lo + frac * (self.y_hi - self.y_lo)
            parts.append(
                f'<text x="{self.px(xv):.1f}" y="{HEIGHT - MARGIN + 18}" '
                f'font-size="11" text-anchor="middle">{xv:.3g}</text>'
            )
            parts.append(
                f'<text x="{MARGIN - 6}" y="{self.py(yv):.1f}" font-size="11" '
                f'text-anchor="end" dominant-baseline="middle">{yv:.3g}</text>'
            )
        parts.append(
            f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" font-size="13" '
            f'text-anchor="middle">{escape(self.x_label)}</text>'
        )
        parts.append(
            f'<text x="16" y="{HEIGHT / 2:.1f}" font-size="13" '
            f'text-anchor="middle" transform="rotate(-90 16 {HEIGHT / 2:.1f})">'
            f'{escape(self.y_label)}</text>'
        )
        return parts


def _document(body: list[str]) -> str:
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">\n'
        '<rect width="100%" height="100%" fill="white"/>\n'
        + "\n".join(body)
        + "\n</svg>\n"
    )


def scatter_svg(
    points: list[tuple[float, float, str]],
    x_label: str,
    y_label: str,
    path: str,
    reference: tuple[float, float, str] | None = None,
) -> None:
    """Scatter of (x, y, series) triples with a legend; optional star marker."""
    xs = [p[0] for p in points] + ([reference[0]] if reference else [])
    ys = [p[1] for p in points] + ([reference[1]] if reference else [])
    frame = _Frame(xs, ys, x_label, y_label)
    body = frame.axes()
    series = []
    for _, _, label in points:
        if label not in series:
            series.append(label)
    colors = {label: PALETTE[i % len(PALETTE)] for i, label in enumerate(series)}
    for x, y, label in points:
        if x != x or y != y:
            continue
        body.append(
            f'<circle cx="{frame.px(x):.1f}" cy="{frame.py(y):.1f}" r="4" '
            f'fill="{colors[label]}" fill-opacity="0.8"/>'
        )
    if reference is not None and reference[0] == reference[0]:
        rx, ry = frame.px(reference[0]), frame.py(reference[1])
        body.append(
            f'<path d="M {rx:.1f} {ry - 7:.1f} L {rx + 7:.1f} {ry:.1f} '
            f'L {rx:.1f} {ry + 7:.1f} L {rx - 7:.1f} {ry:.1f} Z" '
            'fill="black"/>'
        )
        series.append(reference[2])
        colors[reference[2]] = "black"
    for i, label in enumerate(series):
        ly = MARGIN + 8 + 16 * i
        body.append(
            f'<rect x="{WIDTH - MARGIN - 130}" y="{ly - 8}" width="10" '
            f'height="10" fill="{colors[label]}"/>'
        )
        body.append(
            f'<text x="{WIDTH - MARGIN - 114}" y="{ly + 1}" font-size="11">'
            f'{escape(label)}</text>'
        )
    with open(path, "w") as fh:
        fh.write(_document(body))


def line_svg(
    series: dict[str, list[tuple[float, float]]],
    x_label: str,
    y_label: str,
    path: str,
) -> None:
    """One polyline per labelled series, e.g. MIA score against shadow ratio."""
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    frame = _Frame(xs, ys, x_label, y_label)
    body = frame.axes()
    for i, (label, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(
            f"{frame.px(x):.1f},{frame.py(y):.1f}" for x, y in pts if y == y
        )
        if coords:
            body.append(
                f'<polyline points="{coords}" fill="none" stroke="{color}" '
                'stroke-width="1.5"/>'
            )
        ly = MARGIN + 8 + 16 * i
        body.append(
            f'<rect x="{WIDTH - MARGIN - 130}" y="{ly - 8}" width="10" '
            f'height="10" fill="{color}"/>'
        )
        body.append(
            f'<text x="{WIDTH - MARGIN - 114}" y="{ly + 1}" font-size="11">'
            f'{escape(label)}</text>'
        )
    with open(path, "w") as fh:
        fh.write(_document(body))

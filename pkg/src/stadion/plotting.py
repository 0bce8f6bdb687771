"""SVG rendering of stability paths and the trade-off curve.

The figure has four panels: Stab_B, Stab_W and Stadion against the noise
amplitude (one polyline per K) and the aggregated trade-off values against
K.  Output is plain SVG text built with ``xml.etree.ElementTree``; numbers
are written with fixed precision so identical inputs give identical bytes.
"""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from collections.abc import Sequence

from .models import StadionPath, TradeOffRow

logger = logging.getLogger(__name__)

PANEL_WIDTH = 360
PANEL_HEIGHT = 260
MARGIN = 40

_SERIES_COLORS = {"stab_b": "#1f77b4", "stab_w": "#d62728", "stadion": "#2ca02c"}


def _color(k: int, k_max: int) -> str:
    hue = (k - 1) * 360.0 / max(k_max, 1)
    return f"hsl({hue:.0f},70%,45%)"


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _bounds(values: Sequence[float]) -> tuple[float, float]:
    low, high = min(values), max(values)
    if high - low < 1e-12:
        return low - 0.5, high + 0.5
    pad = 0.05 * (high - low)
    return low - pad, high + pad


class _Panel:
    """Maps data coordinates into one panel of the figure."""

    def __init__(self, root: ET.Element, col: int, row: int, title: str, x_range: tuple[float, float], y_range: tuple[float, float], x_label: str) -> None:
        self.left = col * PANEL_WIDTH + MARGIN
        self.top = row * PANEL_HEIGHT + MARGIN
        self.width = PANEL_WIDTH - 2 * MARGIN
        self.height = PANEL_HEIGHT - 2 * MARGIN
        self.x_range = x_range
        self.y_range = y_range
        self.group = ET.SubElement(root, "g", {"class": "panel", "id": title.lower().replace(" ", "-")})
        ET.SubElement(
            self.group,
            "rect",
            {
                "x": str(self.left),
                "y": str(self.top),
                "width": str(self.width),
                "height": str(self.height),
                "fill": "none",
                "stroke": "#444",
            },
        )
        heading = ET.SubElement(self.group, "text", {"x": str(self.left), "y": str(self.top - 8), "font-size": "12"})
        heading.text = title
        label = ET.SubElement(
            self.group,
            "text",
            {"x": str(self.left + self.width // 2), "y": str(self.top + self.height + 28), "font-size": "10"},
        )
        label.text = x_label
        for value, x, y in (
            (x_range[0], self.left, self.top + self.height + 14),
            (x_range[1], self.left + self.width - 20, self.top + self.height + 14),
        ):
            tick = ET.SubElement(self.group, "text", {"x": str(x), "y": str(y), "font-size": "9"})
            tick.text = _fmt(value)
        for value, y in ((y_range[0], self.top + self.height), (y_range[1], self.top + 9)):
            tick = ET.SubElement(self.group, "text", {"x": str(self.left - 36), "y": str(y), "font-size": "9"})
            tick.text = _fmt(value)

    def _point(self, x: float, y: float) -> str:
        x0, x1 = self.x_range
        y0, y1 = self.y_range
        px = self.left + (x - x0) / (x1 - x0) * self.width
        py = self.top + self.height - (y - y0) / (y1 - y0) * self.height
        return f"{_fmt(px)},{_fmt(py)}"

    def polyline(self, xs: Sequence[float], ys: Sequence[float], color: str, name: str) -> None:
        points = " ".join(self._point(x, y) for x, y in zip(xs, ys, strict=True))
        ET.SubElement(
            self.group,
            "polyline",
            {"points": points, "fill": "none", "stroke": color, "stroke-width": "1.5", "data-series": name},
        )


def render_paths_svg(
    paths: Sequence[StadionPath],
    trade_off: Sequence[TradeOffRow] | None = None,
    title: str = "Stadion stability paths",
) -> str:
    """Render the path panels (and the trade-off panel when rows are given) as SVG text."""
    if not paths:
        raise ValueError("nothing to plot: no paths")
    k_max = max(path.k for path in paths)
    grid = paths[0].grid.values
    x_range = (grid[0], grid[-1]) if grid[-1] > grid[0] else (grid[0], grid[0] + 1.0)
    height = 2 * PANEL_HEIGHT + 12 * ((len(paths) + 19) // 20) + 10

    root = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(2 * PANEL_WIDTH),
            "height": str(height),
            "viewBox": f"0 0 {2 * PANEL_WIDTH} {height}",
        },
    )
    ET.SubElement(root, "title").text = title

    panels = (("Between-cluster stability", "stab_b", 0, 0), ("Within-cluster stability", "stab_w", 1, 0), ("Stadion", "stadion", 0, 1))
    for heading, attr, col, row in panels:
        values = [v for path in paths for v in getattr(path, attr)]
        panel = _Panel(root, col, row, heading, x_range, _bounds(values), "epsilon")
        for path in paths:
            panel.polyline(path.grid.values, getattr(path, attr), _color(path.k, k_max), f"K={path.k}")

    if trade_off:
        ks = [float(r.k) for r in trade_off]
        k_range = (ks[0], ks[-1]) if ks[-1] > ks[0] else (ks[0] - 0.5, ks[0] + 0.5)
        values = [v for r in trade_off for v in (r.stab_b, r.stab_w, r.stadion)]
        panel = _Panel(root, 1, 1, "Trade-off", k_range, _bounds(values), "K")
        for attr, color in _SERIES_COLORS.items():
            panel.polyline(ks, [getattr(r, attr) for r in trade_off], color, attr)

    legend = ET.SubElement(root, "g", {"class": "legend"})
    for i, path in enumerate(paths):
        item = ET.SubElement(
            legend,
            "text",
            {
                "x": str(MARGIN + (i % 20) * 32),
                "y": str(2 * PANEL_HEIGHT + 12 + (i // 20) * 12),
                "font-size": "9",
                "fill": _color(path.k, k_max),
            },
        )
        item.text = f"K={path.k}"

    logger.debug("Rendered SVG with %d paths", len(paths))
    return ET.tostring(root, encoding="unicode")

"""Visual encoding of aggregated maps: diverging color for impact, square
area for variability, and a static SVG renderer.

These formulas are the published contract shared with the browser frontend;
golden files produced here are cross-checked against the frontend renderer,
so any change here is a breaking change of that contract.

Color: impact -1 maps to blue #3B4CC0, 0 to white #F7F7F7, +1 to red
#B40426, interpolated linearly per half with channels rounded half-up.

Size: the square's area is linear in (1 - variability) with a minimum area
floor, so side = cell_size * sqrt(min_area + (1 - variability) * (1 - min_area)).
Variability 0 fills the cell; variability 1 leaves the minimum-area square.
"""

from __future__ import annotations

import math

from .errors import ContractViolationError

COLOR_NEGATIVE = (0x3B, 0x4C, 0xC0)  # impact -1
COLOR_NEUTRAL = (0xF7, 0xF7, 0xF7)  # impact 0
COLOR_POSITIVE = (0xB4, 0x04, 0x26)  # impact +1

DEFAULT_WRAP = 150
DEFAULT_CELL_SIZE = 12.0
MIN_AREA_FRACTION = 0.04


def impact_color(impact) -> str:
    """Hex fill color for an impact value in [-1, 1]."""
    if not -1.0 <= impact <= 1.0:
        raise ContractViolationError(f"impact must lie in [-1, 1], got {impact}")
    if impact < 0.0:
        t = impact + 1.0  # 0 at blue endpoint, 1 at white
        a, b = COLOR_NEGATIVE, COLOR_NEUTRAL
    else:
        t = impact
        a, b = COLOR_NEUTRAL, COLOR_POSITIVE
    channels = (math.floor(a[i] + t * (b[i] - a[i]) + 0.5) for i in range(3))
    return "#{:02x}{:02x}{:02x}".format(*channels)


def square_side(variability, cell_size=DEFAULT_CELL_SIZE, min_area_fraction=MIN_AREA_FRACTION) -> float:
    """Side length of the centered square for a variability value in [0, 1]."""
    if not 0.0 <= variability <= 1.0:
        raise ContractViolationError(f"variability must lie in [0, 1], got {variability}")
    if not 0.0 < min_area_fraction < 1.0:
        raise ContractViolationError("min_area_fraction must lie in (0, 1)")
    area = min_area_fraction + (1.0 - variability) * (1.0 - min_area_fraction)
    return cell_size * math.sqrt(area)


def render_svg(
    impact,
    variability,
    wrap=DEFAULT_WRAP,
    cell_size=DEFAULT_CELL_SIZE,
    min_area_fraction=MIN_AREA_FRACTION,
) -> str:
    """Wrapped glyph grid as a standalone SVG document.

    Features fill rows left to right, ``wrap`` cells per row; each feature
    draws exactly one centered <rect>, so the document contains one rect per
    feature.
    """
    if len(impact) != len(variability):
        raise ContractViolationError(
            f"impact ({len(impact)}) and variability ({len(variability)}) lengths differ"
        )
    if wrap < 1:
        raise ContractViolationError(f"wrap must be >= 1, got {wrap}")
    n = len(impact)
    rows = (n + wrap - 1) // wrap
    width = wrap * cell_size
    height = rows * cell_size
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">'
    ]
    for t in range(n):
        row, col = divmod(t, wrap)
        side = square_side(variability[t], cell_size, min_area_fraction)
        x = col * cell_size + (cell_size - side) / 2.0
        y = row * cell_size + (cell_size - side) / 2.0
        parts.append(
            f'<rect data-feature="{t}" x="{x:.4f}" y="{y:.4f}" '
            f'width="{side:.4f}" height="{side:.4f}" fill="{impact_color(impact[t])}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts)

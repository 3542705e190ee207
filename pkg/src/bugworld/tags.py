"""Bug tags and the deterministic tag -> mask color palette."""

from __future__ import annotations

import math

NO_BUG = 0
GOLDEN_ANGLE_DEG = 137.508


def _hsv_to_rgb8(h_deg: float, s: float, v: float) -> tuple[int, int, int]:
    """HSV (hue in degrees) to RGB8 with half-up rounding."""
    h = (h_deg % 360.0) / 60.0
    i = int(math.floor(h)) % 6
    f = h - math.floor(h)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r, g, b = [
        (v, t, p),
        (q, v, p),
        (p, v, t),
        (p, q, v),
        (t, p, v),
        (v, p, q),
    ][i]
    return (
        int(math.floor(r * 255.0 + 0.5)),
        int(math.floor(g * 255.0 + 0.5)),
        int(math.floor(b * 255.0 + 0.5)),
    )


def tag_color(tag: int) -> tuple[int, int, int]:
    """Deterministic mask color for a tag. Tag 0 is reserved background."""
    if tag < 0:
        raise ValueError("tag must be non-negative")
    if tag == NO_BUG:
        return (0, 0, 0)
    hue = ((tag - 1) * GOLDEN_ANGLE_DEG) % 360.0
    return _hsv_to_rgb8(hue, 1.0, 1.0)


def verify_palette(n: int = 64) -> None:
    """Check injectivity of tag_color over tags 1..n (plus reserved 0)."""
    seen = {(0, 0, 0): 0}
    for t in range(1, n + 1):
        c = tag_color(t)
        if c in seen:
            raise RuntimeError(f"palette collision: tags {seen[c]} and {t} -> {c}")
        seen[c] = t


_PALETTE_CHECKED = False


class TagRegistry:
    """Append-only mapping of tag id -> (bug name, mask color).

    Tag 0 is always the reserved NO_BUG entry with color (0, 0, 0).
    """

    def __init__(self):
        global _PALETTE_CHECKED
        if not _PALETTE_CHECKED:
            verify_palette(64)
            _PALETTE_CHECKED = True
        self._names: list[str] = ["NO_BUG"]

    def register(self, name: str) -> int:
        if name in self._names:
            raise ValueError(f"tag name already registered: {name}")
        self._names.append(name)
        return len(self._names) - 1

    def __len__(self) -> int:
        return len(self._names)

    def name(self, tag: int) -> str:
        return self._names[tag]

    def tag_of(self, name: str) -> int:
        return self._names.index(name)

    def color(self, tag: int) -> tuple[int, int, int]:
        if not 0 <= tag < len(self._names):
            raise ValueError(f"unregistered tag: {tag}")
        return tag_color(tag)

    def palette(self) -> dict[str, tuple[int, int, int]]:
        return {n: tag_color(t) for t, n in enumerate(self._names)}

    def color_lut(self):
        import numpy as np

        lut = np.zeros((len(self._names), 3), dtype=np.uint8)
        for t in range(len(self._names)):
            lut[t] = tag_color(t)
        return lut

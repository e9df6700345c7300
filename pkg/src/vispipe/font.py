"""Embedded 5x7 bitmap font for label drawing.

A fixed raster font keeps golden-image tests bit-exact across platforms
(system font rendering is not reproducible).  Glyphs cover A-Z, 0-9, and the
punctuation labels need; lowercase input is drawn with the uppercase glyph,
anything unknown falls back to a filled frame.
"""

from __future__ import annotations

import numpy as np

GLYPH_W = 5
GLYPH_H = 7
SPACING = 1

_RAW = {
    "A": (".XXX.", "X...X", "X...X", "XXXXX", "X...X", "X...X", "X...X"),
    "B": ("XXXX.", "X...X", "X...X", "XXXX.", "X...X", "X...X", "XXXX."),
    "C": (".XXX.", "X...X", "X....", "X....", "X....", "X...X", ".XXX."),
    "D": ("XXXX.", "X...X", "X...X", "X...X", "X...X", "X...X", "XXXX."),
    "E": ("XXXXX", "X....", "X....", "XXXX.", "X....", "X....", "XXXXX"),
    "F": ("XXXXX", "X....", "X....", "XXXX.", "X....", "X....", "X...."),
    "G": (".XXX.", "X...X", "X....", "X.XXX", "X...X", "X...X", ".XXX."),
    "H": ("X...X", "X...X", "X...X", "XXXXX", "X...X", "X...X", "X...X"),
    "I": ("XXXXX", "..X..", "..X..", "..X..", "..X..", "..X..", "XXXXX"),
    "J": ("..XXX", "...X.", "...X.", "...X.", "...X.", "X..X.", ".XX.."),
    "K": ("X...X", "X..X.", "X.X..", "XX...", "X.X..", "X..X.", "X...X"),
    "L": ("X....", "X....", "X....", "X....", "X....", "X....", "XXXXX"),
    "M": ("X...X", "XX.XX", "X.X.X", "X.X.X", "X...X", "X...X", "X...X"),
    "N": ("X...X", "XX..X", "X.X.X", "X..XX", "X...X", "X...X", "X...X"),
    "O": (".XXX.", "X...X", "X...X", "X...X", "X...X", "X...X", ".XXX."),
    "P": ("XXXX.", "X...X", "X...X", "XXXX.", "X....", "X....", "X...."),
    "Q": (".XXX.", "X...X", "X...X", "X...X", "X.X.X", "X..X.", ".XX.X"),
    "R": ("XXXX.", "X...X", "X...X", "XXXX.", "X.X..", "X..X.", "X...X"),
    "S": (".XXXX", "X....", "X....", ".XXX.", "....X", "....X", "XXXX."),
    "T": ("XXXXX", "..X..", "..X..", "..X..", "..X..", "..X..", "..X.."),
    "U": ("X...X", "X...X", "X...X", "X...X", "X...X", "X...X", ".XXX."),
    "V": ("X...X", "X...X", "X...X", "X...X", "X...X", ".X.X.", "..X.."),
    "W": ("X...X", "X...X", "X...X", "X.X.X", "X.X.X", "XX.XX", "X...X"),
    "X": ("X...X", "X...X", ".X.X.", "..X..", ".X.X.", "X...X", "X...X"),
    "Y": ("X...X", "X...X", ".X.X.", "..X..", "..X..", "..X..", "..X.."),
    "Z": ("XXXXX", "....X", "...X.", "..X..", ".X...", "X....", "XXXXX"),
    "0": (".XXX.", "X...X", "X..XX", "X.X.X", "XX..X", "X...X", ".XXX."),
    "1": ("..X..", ".XX..", "..X..", "..X..", "..X..", "..X..", ".XXX."),
    "2": (".XXX.", "X...X", "....X", "...X.", "..X..", ".X...", "XXXXX"),
    "3": ("XXXXX", "...X.", "..X..", "...X.", "....X", "X...X", ".XXX."),
    "4": ("...X.", "..XX.", ".X.X.", "X..X.", "XXXXX", "...X.", "...X."),
    "5": ("XXXXX", "X....", "XXXX.", "....X", "....X", "X...X", ".XXX."),
    "6": ("..XX.", ".X...", "X....", "XXXX.", "X...X", "X...X", ".XXX."),
    "7": ("XXXXX", "....X", "...X.", "..X..", ".X...", ".X...", ".X..."),
    "8": (".XXX.", "X...X", "X...X", ".XXX.", "X...X", "X...X", ".XXX."),
    "9": (".XXX.", "X...X", "X...X", ".XXXX", "....X", "...X.", ".XX.."),
    " ": (".....", ".....", ".....", ".....", ".....", ".....", "....."),
    "-": (".....", ".....", ".....", "XXXXX", ".....", ".....", "....."),
    "_": (".....", ".....", ".....", ".....", ".....", ".....", "XXXXX"),
    ".": (".....", ".....", ".....", ".....", ".....", ".XX..", ".XX.."),
    ",": (".....", ".....", ".....", ".....", ".XX..", "..X..", ".X..."),
    "'": ("..X..", "..X..", ".X...", ".....", ".....", ".....", "....."),
    "?": (".XXX.", "X...X", "....X", "...X.", "..X..", ".....", "..X.."),
    "!": ("..X..", "..X..", "..X..", "..X..", "..X..", ".....", "..X.."),
    ":": (".....", ".XX..", ".XX..", ".....", ".XX..", ".XX..", "....."),
    "(": ("...X.", "..X..", "..X..", "..X..", "..X..", "..X..", "...X."),
    ")": ("..X..", "...X.", "...X.", "...X.", "...X.", "...X.", "..X.."),
    "/": ("....X", "....X", "...X.", "..X..", ".X...", "X....", "X...."),
}

_FALLBACK = ("XXXXX", "X...X", "X...X", "X...X", "X...X", "X...X", "XXXXX")


def _compile(rows: tuple[str, ...]) -> np.ndarray:
    return np.array([[c == "X" for c in row] for row in rows], dtype=bool)


GLYPHS: dict[str, np.ndarray] = {ch: _compile(rows) for ch, rows in _RAW.items()}
FALLBACK_GLYPH = _compile(_FALLBACK)


def glyph_for(ch: str) -> np.ndarray:
    glyph = GLYPHS.get(ch)
    if glyph is None:
        glyph = GLYPHS.get(ch.upper())
    return glyph if glyph is not None else FALLBACK_GLYPH


def measure_text(text: str, scale: int = 1) -> tuple[int, int]:
    """Pixel (width, height) of a rendered string; empty text is 0 wide."""
    if not text:
        return (0, GLYPH_H * scale)
    width = len(text) * GLYPH_W + (len(text) - 1) * SPACING
    return (width * scale, GLYPH_H * scale)


def draw_text(pixels: np.ndarray, x: int, y: int, text: str,
              color: tuple[int, int, int, int], scale: int = 1) -> None:
    """Draw set bits of each glyph into a writable HxWx4 array, clipped."""
    h, w = pixels.shape[:2]
    cx = x
    for ch in text:
        glyph = glyph_for(ch)
        if scale != 1:
            glyph = np.repeat(np.repeat(glyph, scale, axis=0), scale, axis=1)
        gh, gw = glyph.shape
        x0, y0 = max(cx, 0), max(y, 0)
        x1, y1 = min(cx + gw, w), min(y + gh, h)
        if x0 < x1 and y0 < y1:
            sub = glyph[y0 - y:y1 - y, x0 - cx:x1 - cx]
            region = pixels[y0:y1, x0:x1]
            region[sub] = color
        cx += (GLYPH_W + SPACING) * scale

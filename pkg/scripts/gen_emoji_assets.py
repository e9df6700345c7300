#!/usr/bin/env python3
"""Regenerate the emoji glyph PNGs shipped in vispipe/assets/emoji.

Glyphs are drawn procedurally (64x64 RGBA) so they carry no third-party
licensing and regenerate bit-identically.  Run from the repo root:

    python scripts/gen_emoji_assets.py
"""

from __future__ import annotations

import json
import os

import numpy as np
from PIL import Image

SIZE = 64
FACE = (250, 200, 40, 255)
DARK = (60, 40, 20, 255)
WHITE = (255, 255, 255, 255)
RED = (220, 60, 60, 255)
PINK = (240, 110, 130, 255)
BLUE = (90, 160, 240, 255)


def _grid():
    ys, xs = np.mgrid[0:SIZE, 0:SIZE]
    return xs + 0.5, ys + 0.5


def disc(arr, cx, cy, r, color):
    px, py = _grid()
    sel = (px - cx) ** 2 + (py - cy) ** 2 <= r * r
    arr[sel] = color


def ellipse(arr, cx, cy, rx, ry, color):
    px, py = _grid()
    sel = ((px - cx) / rx) ** 2 + ((py - cy) / ry) ** 2 <= 1.0
    arr[sel] = color


def rect(arr, x1, y1, x2, y2, color):
    arr[int(y1):int(y2), int(x1):int(x2)] = color


def arc(arr, cx, cy, r, width, color, lower=True):
    px, py = _grid()
    d2 = (px - cx) ** 2 + (py - cy) ** 2
    ring = (d2 <= r * r) & (d2 >= (r - width) ** 2)
    half = py >= cy if lower else py <= cy
    arr[ring & half] = color


def base_face():
    arr = np.zeros((SIZE, SIZE, 4), dtype=np.uint8)
    disc(arr, 32, 32, 31, FACE)
    return arr


def eyes(arr, left=True, right=True, r=4.0):
    if left:
        disc(arr, 21, 25, r, DARK)
    if right:
        disc(arr, 43, 25, r, DARK)


def smile(arr):
    arc(arr, 32, 34, 16, 5, DARK, lower=True)


def frown(arr):
    arc(arr, 32, 52, 14, 5, DARK, lower=False)


def glyph_smiling_face():
    arr = base_face()
    eyes(arr)
    smile(arr)
    return arr


def glyph_grinning_face():
    arr = base_face()
    eyes(arr)
    disc(arr, 32, 40, 12, DARK)
    rect(arr, 22, 38, 42, 43, WHITE)
    return arr


def glyph_winking_face():
    arr = base_face()
    eyes(arr, left=False)
    rect(arr, 15, 24, 28, 27, DARK)
    smile(arr)
    return arr


def glyph_face_with_tongue():
    arr = base_face()
    eyes(arr)
    smile(arr)
    ellipse(arr, 32, 50, 8, 9, PINK)
    return arr


def glyph_winking_face_with_tongue():
    arr = glyph_winking_face()
    ellipse(arr, 32, 50, 8, 9, PINK)
    return arr


def glyph_neutral_face():
    arr = base_face()
    eyes(arr)
    rect(arr, 20, 42, 44, 46, DARK)
    return arr


def glyph_frowning_face():
    arr = base_face()
    eyes(arr)
    frown(arr)
    return arr


def glyph_angry_face():
    arr = base_face()
    eyes(arr)
    rect(arr, 14, 16, 28, 20, DARK)
    rect(arr, 36, 16, 50, 20, DARK)
    frown(arr)
    return arr


def glyph_crying_face():
    arr = base_face()
    eyes(arr)
    ellipse(arr, 21, 36, 4, 7, BLUE)
    frown(arr)
    return arr


def glyph_smiling_face_with_sunglasses():
    arr = base_face()
    rect(arr, 12, 20, 52, 24, DARK)
    ellipse(arr, 21, 26, 9, 7, DARK)
    ellipse(arr, 43, 26, 9, 7, DARK)
    smile(arr)
    return arr


def glyph_face_with_open_mouth():
    arr = base_face()
    eyes(arr)
    disc(arr, 32, 44, 9, DARK)
    return arr


def glyph_smiling_face_with_heart_eyes():
    arr = base_face()
    for cx in (21, 43):
        disc(arr, cx - 3, 23, 4, RED)
        disc(arr, cx + 3, 23, 4, RED)
        ellipse(arr, cx, 27, 7, 5, RED)
    smile(arr)
    return arr


GLYPHS = {
    "smiling_face": glyph_smiling_face,
    "grinning_face": glyph_grinning_face,
    "winking_face": glyph_winking_face,
    "face_with_tongue": glyph_face_with_tongue,
    "winking_face_with_tongue": glyph_winking_face_with_tongue,
    "neutral_face": glyph_neutral_face,
    "frowning_face": glyph_frowning_face,
    "angry_face": glyph_angry_face,
    "crying_face": glyph_crying_face,
    "smiling_face_with_sunglasses": glyph_smiling_face_with_sunglasses,
    "face_with_open_mouth": glyph_face_with_open_mouth,
    "smiling_face_with_heart_eyes": glyph_smiling_face_with_heart_eyes,
}


def main():
    out_dir = os.path.join(os.path.dirname(__file__), "..", "src", "vispipe",
                           "assets", "emoji")
    out_dir = os.path.abspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    table = {}
    for name, fn in sorted(GLYPHS.items()):
        filename = f"{name}.png"
        Image.fromarray(fn(), "RGBA").save(os.path.join(out_dir, filename))
        table[name] = filename
    with open(os.path.join(out_dir, "names.json"), "w", encoding="utf-8") as f:
        json.dump(table, f, indent=2, sort_keys=True)
    print(f"wrote {len(table)} glyphs to {out_dir}")


if __name__ == "__main__":
    main()

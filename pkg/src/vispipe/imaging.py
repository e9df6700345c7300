"""Raster operations behind the symbolic image modules.

All functions are pure: they never touch input rasters and return fresh
Images.  Quantization is floor(x + 0.5) (round half up) everywhere so results
are reproducible and match the brute-force oracles in the test suite.

Geometry used by region tagging (kept stable for the pixel-diff tests):
- box outlines are STROKE px wide, drawn inside the rounded box bounds;
- each label sits in a filled band of the region's color, LABEL_PAD px of
  padding around 5x7 text, placed directly above the box top-left corner,
  moved inside the box when there is no room above, and shifted left to stay
  inside the image.
"""

from __future__ import annotations

import numpy as np

from . import font
from .errors import EmptyCrop, UntaggedRegion, ValueError_
from .values import Box, Image, Mask, ObjectRegion

STROKE = 2
LABEL_PAD = 1
LABEL_SCALE = 1

# label/outline palette, cycled per region index; dark enough for white text
PALETTE: tuple[tuple[int, int, int, int], ...] = (
    (220, 38, 38, 255),    # red
    (37, 99, 235, 255),    # blue
    (22, 163, 74, 255),    # green
    (234, 88, 12, 255),    # orange
    (147, 51, 234, 255),   # purple
    (13, 148, 136, 255),   # teal
    (219, 39, 119, 255),   # magenta
)

_LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def quantize(values: np.ndarray) -> np.ndarray:
    """Round half up and clip into uint8."""
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# Crops


def crop_pixels(image: Image, x1: int, y1: int, x2: int, y2: int) -> Image:
    x1c, y1c = max(x1, 0), max(y1, 0)
    x2c, y2c = min(x2, image.width), min(y2, image.height)
    if x2c - x1c <= 0 or y2c - y1c <= 0:
        raise EmptyCrop(
            f"crop ({x1},{y1},{x2},{y2}) has no area inside a "
            f"{image.width}x{image.height} image")
    return Image(image.pixels[y1c:y2c, x1c:x2c])


CROP_RELATIONS = ("none", "left", "right", "above", "below", "frontof", "behind")


def crop_spatial(image: Image, box: Box, relation: str = "none") -> Image:
    """Crop the box itself, or the image strip a spatial preposition names.

    left/right keep full height beside the box; above/below keep full width.
    frontof/behind alias the plain crop: there is no depth model.
    """
    if relation not in CROP_RELATIONS:
        raise ValueError_(f"unknown crop relation {relation!r}")
    bx1, by1, bx2, by2 = box.clamp(image.width, image.height).int_bounds()
    if relation == "left":
        return crop_pixels(image, 0, 0, bx1, image.height)
    if relation == "right":
        return crop_pixels(image, bx2, 0, image.width, image.height)
    if relation == "above":
        return crop_pixels(image, 0, 0, image.width, by1)
    if relation == "below":
        return crop_pixels(image, 0, by2, image.width, image.height)
    return crop_pixels(image, bx1, by1, bx2, by2)


# ---------------------------------------------------------------------------
# Mask helpers


def union_mask(image: Image, regions: tuple[ObjectRegion, ...]) -> np.ndarray:
    """Boolean HxW union of region masks; validates mask alignment."""
    combined = np.zeros((image.height, image.width), dtype=bool)
    for region in regions:
        mask = region.mask
        assert mask is not None
        if mask.width != image.width or mask.height != image.height:
            raise ValueError_(
                f"mask {mask.width}x{mask.height} does not match image "
                f"{image.width}x{image.height}")
        combined |= mask.bits
    return combined


# ---------------------------------------------------------------------------
# Color pop


def luma(rgb: np.ndarray) -> np.ndarray:
    """Rec.601 luma of an (..., 3) float or uint8 array, unquantized."""
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    return _LUMA_WEIGHTS[0] * r + _LUMA_WEIGHTS[1] * g + _LUMA_WEIGHTS[2] * b


def color_pop(image: Image, regions: tuple[ObjectRegion, ...]) -> Image:
    """Keep masked pixels; replace the rest with their gray (Y,Y,Y); alpha kept."""
    keep = union_mask(image, regions)
    out = image.pixels.copy()
    gray = quantize(luma(image.pixels[..., :3].astype(np.float64)))
    outside = ~keep
    for c in range(3):
        channel = out[..., c]
        channel[outside] = gray[outside]
    return Image(out)


# ---------------------------------------------------------------------------
# Background blur

BLUR_RADIUS = 5
BLUR_PASSES = 2


def box_blur_channel(channel: np.ndarray, radius: int) -> np.ndarray:
    """One pass of a (2r+1)^2 box average, normalized over in-bounds pixels.

    Uses a summed-area table; the per-pixel divisor is the count of window
    pixels inside the image, so constant inputs are fixed points.
    """
    h, w = channel.shape
    sat = np.zeros((h + 1, w + 1), dtype=np.float64)
    sat[1:, 1:] = np.cumsum(np.cumsum(channel, axis=0), axis=1)
    ys = np.arange(h)
    xs = np.arange(w)
    y1 = np.clip(ys - radius, 0, h)[:, None]
    y2 = np.clip(ys + radius + 1, 0, h)[:, None]
    x1 = np.clip(xs - radius, 0, w)[None, :]
    x2 = np.clip(xs + radius + 1, 0, w)[None, :]
    total = sat[y2, x2] - sat[y1, x2] - sat[y2, x1] + sat[y1, x1]
    count = (y2 - y1) * (x2 - x1)
    return total / count


def blurred_background(image: Image, radius: int = BLUR_RADIUS,
                       passes: int = BLUR_PASSES) -> np.ndarray:
    """Full-image RGB blur as float64; alpha is not blurred."""
    rgb = image.pixels[..., :3].astype(np.float64)
    for _ in range(passes):
        rgb = np.stack([box_blur_channel(rgb[..., c], radius) for c in range(3)],
                       axis=-1)
    return rgb


def bg_blur(image: Image, regions: tuple[ObjectRegion, ...]) -> Image:
    keep = union_mask(image, regions)
    blurred = quantize(blurred_background(image))
    out = image.pixels.copy()
    outside = ~keep
    for c in range(3):
        channel = out[..., c]
        channel[outside] = blurred[..., c][outside]
    return Image(out)


# ---------------------------------------------------------------------------
# Tagging


def _label_band_rect(text: str, box_bounds: tuple[int, int, int, int],
                     image_w: int, image_h: int) -> tuple[int, int, int, int]:
    bx1, by1, _, _ = box_bounds
    tw, th = font.measure_text(text, LABEL_SCALE)
    band_w = tw + 2 * LABEL_PAD
    band_h = th + 2 * LABEL_PAD
    x = min(max(bx1, 0), max(image_w - band_w, 0))
    y = by1 - band_h
    if y < 0:
        y = max(by1, 0)
    y = min(y, max(image_h - band_h, 0))
    return (x, y, min(x + band_w, image_w), min(y + band_h, image_h))


def draw_outline(pixels: np.ndarray, bounds: tuple[int, int, int, int],
                 color: tuple[int, int, int, int], stroke: int = STROKE) -> None:
    h, w = pixels.shape[:2]
    x1, y1, x2, y2 = bounds
    x1, y1 = max(x1, 0), max(y1, 0)
    x2, y2 = min(x2, w), min(y2, h)
    if x2 <= x1 or y2 <= y1:
        return
    inner_x1, inner_y1 = min(x1 + stroke, x2), min(y1 + stroke, y2)
    inner_x2, inner_y2 = max(x2 - stroke, x1), max(y2 - stroke, y1)
    pixels[y1:inner_y1, x1:x2] = color
    pixels[inner_y2:y2, x1:x2] = color
    pixels[y1:y2, x1:inner_x1] = color
    pixels[y1:y2, inner_x2:x2] = color


def tag_regions(image: Image, regions: tuple[ObjectRegion, ...]) -> Image:
    """Outline each region and draw its tag (or category) in a label band."""
    labels = []
    for i, region in enumerate(regions):
        label = region.label()
        if label is None:
            raise UntaggedRegion(f"region {i} has neither tag nor category")
        labels.append(label)
    out = image.pixels.copy()
    for i, region in enumerate(regions):
        color = PALETTE[i % len(PALETTE)]
        bounds = region.box.clamp(image.width, image.height).int_bounds()
        draw_outline(out, bounds, color)
        band = _label_band_rect(labels[i], bounds, image.width, image.height)
        x1, y1, x2, y2 = band
        out[y1:y2, x1:x2] = color
        font.draw_text(out, x1 + LABEL_PAD, y1 + LABEL_PAD, labels[i],
                       (255, 255, 255, 255), LABEL_SCALE)
    return Image(out)


def tag_touched_mask(image: Image, regions: tuple[ObjectRegion, ...]) -> np.ndarray:
    """Boolean mask of every pixel tagging is allowed to change (test oracle
    support: recomputed from the documented geometry, not from the output)."""
    touched = np.zeros((image.height, image.width), dtype=bool)
    for i, region in enumerate(regions):
        label = region.label() or ""
        bounds = region.box.clamp(image.width, image.height).int_bounds()
        x1, y1, x2, y2 = bounds
        x1, y1 = max(x1, 0), max(y1, 0)
        x2, y2 = min(x2, image.width), min(y2, image.height)
        if x2 > x1 and y2 > y1:
            ring = np.zeros_like(touched)
            ring[y1:y2, x1:x2] = True
            ix1, iy1 = min(x1 + STROKE, x2), min(y1 + STROKE, y2)
            ix2, iy2 = max(x2 - STROKE, x1), max(y2 - STROKE, y1)
            ring[iy1:iy2, ix1:ix2] = False
            touched |= ring
        bx1, by1, bx2, by2 = _label_band_rect(label, bounds, image.width, image.height)
        touched[by1:by2, bx1:bx2] = True
    return touched


# ---------------------------------------------------------------------------
# Emoji stamping


def scale_nearest(rgba: np.ndarray, width: int, height: int) -> np.ndarray:
    """Nearest-neighbor resize of an (h, w, 4) array."""
    src_h, src_w = rgba.shape[:2]
    ys = np.minimum(((np.arange(height) + 0.5) * src_h / height).astype(int), src_h - 1)
    xs = np.minimum(((np.arange(width) + 0.5) * src_w / width).astype(int), src_w - 1)
    return rgba[ys[:, None], xs[None, :]]


def composite_over(base: np.ndarray, overlay: np.ndarray) -> np.ndarray:
    """Alpha-composite overlay onto base (both (h, w, 4) uint8)."""
    fa = overlay[..., 3:4].astype(np.float64) / 255.0
    ba = base[..., 3:4].astype(np.float64) / 255.0
    out_a = fa + ba * (1.0 - fa)
    fg = overlay[..., :3].astype(np.float64)
    bg = base[..., :3].astype(np.float64)
    # premultiplied blend, un-premultiplied where the result has any alpha
    num = fg * fa + bg * ba * (1.0 - fa)
    rgb = np.where(out_a > 0, num / np.where(out_a > 0, out_a, 1.0), 0.0)
    out = np.empty_like(base)
    out[..., :3] = quantize(rgb)
    out[..., 3] = quantize(out_a[..., 0] * 255.0)
    return out


def stamp_glyph(image: Image, regions: tuple[ObjectRegion, ...],
                glyph: Image) -> Image:
    """Scale the glyph to each region's box and composite it over the image."""
    out = image.pixels.copy()
    for region in regions:
        x1, y1, x2, y2 = region.box.clamp(image.width, image.height).int_bounds()
        w, h = x2 - x1, y2 - y1
        if w <= 0 or h <= 0:
            continue
        scaled = scale_nearest(glyph.pixels, w, h)
        out[y1:y2, x1:x2] = composite_over(out[y1:y2, x1:x2], scaled)
    return Image(out)


# ---------------------------------------------------------------------------
# Misc drawing used by rationales and scenes


def draw_regions_overlay(image: Image, regions: tuple[ObjectRegion, ...],
                         stroke: int = STROKE) -> Image:
    """Boxes (and translucent masks) drawn over a copy, palette-cycled."""
    out = image.pixels.copy()
    for i, region in enumerate(regions):
        color = PALETTE[i % len(PALETTE)]
        if region.mask is not None and \
                region.mask.bits.shape == out.shape[:2]:
            sel = region.mask.bits
            mixed = out[sel].astype(np.float64)
            tint = np.array(color, dtype=np.float64)
            out[sel] = quantize(0.6 * mixed + 0.4 * tint)
        bounds = region.box.clamp(image.width, image.height).int_bounds()
        draw_outline(out, bounds, color, stroke)
    return Image(out)


def fill_masked(image: Image, mask: Mask, color: tuple[int, int, int]) -> Image:
    if mask.width != image.width or mask.height != image.height:
        raise ValueError_("mask does not match image dimensions")
    out = image.pixels.copy()
    sel = mask.bits
    for c in range(3):
        channel = out[..., c]
        channel[sel] = color[c]
    return Image(out)

from __future__ import annotations

import os

import numpy as np
import pytest

from vispipe import font, imaging
from vispipe.errors import EmptyCrop, UnknownEmoji, UntaggedRegion, ValueError_
from vispipe.imaging import (
    bg_blur,
    box_blur_channel,
    color_pop,
    crop_spatial,
    scale_nearest,
    stamp_glyph,
    tag_regions,
)
from vispipe.registry import emoji_table
from vispipe.values import Box, Image, Mask, ObjectRegion

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "goldens")


def checker_image(w=40, h=30):
    ys, xs = np.mgrid[0:h, 0:w]
    arr = np.zeros((h, w, 4), dtype=np.uint8)
    arr[..., 0] = (xs * 7 + ys * 3) % 256
    arr[..., 1] = (xs * 5) % 256
    arr[..., 2] = (ys * 11) % 256
    arr[..., 3] = 255
    return Image(arr)


def rect_mask(w, h, x1, y1, x2, y2):
    bits = np.zeros((h, w), dtype=bool)
    bits[y1:y2, x1:x2] = True
    return Mask(bits)


def region_with_mask(w, h, x1, y1, x2, y2, **kw):
    return ObjectRegion(Box(x1, y1, x2, y2),
                        mask=rect_mask(w, h, x1, y1, x2, y2), **kw)


# ---------------------------------------------------------------------------
# crops


class TestCrop:
    def test_left_strip(self):
        img = Image.blank(100, 80)
        out = crop_spatial(img, Box(40, 10, 60, 50), "left")
        assert (out.width, out.height) == (40, 80)
        assert np.array_equal(out.pixels, img.pixels[0:80, 0:40])

    def test_plain_crop_size(self):
        img = checker_image(100, 80)
        out = crop_spatial(img, Box(40, 10, 60, 50), "none")
        assert (out.width, out.height) == (20, 40)
        assert np.array_equal(out.pixels, img.pixels[10:50, 40:60])

    def test_left_of_left_edge_is_empty(self):
        with pytest.raises(EmptyCrop):
            crop_spatial(Image.blank(100, 80), Box(0, 10, 60, 50), "left")

    def test_right_above_below(self):
        img = checker_image(100, 80)
        right = crop_spatial(img, Box(40, 10, 60, 50), "right")
        assert np.array_equal(right.pixels, img.pixels[:, 60:])
        above = crop_spatial(img, Box(40, 10, 60, 50), "above")
        assert np.array_equal(above.pixels, img.pixels[:10, :])
        below = crop_spatial(img, Box(40, 10, 60, 50), "below")
        assert np.array_equal(below.pixels, img.pixels[50:, :])

    def test_frontof_behind_alias_plain(self):
        img = checker_image()
        box = Box(5, 5, 20, 20)
        for relation in ("frontof", "behind"):
            assert crop_spatial(img, box, relation) == \
                crop_spatial(img, box, "none")

    def test_box_clamped_to_image(self):
        img = checker_image(30, 20)
        out = crop_spatial(img, Box(-10, -10, 15, 40), "none")
        assert (out.width, out.height) == (15, 20)

    def test_unknown_relation(self):
        with pytest.raises(ValueError_):
            crop_spatial(checker_image(), Box(0, 0, 5, 5), "inside")

    def test_inputs_never_mutated(self):
        img = checker_image()
        before = img.pixels.copy()
        crop_spatial(img, Box(5, 5, 20, 20), "none")
        assert np.array_equal(img.pixels, before)


# ---------------------------------------------------------------------------
# color pop


def luma_oracle(r, g, b):
    # independent: round-half-up on the documented weights
    import math
    return min(255, max(0, math.floor(0.299 * r + 0.587 * g + 0.114 * b + 0.5)))


class TestColorPop:
    def test_outside_pixel_derived_value(self):
        img = Image.blank(4, 4, (200, 100, 50, 255))
        regions = (region_with_mask(4, 4, 0, 0, 2, 2),)
        out = color_pop(img, regions)
        assert tuple(out.pixels[3, 3, :3]) == (124, 124, 124)
        assert luma_oracle(200, 100, 50) == 124

    def test_inside_pixel_unchanged(self):
        img = Image.blank(4, 4, (200, 100, 50, 255))
        out = color_pop(img, (region_with_mask(4, 4, 0, 0, 2, 2),))
        assert tuple(out.pixels[1, 1]) == (200, 100, 50, 255)

    def test_full_mask_identity(self):
        img = checker_image()
        out = color_pop(img, (region_with_mask(40, 30, 0, 0, 40, 30),))
        assert out == img

    def test_alpha_preserved(self):
        arr = checker_image().pixels.copy()
        arr[..., 3] = 77
        img = Image(arr)
        out = color_pop(img, (region_with_mask(40, 30, 0, 0, 5, 5),))
        assert np.array_equal(out.pixels[..., 3], img.pixels[..., 3])

    def test_matches_pixel_loop_oracle(self):
        img = checker_image(12, 9)
        regions = (region_with_mask(12, 9, 2, 2, 6, 6),)
        out = color_pop(img, regions)
        for y in range(9):
            for x in range(12):
                r, g, b, a = (int(v) for v in img.pixels[y, x])
                if 2 <= x < 6 and 2 <= y < 6:
                    expected = (r, g, b, a)
                else:
                    gray = luma_oracle(r, g, b)
                    expected = (gray, gray, gray, a)
                assert tuple(int(v) for v in out.pixels[y, x]) == expected

    def test_idempotent(self):
        img = checker_image()
        regions = (region_with_mask(40, 30, 5, 5, 20, 20),)
        once = color_pop(img, regions)
        twice = color_pop(once, regions)
        assert once == twice

    def test_mask_required(self):
        from vispipe.registry import default_registry  # module-level check below
        img = checker_image()
        with pytest.raises(ValueError_):
            imaging.union_mask(img, (ObjectRegion(
                Box(0, 0, 4, 4), mask=rect_mask(10, 10, 0, 0, 4, 4)),))


# ---------------------------------------------------------------------------
# background blur


def blur_oracle(pixels: np.ndarray, radius: int, passes: int) -> np.ndarray:
    """Direct nested-loop convolution with in-bounds normalization."""
    h, w = pixels.shape[:2]
    current = pixels[..., :3].astype(np.float64)
    for _ in range(passes):
        out = np.zeros_like(current)
        for y in range(h):
            for x in range(w):
                y1, y2 = max(y - radius, 0), min(y + radius + 1, h)
                x1, x2 = max(x - radius, 0), min(x + radius + 1, w)
                window = current[y1:y2, x1:x2]
                out[y, x] = window.reshape(-1, 3).mean(axis=0)
        current = out
    return np.clip(np.floor(current + 0.5), 0, 255).astype(np.uint8)


class TestBgBlur:
    def test_constant_image_fixed_point(self):
        img = Image.blank(30, 20, (120, 33, 99, 255))
        out = bg_blur(img, (region_with_mask(30, 20, 5, 5, 10, 10),))
        assert out == img

    def test_single_white_pixel_single_pass_value(self):
        arr = np.zeros((31, 31), dtype=np.float64)
        arr[15, 15] = 255.0
        blurred = box_blur_channel(arr, radius=5)
        assert blurred[15, 15] == pytest.approx(255 / 121)
        assert blurred[15, 10] == pytest.approx(255 / 121)
        assert blurred[15, 9] == 0.0

    def test_two_pass_matches_convolution_oracle(self):
        img = checker_image(20, 14)
        regions = (region_with_mask(20, 14, 3, 3, 8, 8),)
        out = bg_blur(img, regions)
        expected = blur_oracle(img.pixels, imaging.BLUR_RADIUS,
                               imaging.BLUR_PASSES)
        keep = regions[0].mask.bits
        for y in range(14):
            for x in range(20):
                if keep[y, x]:
                    assert np.array_equal(out.pixels[y, x], img.pixels[y, x])
                else:
                    assert np.array_equal(out.pixels[y, x, :3], expected[y, x])

    def test_inside_mask_unchanged(self):
        img = checker_image()
        regions = (region_with_mask(40, 30, 10, 10, 25, 25),)
        out = bg_blur(img, regions)
        sel = regions[0].mask.bits
        assert np.array_equal(out.pixels[sel], img.pixels[sel])


# ---------------------------------------------------------------------------
# tagging


def allowed_tag_mask(img: Image, regions) -> np.ndarray:
    """Test-side reconstruction of the pixels tagging may touch, from the
    documented geometry (outline ring + label band)."""
    allowed = np.zeros((img.height, img.width), dtype=bool)
    for i, region in enumerate(regions):
        label = region.tag if region.tag is not None else region.category
        x1, y1, x2, y2 = region.box.clamp(img.width, img.height).int_bounds()
        ring = np.zeros_like(allowed)
        ring[y1:y2, x1:x2] = True
        ring[min(y1 + imaging.STROKE, y2):max(y2 - imaging.STROKE, y1),
             min(x1 + imaging.STROKE, x2):max(x2 - imaging.STROKE, x1)] = False
        allowed |= ring
        tw, th = font.measure_text(label, imaging.LABEL_SCALE)
        bw, bh = tw + 2 * imaging.LABEL_PAD, th + 2 * imaging.LABEL_PAD
        bx = min(max(x1, 0), max(img.width - bw, 0))
        by = y1 - bh
        if by < 0:
            by = max(y1, 0)
        by = min(by, max(img.height - bh, 0))
        allowed[by:min(by + bh, img.height), bx:min(bx + bw, img.width)] = True
    return allowed


class TestTag:
    def test_changes_confined_to_outline_and_band(self):
        img = checker_image(80, 60)
        regions = (ObjectRegion(Box(20, 25, 60, 50), tag="Amy"),)
        out = tag_regions(img, regions)
        diff = np.any(out.pixels != img.pixels, axis=-1)
        assert diff.any()
        assert not (diff & ~allowed_tag_mask(img, regions)).any()

    def test_empty_list_identity(self):
        img = checker_image()
        assert tag_regions(img, ()) == img

    def test_untagged_region_rejected(self):
        with pytest.raises(UntaggedRegion):
            tag_regions(checker_image(), (ObjectRegion(Box(0, 0, 5, 5)),))

    def test_category_fallback_used(self):
        img = checker_image(80, 60)
        out = tag_regions(img, (ObjectRegion(Box(30, 30, 50, 45),
                                             category="face"),))
        assert out != img

    def test_band_moves_inside_when_no_room_above(self):
        img = checker_image(80, 60)
        regions = (ObjectRegion(Box(10, 0, 50, 20), tag="top"),)
        out = tag_regions(img, regions)
        diff = np.any(out.pixels != img.pixels, axis=-1)
        assert not (diff & ~allowed_tag_mask(img, regions)).any()

    def test_input_not_mutated(self):
        img = checker_image()
        before = img.pixels.copy()
        tag_regions(img, (ObjectRegion(Box(5, 5, 20, 20), tag="x"),))
        assert np.array_equal(img.pixels, before)


# ---------------------------------------------------------------------------
# emoji


class TestEmoji:
    def test_table_contents(self):
        table = emoji_table()
        assert len(table) >= 10
        for required in ("face_with_tongue", "winking_face", "smiling_face"):
            assert required in table

    def test_unknown_name_lists_available(self):
        from vispipe.registry import default_registry, ModuleContext
        from vispipe.values import ProgramState, Value
        reg = default_registry()
        impl = reg.resolve("EMOJI")
        args = {"image": Value.image(checker_image()),
                "object": Value.object_list([ObjectRegion(Box(0, 0, 5, 5))]),
                "emoji": Value.text("not_a_face")}
        with pytest.raises(UnknownEmoji) as exc:
            impl.execute(args, ModuleContext(state=ProgramState()))
        assert "winking_face" in str(exc.value)

    def test_outside_box_unchanged(self):
        img = checker_image(60, 40)
        glyph = emoji_table()["smiling_face"]
        out = stamp_glyph(img, (ObjectRegion(Box(10, 5, 40, 35)),), glyph)
        outside = np.ones((40, 60), dtype=bool)
        outside[5:35, 10:40] = False
        assert np.array_equal(out.pixels[outside], img.pixels[outside])

    def test_glyph_extent_matches_box(self):
        img = Image.blank(100, 80, (0, 255, 0, 255))
        box = Box(20, 10, 75, 66)
        out = stamp_glyph(img, (ObjectRegion(box),), emoji_table()["smiling_face"])
        diff = np.any(out.pixels != img.pixels, axis=-1)
        ys, xs = np.nonzero(diff)
        # the glyph disc touches its raster edges, so the changed extent
        # matches the box extent within a pixel
        assert abs(xs.min() - 20) <= 1 and abs(xs.max() + 1 - 75) <= 1
        assert abs(ys.min() - 10) <= 1 and abs(ys.max() + 1 - 66) <= 1

    def test_scale_nearest_shape(self):
        glyph = emoji_table()["smiling_face"]
        scaled = scale_nearest(glyph.pixels, 13, 29)
        assert scaled.shape == (29, 13, 4)


# ---------------------------------------------------------------------------
# golden images


GOLDEN_CASES = ["tag", "colorpop", "bgblur", "emoji"]


def golden_input():
    return checker_image(64, 48)


def golden_output(name: str) -> Image:
    img = golden_input()
    if name == "tag":
        return tag_regions(img, (ObjectRegion(Box(8, 14, 30, 34), tag="amy"),
                                 ObjectRegion(Box(36, 6, 58, 28), tag="raj")))
    if name == "colorpop":
        return color_pop(img, (region_with_mask(64, 48, 10, 10, 30, 30),))
    if name == "bgblur":
        return bg_blur(img, (region_with_mask(64, 48, 20, 12, 44, 36),))
    if name == "emoji":
        return stamp_glyph(img, (ObjectRegion(Box(16, 8, 48, 40)),),
                           emoji_table()["face_with_tongue"])
    raise AssertionError(name)


@pytest.mark.parametrize("name", GOLDEN_CASES)
def test_golden_images(name):
    path = os.path.join(GOLDEN_DIR, f"{name}.png")
    assert os.path.exists(path), (
        f"golden fixture missing; run python tests/make_goldens.py")
    with open(path, "rb") as f:
        expected = Image.from_png(f.read())
    assert golden_output(name) == expected

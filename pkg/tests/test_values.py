from __future__ import annotations

import numpy as np
import pytest

from vispipe.errors import (
    DuplicateBinding,
    InvalidIdentifier,
    TypeMismatch,
    UnboundVariable,
    ValueError_,
)
from vispipe.values import (
    Box,
    Image,
    Mask,
    ObjectRegion,
    ProgramState,
    Value,
    ValueKind,
    format_number,
)


def small_image(w=4, h=3, color=(10, 20, 30, 255)):
    return Image.blank(w, h, color)


class TestBindLookup:
    def test_bind_then_lookup(self):
        state = ProgramState()
        img = Value.image(small_image())
        state.bind("IMAGE", img)
        assert state.lookup("IMAGE") is img

    def test_rebind_is_an_error(self):
        state = ProgramState()
        state.bind("A0", Value.number(1))
        with pytest.raises(DuplicateBinding):
            state.bind("A0", Value.number(2))

    def test_lowercase_name_rejected(self):
        with pytest.raises(InvalidIdentifier):
            ProgramState().bind("image", Value.number(1))

    @pytest.mark.parametrize("name", ["0ABC", "_A", "a", "AB-C", ""])
    def test_bad_identifiers(self, name):
        with pytest.raises(InvalidIdentifier):
            ProgramState().bind(name, Value.null())

    def test_lookup_unbound(self):
        with pytest.raises(UnboundVariable) as exc:
            ProgramState().lookup("OBJ", step_index=3)
        assert exc.value.name == "OBJ"
        assert exc.value.step_index == 3

    def test_lookup_after_bind_number(self):
        state = ProgramState()
        state.bind("ANSWER0", Value.number(3))
        assert state.lookup("ANSWER0").data == 3.0

    def test_lookup_is_case_sensitive(self):
        state = ProgramState()
        state.bind("OBJ", Value.number(1))
        with pytest.raises(UnboundVariable):
            state.lookup("Obj")

    def test_inputs_prebound_and_append_only(self):
        state = ProgramState({"IMAGE": Value.number(0)})
        state.bind("A", Value.number(1))
        state.bind("B", Value.number(2))
        assert set(state.names()) == {"IMAGE", "A", "B"}
        with pytest.raises(DuplicateBinding):
            state.bind("IMAGE", Value.number(9))


class TestImage:
    def test_pixels_read_only(self):
        img = small_image()
        with pytest.raises(Exception):
            img.pixels[0, 0, 0] = 99

    def test_construction_copies(self):
        arr = np.zeros((2, 2, 4), dtype=np.uint8)
        img = Image(arr)
        arr[0, 0, 0] = 77
        assert img.pixels[0, 0, 0] == 0

    def test_shape_validation(self):
        with pytest.raises(ValueError_):
            Image(np.zeros((2, 2, 3), dtype=np.uint8))
        with pytest.raises(ValueError_):
            Image(np.zeros((0, 2, 4), dtype=np.uint8))
        with pytest.raises(ValueError_):
            Image(np.zeros((2, 2, 4), dtype=np.float32))

    def test_content_hash_stable_and_content_based(self):
        a = small_image(color=(1, 2, 3, 255))
        b = small_image(color=(1, 2, 3, 255))
        c = small_image(color=(1, 2, 4, 255))
        assert a.content_hash == b.content_hash
        assert a.content_hash != c.content_hash
        assert a == b and a != c

    def test_png_round_trip(self):
        rng = np.random.default_rng(0)
        arr = rng.integers(0, 256, size=(5, 7, 4), dtype=np.uint8)
        img = Image(arr)
        again = Image.from_png(img.to_png())
        assert img == again


class TestBoxAndMask:
    def test_degenerate_box_rejected(self):
        with pytest.raises(ValueError_):
            Box(5, 0, 4, 10)

    def test_clamp(self):
        box = Box(-5, -5, 120, 90)
        assert box.clamp(100, 80).as_tuple() == (0, 0, 100, 80)

    def test_iou_basics(self):
        a = Box(0, 0, 10, 10)
        assert a.iou(a) == 1.0
        assert a.iou(Box(20, 20, 30, 30)) == 0.0
        assert a.iou(Box(5, 0, 15, 10)) == pytest.approx(50 / 150)

    def test_mask_extent(self):
        bits = np.zeros((5, 6), dtype=bool)
        bits[1:3, 2:5] = True
        assert Mask(bits).extent().as_tuple() == (2.0, 1.0, 5.0, 3.0)
        assert Mask(np.zeros((2, 2), dtype=bool)).extent() is None


class TestObjectRegion:
    def test_score_range(self):
        with pytest.raises(ValueError_):
            ObjectRegion(Box(0, 0, 1, 1), score=1.5)

    def test_mask_must_fit_box(self):
        bits = np.zeros((10, 10), dtype=bool)
        bits[0:9, 0:9] = True
        with pytest.raises(ValueError_):
            ObjectRegion(Box(4, 4, 6, 6), mask=Mask(bits))

    def test_label_prefers_tag(self):
        region = ObjectRegion(Box(0, 0, 1, 1), category="face", tag="amy")
        assert region.label() == "amy"
        assert region.with_tag(None).label() == "face"


class TestValue:
    def test_kind_discriminants(self):
        cases = [
            (Value.text("x"), ValueKind.TEXT),
            (Value.number(1), ValueKind.NUMBER),
            (Value.boolean(True), ValueKind.BOOLEAN),
            (Value.image(small_image()), ValueKind.IMAGE),
            (Value.box(Box(0, 0, 1, 1)), ValueKind.BOX),
            (Value.mask(Mask(np.ones((2, 2), dtype=bool))), ValueKind.MASK),
            (Value.object_list([]), ValueKind.OBJECT_LIST),
            (Value.text_list(["a"]), ValueKind.TEXT_LIST),
            (Value.null(), ValueKind.NULL),
        ]
        for value, kind in cases:
            assert value.kind is kind

    def test_accessor_mismatch(self):
        with pytest.raises(TypeMismatch):
            Value.number(1).as_text("arg")

    def test_payload_validation(self):
        with pytest.raises(ValueError_):
            Value(ValueKind.NUMBER, "not a number")
        with pytest.raises(ValueError_):
            Value(ValueKind.BOOLEAN, 1)  # bools must be real bools
        with pytest.raises(ValueError_):
            Value.object_list(["nope"])

    def test_render_short_integers_have_no_decimal_point(self):
        assert Value.number(3.0).render_short() == "3"
        assert Value.number(2.5).render_short() == "2.5"


def test_format_number():
    assert format_number(3.0) == "3"
    assert format_number(-2.0) == "-2"
    assert format_number(0.5) == "0.5"
    assert float(format_number(1e20)) == 1e20

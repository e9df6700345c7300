from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vispipe.serialization import (
    ImageStore,
    canonical_dumps,
    mask_from_rle,
    mask_to_rle,
    value_from_json,
    value_to_json,
)
from vispipe.values import Box, Image, Mask, ObjectRegion, Value


def _random_image(seed=0, w=6, h=4):
    rng = np.random.default_rng(seed)
    return Image(rng.integers(0, 256, size=(h, w, 4), dtype=np.uint8))


def _region(seed=1):
    bits = np.zeros((8, 8), dtype=bool)
    bits[2:5, 3:6] = True
    return ObjectRegion(Box(3, 2, 6, 5), mask=Mask(bits), score=0.75,
                        category="thing", tag="named")


def roundtrip(value: Value) -> Value:
    store = ImageStore()
    return value_from_json(value_to_json(value, store), store)


@pytest.mark.parametrize("value", [
    Value.text("hello 'quoted' \\ text"),
    Value.number(3.0),
    Value.number(0.1),
    Value.number(-1e-17),
    Value.boolean(False),
    Value.null(),
    Value.box(Box(0.5, 1.25, 10.75, 20.0)),
    Value.text_list(["a", "b", ""]),
    Value.object_list([]),
    Value.object_list([_region()]),
])
def test_roundtrip_exact(value):
    assert roundtrip(value) == value


def test_image_roundtrip_bit_exact():
    value = Value.image(_random_image())
    assert roundtrip(value) == value


def test_mask_roundtrip():
    bits = np.zeros((5, 9), dtype=bool)
    bits[0, 0] = True
    bits[4, 8] = True
    bits[2, 3:7] = True
    assert roundtrip(Value.mask(Mask(bits))) == Value.mask(Mask(bits))


@given(st.lists(st.booleans(), min_size=1, max_size=200),
       st.integers(min_value=1, max_value=20))
@settings(max_examples=200, deadline=None)
def test_rle_roundtrip_property(bits, width):
    # pad to a full rectangle
    height = (len(bits) + width - 1) // width
    padded = bits + [False] * (height * width - len(bits))
    mask = Mask(np.array(padded, dtype=bool).reshape(height, width))
    runs = mask_to_rle(mask)
    assert all(r >= 0 for r in runs)
    # runs after the first must be positive (maximal runs)
    assert all(r > 0 for r in runs[1:])
    assert mask_from_rle(width, height, runs) == mask


def test_rle_starts_with_zero_count():
    bits = np.ones((2, 2), dtype=bool)
    assert mask_to_rle(Mask(bits)) == [0, 4]


def test_image_store_idempotent_and_content_addressed(tmp_path):
    store = ImageStore(str(tmp_path / "imgs"))
    img = _random_image(3)
    first = store.put(img)
    second = store.put(Image(img.pixels))
    assert first == second == img.content_hash
    assert store.get(first) == img
    # a fresh store over the same directory still serves the bytes
    resurrected = ImageStore(str(tmp_path / "imgs"))
    assert resurrected.get(first) == img


def test_deserializing_image_needs_store():
    payload = value_to_json(Value.image(_random_image()), ImageStore())
    with pytest.raises(Exception):
        value_from_json(payload)


def test_canonical_dumps_is_stable():
    a = canonical_dumps({"b": 1, "a": [1.5, {"z": None, "y": "x"}]})
    b = canonical_dumps({"a": [1.5, {"y": "x", "z": None}], "b": 1})
    assert a == b
    assert " " not in a


def test_region_without_mask_roundtrips():
    region = ObjectRegion(Box(0, 0, 4, 4), score=0.5, category=None, tag=None)
    value = Value.object_list([region])
    assert roundtrip(value) == value

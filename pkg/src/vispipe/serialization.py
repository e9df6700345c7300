"""Canonical JSON serialization for runtime values.

Every Value variant round-trips bit-exactly.  Images are referenced by
content-hash ID with the PNG bytes kept out-of-band in an :class:`ImageStore`;
masks travel as run-length-encoded bit arrays (row-major, runs alternating
starting with the count of zero bits); boxes are 4-element arrays.

`canonical_dumps` is used wherever byte-identical output matters (reports,
persisted runs): sorted keys, no whitespace.
"""

from __future__ import annotations

import json
import os
from typing import Optional

import numpy as np

from .errors import ValueError_
from .values import Box, Image, Mask, ObjectRegion, Value, ValueKind


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


class ImageStore:
    """Content-addressed image storage: id -> PNG bytes.

    Purely in-memory unless a directory is given, in which case every put is
    also written to ``<dir>/<hex>.png`` and gets are backed by the directory.
    Putting the same pixels twice is a no-op (idempotent upload).
    """

    def __init__(self, directory: Optional[str] = None):
        self._png: dict[str, bytes] = {}
        self._dir = directory
        if directory:
            os.makedirs(directory, exist_ok=True)

    def _path(self, image_id: str) -> str:
        assert self._dir is not None
        return os.path.join(self._dir, image_id.replace("sha256:", "") + ".png")

    def put(self, image: Image) -> str:
        image_id = image.content_hash
        if image_id not in self._png:
            data = image.to_png()
            self._png[image_id] = data
            if self._dir:
                path = self._path(image_id)
                if not os.path.exists(path):
                    tmp = path + ".tmp"
                    with open(tmp, "wb") as f:
                        f.write(data)
                    os.replace(tmp, path)
        return image_id

    def put_png(self, data: bytes) -> str:
        return self.put(Image.from_png(data))

    def get_png(self, image_id: str) -> bytes:
        if image_id in self._png:
            return self._png[image_id]
        if self._dir:
            path = self._path(image_id)
            if os.path.exists(path):
                with open(path, "rb") as f:
                    data = f.read()
                self._png[image_id] = data
                return data
        raise KeyError(image_id)

    def get(self, image_id: str) -> Image:
        return Image.from_png(self.get_png(image_id))

    def __contains__(self, image_id: str) -> bool:
        if image_id in self._png:
            return True
        return bool(self._dir) and os.path.exists(self._path(image_id))


def mask_to_rle(mask: Mask) -> list[int]:
    """Row-major RLE, alternating run lengths, first run counts zero bits."""
    flat = mask.bits.ravel().astype(np.int8)
    if flat.size == 0:
        return []
    changes = np.nonzero(np.diff(flat))[0] + 1
    boundaries = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(boundaries).tolist()
    if flat[0] == 1:  # leading zero-run is implicit in the format
        runs = [0] + runs
    return [int(r) for r in runs]


def mask_from_rle(width: int, height: int, runs: list[int]) -> Mask:
    total = sum(runs)
    if total != width * height:
        raise ValueError_(
            f"RLE covers {total} bits, mask needs {width * height}")
    flat = np.zeros(width * height, dtype=bool)
    pos = 0
    bit = False
    for run in runs:
        if bit:
            flat[pos:pos + run] = True
        pos += run
        bit = not bit
    return Mask(flat.reshape(height, width))


def region_to_json(region: ObjectRegion) -> dict:
    out: dict = {
        "box": list(region.box.as_tuple()),
        "score": region.score,
        "category": region.category,
        "tag": region.tag,
    }
    if region.mask is not None:
        out["mask"] = {
            "width": region.mask.width,
            "height": region.mask.height,
            "rle": mask_to_rle(region.mask),
        }
    return out


def region_from_json(obj: dict) -> ObjectRegion:
    mask = None
    if obj.get("mask") is not None:
        m = obj["mask"]
        mask = mask_from_rle(m["width"], m["height"], m["rle"])
    return ObjectRegion(
        box=Box(*obj["box"]),
        mask=mask,
        score=obj.get("score", 1.0),
        category=obj.get("category"),
        tag=obj.get("tag"),
    )


def value_to_json(value: Value, images: Optional[ImageStore] = None) -> dict:
    """Serialize a Value; image payloads are deposited into ``images``."""
    k = value.kind
    if k is ValueKind.TEXT:
        return {"kind": "text", "value": value.data}
    if k is ValueKind.NUMBER:
        return {"kind": "number", "value": value.data}
    if k is ValueKind.BOOLEAN:
        return {"kind": "boolean", "value": value.data}
    if k is ValueKind.NULL:
        return {"kind": "null"}
    if k is ValueKind.BOX:
        return {"kind": "box", "box": list(value.as_box().as_tuple())}
    if k is ValueKind.TEXT_LIST:
        return {"kind": "text_list", "items": list(value.as_text_list())}
    if k is ValueKind.MASK:
        m = value.as_mask()
        return {"kind": "mask", "width": m.width, "height": m.height,
                "rle": mask_to_rle(m)}
    if k is ValueKind.IMAGE:
        img = value.as_image()
        if images is not None:
            images.put(img)
        return {"kind": "image", "id": img.content_hash,
                "width": img.width, "height": img.height}
    if k is ValueKind.OBJECT_LIST:
        return {"kind": "object_list",
                "regions": [region_to_json(r) for r in value.as_object_list()]}
    raise AssertionError(k)


def value_from_json(obj: dict, images: Optional[ImageStore] = None) -> Value:
    kind = obj["kind"]
    if kind == "text":
        return Value.text(obj["value"])
    if kind == "number":
        return Value.number(obj["value"])
    if kind == "boolean":
        return Value.boolean(obj["value"])
    if kind == "null":
        return Value.null()
    if kind == "box":
        return Value.box(Box(*obj["box"]))
    if kind == "text_list":
        return Value.text_list(obj["items"])
    if kind == "mask":
        return Value.mask(mask_from_rle(obj["width"], obj["height"], obj["rle"]))
    if kind == "image":
        if images is None:
            raise ValueError_("deserializing an image value needs an ImageStore")
        return Value.image(images.get(obj["id"]))
    if kind == "object_list":
        return Value.object_list([region_from_json(r) for r in obj["regions"]])
    raise ValueError_(f"unknown value kind {kind!r}")

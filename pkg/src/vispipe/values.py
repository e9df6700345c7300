"""Runtime value model shared by every module.

A program manipulates exactly one family of values (:class:`Value`): text,
numbers, booleans, RGBA images, boxes, binary masks, object-region lists, text
lists, and null.  Values are immutable after construction and safe to share
across threads; raster payloads are numpy arrays with the writeable flag
cleared.

Conventions (engine-wide):
- image origin is the top-left corner, y grows downward;
- numbers are 64-bit floats, rendered without a decimal point when integral;
- masks are binary; soft masks must be thresholded before they get here;
- variable names are case-sensitive and match ``[A-Z][A-Z0-9_]*``.
"""

from __future__ import annotations

import hashlib
import io
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator, Optional

import numpy as np
from PIL import Image as PILImage

from .errors import (
    DuplicateBinding,
    InvalidIdentifier,
    TypeMismatch,
    UnboundVariable,
    ValueError_,
)

VAR_NAME_RE = re.compile(r"[A-Z][A-Z0-9_]*\Z")


def is_var_name(name: str) -> bool:
    return bool(VAR_NAME_RE.match(name))


class Image:
    """Immutable RGBA raster, 8 bits per channel, row-major.

    ``pixels`` is an (H, W, 4) uint8 array with the writeable flag cleared;
    mutating module implementations must copy first.
    """

    __slots__ = ("_pixels", "_hash")

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 4:
            raise ValueError_(f"image raster must be HxWx4, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            raise ValueError_(f"image raster must be uint8, got {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError_("image dimensions must be >= 1")
        arr = arr.copy()
        arr.flags.writeable = False
        self._pixels = arr
        self._hash: Optional[str] = None

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    @property
    def content_hash(self) -> str:
        """Content address: sha256 over dimensions and raw RGBA bytes."""
        if self._hash is None:
            h = hashlib.sha256()
            h.update(f"{self.width}x{self.height}:".encode())
            h.update(self._pixels.tobytes())
            self._hash = "sha256:" + h.hexdigest()
        return self._hash

    @classmethod
    def blank(cls, width: int, height: int,
              color: tuple[int, int, int, int] = (255, 255, 255, 255)) -> "Image":
        arr = np.empty((height, width, 4), dtype=np.uint8)
        arr[:, :] = color
        return cls(arr)

    @classmethod
    def from_png(cls, data: bytes) -> "Image":
        with PILImage.open(io.BytesIO(data)) as im:
            return cls(np.asarray(im.convert("RGBA")))

    def to_png(self) -> bytes:
        buf = io.BytesIO()
        PILImage.fromarray(self._pixels, "RGBA").save(buf, format="PNG")
        return buf.getvalue()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return (self._pixels.shape == other._pixels.shape
                and np.array_equal(self._pixels, other._pixels))

    def __hash__(self) -> int:
        return hash(self.content_hash)

    def __repr__(self) -> str:
        return f"Image({self.width}x{self.height}, {self.content_hash[:15]}…)"


class Mask:
    """Immutable binary raster aligned to an image (same width/height)."""

    __slots__ = ("_bits",)

    def __init__(self, bits: np.ndarray):
        arr = np.asarray(bits)
        if arr.ndim != 2:
            raise ValueError_(f"mask must be 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError_("mask dimensions must be >= 1")
        arr = arr.astype(bool).copy()
        arr.flags.writeable = False
        self._bits = arr

    @property
    def bits(self) -> np.ndarray:
        return self._bits

    @property
    def width(self) -> int:
        return self._bits.shape[1]

    @property
    def height(self) -> int:
        return self._bits.shape[0]

    def count(self) -> int:
        return int(self._bits.sum())

    def extent(self) -> Optional["Box"]:
        """Tight bounding box of the set bits, or None for an empty mask."""
        ys, xs = np.nonzero(self._bits)
        if ys.size == 0:
            return None
        return Box(float(xs.min()), float(ys.min()),
                   float(xs.max()) + 1.0, float(ys.max()) + 1.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return (self._bits.shape == other._bits.shape
                and np.array_equal(self._bits, other._bits))

    def __hash__(self) -> int:
        return hash((self._bits.shape, self._bits.tobytes()))

    def __repr__(self) -> str:
        return f"Mask({self.width}x{self.height}, {self.count()} set)"


@dataclass(frozen=True)
class Box:
    """Axis-aligned box in pixel coordinates, x1 <= x2 and y1 <= y2."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise ValueError_(f"degenerate box: {self.as_tuple()}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def area(self) -> float:
        return self.width * self.height

    def clamp(self, width: int, height: int) -> "Box":
        """Clamp coordinates to the bounds of a width x height image."""
        return Box(
            min(max(self.x1, 0.0), float(width)),
            min(max(self.y1, 0.0), float(height)),
            min(max(self.x2, 0.0), float(width)),
            min(max(self.y2, 0.0), float(height)),
        )

    def int_bounds(self) -> tuple[int, int, int, int]:
        """Rounded integer (x1, y1, x2, y2) for raster addressing."""
        return (int(round(self.x1)), int(round(self.y1)),
                int(round(self.x2)), int(round(self.y2)))

    def intersection_area(self, other: "Box") -> float:
        w = min(self.x2, other.x2) - max(self.x1, other.x1)
        h = min(self.y2, other.y2) - max(self.y1, other.y1)
        return w * h if w > 0 and h > 0 else 0.0

    def iou(self, other: "Box") -> float:
        """Intersection over union; 0 when the union has no area."""
        inter = self.intersection_area(other)
        union = self.area() + other.area() - inter
        return inter / union if union > 0 else 0.0


@dataclass(frozen=True)
class ObjectRegion:
    """One detected/segmented region: box, optional mask, score, labels.

    ``category`` is the producer's class label (a segmenter's class name, a
    localizer's query); ``tag`` is a name assigned later, e.g. by Classify.
    If a mask is present its set-bit extent must lie within ``box`` (1 px
    tolerance).
    """

    box: Box
    mask: Optional[Mask] = None
    score: float = 1.0
    category: Optional[str] = None
    tag: Optional[str] = None

    def __post_init__(self):
        if not (0.0 <= self.score <= 1.0):
            raise ValueError_(f"score must be in [0,1], got {self.score}")
        if self.mask is not None:
            ext = self.mask.extent()
            if ext is not None:
                tol = 1.0
                if (ext.x1 < self.box.x1 - tol or ext.y1 < self.box.y1 - tol
                        or ext.x2 > self.box.x2 + tol or ext.y2 > self.box.y2 + tol):
                    raise ValueError_(
                        f"mask extent {ext.as_tuple()} exceeds box {self.box.as_tuple()}")

    def with_tag(self, tag: Optional[str]) -> "ObjectRegion":
        return ObjectRegion(self.box, self.mask, self.score, self.category, tag)

    def label(self) -> Optional[str]:
        """Display label: the assigned tag, else the producer category."""
        return self.tag if self.tag is not None else self.category


class ValueKind(str, Enum):
    TEXT = "text"
    NUMBER = "number"
    BOOLEAN = "boolean"
    IMAGE = "image"
    BOX = "box"
    MASK = "mask"
    OBJECT_LIST = "object_list"
    TEXT_LIST = "text_list"
    NULL = "null"


_PAYLOAD_TYPES = {
    ValueKind.TEXT: str,
    ValueKind.NUMBER: float,
    ValueKind.BOOLEAN: bool,
    ValueKind.IMAGE: Image,
    ValueKind.BOX: Box,
    ValueKind.MASK: Mask,
    ValueKind.OBJECT_LIST: tuple,
    ValueKind.TEXT_LIST: tuple,
    ValueKind.NULL: type(None),
}


@dataclass(frozen=True)
class Value:
    """Tagged union of every runtime data kind; the discriminant is ``kind``."""

    kind: ValueKind
    data: object = None

    def __post_init__(self):
        expected = _PAYLOAD_TYPES[self.kind]
        if self.kind is ValueKind.BOOLEAN:
            if type(self.data) is not bool:
                raise ValueError_(f"boolean value needs bool payload, got {type(self.data)}")
        elif not isinstance(self.data, expected):
            raise ValueError_(
                f"{self.kind.value} value needs {expected.__name__} payload, "
                f"got {type(self.data).__name__}")
        if self.kind is ValueKind.OBJECT_LIST:
            for item in self.data:  # type: ignore[union-attr]
                if not isinstance(item, ObjectRegion):
                    raise ValueError_("object_list items must be ObjectRegion")
        if self.kind is ValueKind.TEXT_LIST:
            for item in self.data:  # type: ignore[union-attr]
                if not isinstance(item, str):
                    raise ValueError_("text_list items must be str")

    # -- constructors -------------------------------------------------------

    @staticmethod
    def text(s: str) -> "Value":
        return Value(ValueKind.TEXT, s)

    @staticmethod
    def number(x: float) -> "Value":
        return Value(ValueKind.NUMBER, float(x))

    @staticmethod
    def boolean(b: bool) -> "Value":
        return Value(ValueKind.BOOLEAN, bool(b))

    @staticmethod
    def image(img: Image) -> "Value":
        return Value(ValueKind.IMAGE, img)

    @staticmethod
    def box(b: Box) -> "Value":
        return Value(ValueKind.BOX, b)

    @staticmethod
    def mask(m: Mask) -> "Value":
        return Value(ValueKind.MASK, m)

    @staticmethod
    def object_list(regions) -> "Value":
        return Value(ValueKind.OBJECT_LIST, tuple(regions))

    @staticmethod
    def text_list(items) -> "Value":
        return Value(ValueKind.TEXT_LIST, tuple(items))

    @staticmethod
    def null() -> "Value":
        return Value(ValueKind.NULL, None)

    # -- accessors (raise TypeMismatch on wrong kind) ------------------------

    def _expect(self, kind: ValueKind, where: str = "value"):
        if self.kind is not kind:
            raise TypeMismatch(where, kind.value, self.kind.value)

    def as_text(self, where: str = "value") -> str:
        self._expect(ValueKind.TEXT, where)
        return self.data  # type: ignore[return-value]

    def as_number(self, where: str = "value") -> float:
        self._expect(ValueKind.NUMBER, where)
        return self.data  # type: ignore[return-value]

    def as_boolean(self, where: str = "value") -> bool:
        self._expect(ValueKind.BOOLEAN, where)
        return self.data  # type: ignore[return-value]

    def as_image(self, where: str = "value") -> Image:
        self._expect(ValueKind.IMAGE, where)
        return self.data  # type: ignore[return-value]

    def as_box(self, where: str = "value") -> Box:
        self._expect(ValueKind.BOX, where)
        return self.data  # type: ignore[return-value]

    def as_mask(self, where: str = "value") -> Mask:
        self._expect(ValueKind.MASK, where)
        return self.data  # type: ignore[return-value]

    def as_object_list(self, where: str = "value") -> tuple[ObjectRegion, ...]:
        self._expect(ValueKind.OBJECT_LIST, where)
        return self.data  # type: ignore[return-value]

    def as_text_list(self, where: str = "value") -> tuple[str, ...]:
        self._expect(ValueKind.TEXT_LIST, where)
        return self.data  # type: ignore[return-value]

    @property
    def is_null(self) -> bool:
        return self.kind is ValueKind.NULL

    def render_short(self) -> str:
        """One-line human rendering used by traces and rationales."""
        if self.kind is ValueKind.TEXT:
            return repr(self.data)
        if self.kind is ValueKind.NUMBER:
            return format_number(self.data)  # type: ignore[arg-type]
        if self.kind is ValueKind.BOOLEAN:
            return "True" if self.data else "False"
        if self.kind is ValueKind.NULL:
            return "None"
        if self.kind is ValueKind.BOX:
            b = self.data
            return f"box[{b.x1:g},{b.y1:g},{b.x2:g},{b.y2:g}]"  # type: ignore[union-attr]
        if self.kind is ValueKind.IMAGE:
            return f"image {self.data.width}x{self.data.height}"  # type: ignore[union-attr]
        if self.kind is ValueKind.MASK:
            return f"mask {self.data.width}x{self.data.height}"  # type: ignore[union-attr]
        if self.kind is ValueKind.OBJECT_LIST:
            return f"{len(self.data)} object(s)"  # type: ignore[arg-type]
        if self.kind is ValueKind.TEXT_LIST:
            return "[" + ", ".join(repr(t) for t in self.data) + "]"  # type: ignore[union-attr]
        raise AssertionError(self.kind)


def format_number(x: float) -> str:
    """Canonical text for a number: no decimal point when integral."""
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def norm_text(s: str) -> str:
    """Answer/tag normalization used for comparisons: lowercase, trimmed."""
    return s.strip().lower()


class ProgramState:
    """Append-only map from variable name to Value for one execution.

    Binding an existing name raises; lookups are case-sensitive.  Confined to
    a single execution, so no internal locking.
    """

    def __init__(self, inputs: Optional[dict[str, Value]] = None):
        self._bindings: dict[str, Value] = {}
        if inputs:
            for name, value in inputs.items():
                self.bind(name, value)

    def bind(self, name: str, value: Value) -> "ProgramState":
        if not is_var_name(name):
            raise InvalidIdentifier(
                f"variable name {name!r} must match [A-Z][A-Z0-9_]*")
        if name in self._bindings:
            raise DuplicateBinding(f"variable {name!r} is already bound")
        if not isinstance(value, Value):
            raise ValueError_(f"can only bind Value instances, got {type(value)}")
        self._bindings[name] = value
        return self

    def lookup(self, name: str, step_index: int | None = None) -> Value:
        try:
            return self._bindings[name]
        except KeyError:
            raise UnboundVariable(name, step_index) from None

    def __contains__(self, name: str) -> bool:
        return name in self._bindings

    def __len__(self) -> int:
        return len(self._bindings)

    def names(self) -> Iterator[str]:
        return iter(self._bindings)

    def snapshot(self) -> dict[str, Value]:
        return dict(self._bindings)

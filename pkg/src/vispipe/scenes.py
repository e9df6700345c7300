"""Synthetic scenes of colored shapes.

A scene is a JSON-serializable description (canvas size, background color,
and a list of shapes with boxes and optional labels).  The renderer turns it
into an RGBA image and exact per-shape masks, which makes a scene both test
input and test oracle: the procedural fake backend answers localization,
segmentation, and simple questions straight from the description.

Scene JSON::

    {"width": 200, "height": 120, "background": "white",
     "objects": [{"shape": "circle", "color": "blue", "box": [10,10,50,50],
                  "label": "ball", "category": "toy"}]}

Shapes: ``circle``, ``square``, ``triangle`` (apex up), and ``face`` (a disc
with eyes and mouth, so face detection has something produce).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ValueError_
from .values import Box, Image, Mask

COLORS: dict[str, tuple[int, int, int]] = {
    "red": (220, 50, 47),
    "green": (70, 160, 70),
    "blue": (50, 90, 220),
    "yellow": (240, 210, 60),
    "orange": (240, 140, 40),
    "purple": (140, 70, 200),
    "cyan": (60, 200, 220),
    "magenta": (220, 70, 190),
    "brown": (150, 100, 60),
    "pink": (250, 170, 200),
    "gray": (128, 128, 128),
    "black": (20, 20, 20),
    "white": (245, 245, 245),
}

SHAPES = ("circle", "square", "triangle", "face")


@dataclass(frozen=True)
class SceneObject:
    shape: str
    color: str
    box: Box
    label: Optional[str] = None       # a name ("amy", "arvind krishna", ...)
    category: Optional[str] = None    # segmentation class ("table-merged", ...)

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError_(f"unknown shape {self.shape!r}")
        if self.color not in COLORS:
            raise ValueError_(f"unknown color {self.color!r}")

    def description(self) -> str:
        return f"{self.color} {self.shape}"


@dataclass(frozen=True)
class Scene:
    width: int
    height: int
    objects: tuple[SceneObject, ...] = ()
    background: str = "white"

    def to_json(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "background": self.background,
            "objects": [
                {
                    "shape": o.shape,
                    "color": o.color,
                    "box": list(o.box.as_tuple()),
                    "label": o.label,
                    "category": o.category,
                }
                for o in self.objects
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Scene":
        return cls(
            width=int(obj["width"]),
            height=int(obj["height"]),
            background=obj.get("background", "white"),
            objects=tuple(
                SceneObject(
                    shape=o["shape"],
                    color=o["color"],
                    box=Box(*o["box"]),
                    label=o.get("label"),
                    category=o.get("category"),
                )
                for o in obj.get("objects", [])
            ),
        )

    @classmethod
    def load(cls, path: str) -> "Scene":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def _shape_mask(obj: SceneObject, width: int, height: int) -> np.ndarray:
    """Exact boolean raster of the shape, evaluated at pixel centers."""
    x1, y1, x2, y2 = obj.box.as_tuple()
    ys, xs = np.mgrid[0:height, 0:width]
    px = xs + 0.5
    py = ys + 0.5
    inside_box = (px >= x1) & (px < x2) & (py >= y1) & (py < y2)
    if obj.shape == "square":
        return inside_box
    if obj.shape in ("circle", "face"):
        cx, cy = (x1 + x2) / 2.0, (y1 + y2) / 2.0
        rx, ry = (x2 - x1) / 2.0, (y2 - y1) / 2.0
        if rx <= 0 or ry <= 0:
            return np.zeros((height, width), dtype=bool)
        return ((px - cx) / rx) ** 2 + ((py - cy) / ry) ** 2 <= 1.0
    # triangle, apex at top center
    ax, ay = (x1 + x2) / 2.0, y1
    bx, by = x1, y2
    cx2, cy2 = x2, y2

    def half_plane(x0, y0, x1_, y1_):
        return (x1_ - x0) * (py - y0) - (y1_ - y0) * (px - x0)

    d1 = half_plane(ax, ay, bx, by)
    d2 = half_plane(bx, by, cx2, cy2)
    d3 = half_plane(cx2, cy2, ax, ay)
    neg = (d1 < 0) & (d2 < 0) & (d3 < 0)
    pos = (d1 > 0) & (d2 > 0) & (d3 > 0)
    return (neg | pos) & inside_box


def render_scene(scene: Scene) -> Image:
    if scene.background not in COLORS:
        raise ValueError_(f"unknown background color {scene.background!r}")
    arr = np.empty((scene.height, scene.width, 4), dtype=np.uint8)
    arr[:, :, :3] = COLORS[scene.background]
    arr[:, :, 3] = 255
    for obj in scene.objects:
        mask = _shape_mask(obj, scene.width, scene.height)
        arr[mask, :3] = COLORS[obj.color]
        if obj.shape == "face":
            _draw_face_features(arr, obj)
    return Image(arr)


def _draw_face_features(arr: np.ndarray, obj: SceneObject) -> None:
    """Eyes and a mouth so faces are visually distinct from plain circles."""
    x1, y1, x2, y2 = obj.box.as_tuple()
    w, h = x2 - x1, y2 - y1
    height, width = arr.shape[:2]
    ys, xs = np.mgrid[0:height, 0:width]
    px, py = xs + 0.5, ys + 0.5
    eye_r = max(w, 2.0) * 0.07
    for ex in (x1 + 0.35 * w, x1 + 0.65 * w):
        ey = y1 + 0.38 * h
        eye = (px - ex) ** 2 + (py - ey) ** 2 <= eye_r ** 2
        arr[eye, :3] = COLORS["black"]
    mouth = ((px >= x1 + 0.30 * w) & (px < x1 + 0.70 * w)
             & (py >= y1 + 0.66 * h) & (py < y1 + 0.74 * h))
    arr[mouth, :3] = COLORS["black"]


def object_mask(scene: Scene, index: int) -> Mask:
    obj = scene.objects[index]
    return Mask(_shape_mask(obj, scene.width, scene.height))

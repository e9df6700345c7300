"""Model backends: the wire protocol and deterministic fakes.

Every neural capability sits behind one request/response protocol with seven
ops: ``locate``, ``detect_faces``, ``segment``, ``vqa``, ``score_regions``,
``inpaint``, and ``knowledge_list``.  The engine never imports a model; it
talks to a :class:`Backend`.  Shipped implementations:

- :class:`FixtureBackend` — replays canned responses keyed by canonical
  request key; any unmatched request raises FixtureMiss.
- :class:`ProceduralBackend` — answers over registered synthetic scenes by
  shape/color-name matching; exact, deterministic, and useful as an oracle.
- :class:`RecordingBackend` — wraps another backend and captures its traffic
  into a FixtureSet (how fixture files get authored).
- :class:`RemoteBackend` — JSON-over-HTTP client; images travel by content
  hash and are uploaded separately.  `create_backend_app` is the matching
  server for any in-process backend.

Wire schema (one POST /invoke body per op)::

    {"op": "locate", "image_id": ID, "query": TEXT}
    {"op": "detect_faces", "image_id": ID}
    {"op": "segment", "image_id": ID}
    {"op": "vqa", "image_id": ID, "question": TEXT}
    {"op": "score_regions", "image_id": ID, "boxes": [[x1,y1,x2,y2]..], "texts": [TEXT..]}
    {"op": "inpaint", "image_id": ID, "mask": {"width","height","rle"}, "prompt": TEXT}
    {"op": "knowledge_list", "query": TEXT, "max": INT}

Responses: ``{"regions": [...]}", ``{"answer": TEXT}``, ``{"scores": [[..]]}``
(regions x texts, each in [0,1]), ``{"image": {"png_base64": ...}}``, and
``{"items": [TEXT..]}`` (a fixture may instead carry ``{"text": "a, b"}``,
which is split on commas).  PNG bytes are uploaded via POST /images.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import BackendError, EmptyList, FixtureMiss, NoCandidates, ValueError_
from .imaging import fill_masked
from .scenes import COLORS, Scene, object_mask, render_scene
from .serialization import (
    ImageStore,
    canonical_dumps,
    mask_from_rle,
    mask_to_rle,
    region_from_json,
    region_to_json,
)
from .values import Box, Image, Mask, ObjectRegion, norm_text

BACKEND_OPS = ("locate", "detect_faces", "segment", "vqa", "score_regions",
               "inpaint", "knowledge_list")


@dataclass(frozen=True)
class BackendRequest:
    """One protocol request; ``image`` is carried in-process, ``image_id`` on
    the wire."""

    op: str
    image: Optional[Image] = None
    query: Optional[str] = None
    question: Optional[str] = None
    boxes: tuple[Box, ...] = ()
    texts: tuple[str, ...] = ()
    mask: Optional[Mask] = None
    prompt: Optional[str] = None
    max_items: Optional[int] = None

    def __post_init__(self):
        if self.op not in BACKEND_OPS:
            raise ValueError_(f"unknown backend op {self.op!r}")

    def key(self) -> str:
        """Canonical request key used by fixture files."""
        parts = [self.op]
        if self.image is not None:
            parts.append(f"image={self.image.content_hash}")
        if self.query is not None:
            parts.append(f"query={self.query}")
        if self.question is not None:
            parts.append(f"question={self.question}")
        if self.boxes:
            parts.append("boxes=" + canonical_dumps(
                [list(b.as_tuple()) for b in self.boxes]))
        if self.texts:
            parts.append("texts=" + canonical_dumps(list(self.texts)))
        if self.mask is not None:
            digest = hashlib.sha256(
                f"{self.mask.width}x{self.mask.height}:".encode()
                + self.mask.bits.tobytes()).hexdigest()
            parts.append(f"mask=sha256:{digest}")
        if self.prompt is not None:
            parts.append(f"prompt={self.prompt}")
        if self.max_items is not None:
            parts.append(f"max={self.max_items}")
        return "|".join(parts)

    def to_json(self, images: Optional[ImageStore] = None) -> dict:
        out: dict = {"op": self.op}
        if self.image is not None:
            if images is not None:
                images.put(self.image)
            out["image_id"] = self.image.content_hash
        if self.query is not None:
            out["query"] = self.query
        if self.question is not None:
            out["question"] = self.question
        if self.boxes:
            out["boxes"] = [list(b.as_tuple()) for b in self.boxes]
        if self.texts:
            out["texts"] = list(self.texts)
        if self.mask is not None:
            out["mask"] = {"width": self.mask.width, "height": self.mask.height,
                           "rle": mask_to_rle(self.mask)}
        if self.prompt is not None:
            out["prompt"] = self.prompt
        if self.max_items is not None:
            out["max"] = self.max_items
        return out

    @classmethod
    def from_json(cls, obj: dict, images: Optional[ImageStore] = None) -> "BackendRequest":
        image = None
        if obj.get("image_id"):
            if images is None:
                raise BackendError("request references an image but no store given")
            try:
                image = images.get(obj["image_id"])
            except KeyError:
                raise BackendError(
                    f"image {obj['image_id']!r} has not been uploaded") from None
        mask = None
        if obj.get("mask"):
            m = obj["mask"]
            mask = mask_from_rle(m["width"], m["height"], m["rle"])
        return cls(
            op=obj["op"],
            image=image,
            query=obj.get("query"),
            question=obj.get("question"),
            boxes=tuple(Box(*b) for b in obj.get("boxes", [])),
            texts=tuple(obj.get("texts", [])),
            mask=mask,
            prompt=obj.get("prompt"),
            max_items=obj.get("max"),
        )


# ---------------------------------------------------------------------------
# Typed <-> wire response conversion


def response_to_json(op: str, result) -> dict:
    if op in ("locate", "detect_faces", "segment"):
        return {"regions": [region_to_json(r) for r in result]}
    if op == "vqa":
        return {"answer": result}
    if op == "score_regions":
        return {"scores": [list(row) for row in result]}
    if op == "inpaint":
        return {"image": {"png_base64": base64.b64encode(result.to_png()).decode()}}
    if op == "knowledge_list":
        return {"items": list(result)}
    raise BackendError(f"unknown op {op!r}")


def response_from_json(op: str, obj: dict, n_boxes: int = 0, n_texts: int = 0):
    try:
        if op in ("locate", "detect_faces", "segment"):
            return [region_from_json(r) for r in obj["regions"]]
        if op == "vqa":
            return str(obj["answer"])
        if op == "score_regions":
            scores = [[float(x) for x in row] for row in obj["scores"]]
            if len(scores) != n_boxes or any(len(row) != n_texts for row in scores):
                raise BackendError(
                    f"score matrix must be {n_boxes}x{n_texts}, got "
                    f"{len(scores)}x{[len(r) for r in scores]}")
            for row in scores:
                for x in row:
                    if not (0.0 <= x <= 1.0):
                        raise BackendError(f"score {x} outside [0,1]")
            return scores
        if op == "inpaint":
            return Image.from_png(base64.b64decode(obj["image"]["png_base64"]))
        if op == "knowledge_list":
            if "items" in obj:
                return [str(x) for x in obj["items"]]
            return [p for p in str(obj.get("text", "")).split(",")]
    except (KeyError, TypeError, ValueError) as e:
        raise BackendError(f"malformed {op} response: {e}") from e
    raise BackendError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# Backend interface


class Backend:
    """Typed interface every backend implements; unsupported ops raise."""

    def locate(self, image: Image, query: str) -> list[ObjectRegion]:
        raise BackendError("this backend does not support 'locate'")

    def detect_faces(self, image: Image) -> list[ObjectRegion]:
        raise BackendError("this backend does not support 'detect_faces'")

    def segment(self, image: Image) -> list[ObjectRegion]:
        raise BackendError("this backend does not support 'segment'")

    def vqa(self, image: Image, question: str) -> str:
        raise BackendError("this backend does not support 'vqa'")

    def score_regions(self, image: Image, boxes: Sequence[Box],
                      texts: Sequence[str]) -> list[list[float]]:
        raise BackendError("this backend does not support 'score_regions'")

    def inpaint(self, image: Image, mask: Mask, prompt: str) -> Image:
        raise BackendError("this backend does not support 'inpaint'")

    def knowledge_list(self, query: str, max_items: int) -> list[str]:
        raise BackendError("this backend does not support 'knowledge_list'")

    def handle(self, request: BackendRequest):
        """Dispatch one typed request (used by the HTTP server and recorder)."""
        op = request.op
        if op == "locate":
            return self.locate(request.image, request.query)
        if op == "detect_faces":
            return self.detect_faces(request.image)
        if op == "segment":
            return self.segment(request.image)
        if op == "vqa":
            return self.vqa(request.image, request.question)
        if op == "score_regions":
            return self.score_regions(request.image, list(request.boxes),
                                      list(request.texts))
        if op == "inpaint":
            return self.inpaint(request.image, request.mask, request.prompt)
        if op == "knowledge_list":
            return self.knowledge_list(request.query, request.max_items)
        raise BackendError(f"unknown op {op!r}")


# ---------------------------------------------------------------------------
# Fixture backend


class FixtureSet:
    """Map of canonical request key -> wire response, loadable from JSON."""

    def __init__(self, fixtures: Optional[dict[str, dict]] = None):
        self.fixtures: dict[str, dict] = dict(fixtures or {})

    @classmethod
    def load(cls, path: str) -> "FixtureSet":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return cls(data.get("fixtures", {}))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"fixtures": self.fixtures}, f, indent=2, sort_keys=True)

    def add(self, request: BackendRequest, response: dict) -> None:
        self.fixtures[request.key()] = response

    def get(self, request: BackendRequest) -> dict:
        key = request.key()
        try:
            return self.fixtures[key]
        except KeyError:
            raise FixtureMiss(key) from None


class RequestDispatchBackend(Backend):
    """Base for backends that route every op through handle(request)."""

    def handle(self, request: BackendRequest):
        raise NotImplementedError

    def locate(self, image, query):
        return self.handle(BackendRequest("locate", image=image, query=query))

    def detect_faces(self, image):
        return self.handle(BackendRequest("detect_faces", image=image))

    def segment(self, image):
        return self.handle(BackendRequest("segment", image=image))

    def vqa(self, image, question):
        return self.handle(BackendRequest("vqa", image=image, question=question))

    def score_regions(self, image, boxes, texts):
        return self.handle(BackendRequest("score_regions", image=image,
                                          boxes=tuple(boxes), texts=tuple(texts)))

    def inpaint(self, image, mask, prompt):
        return self.handle(BackendRequest("inpaint", image=image, mask=mask,
                                          prompt=prompt))

    def knowledge_list(self, query, max_items):
        return self.handle(BackendRequest("knowledge_list", query=query,
                                          max_items=max_items))


class FixtureBackend(RequestDispatchBackend):
    """Deterministic replay backend: identical request, identical response."""

    def __init__(self, fixtures: FixtureSet):
        self.fixtures = fixtures

    def handle(self, request: BackendRequest):
        response = self.fixtures.get(request)
        return response_from_json(request.op, response,
                                  n_boxes=len(request.boxes),
                                  n_texts=len(request.texts))


class RecordingBackend(RequestDispatchBackend):
    """Pass-through wrapper capturing traffic into a FixtureSet."""

    def __init__(self, inner: Backend, fixtures: Optional[FixtureSet] = None):
        self.inner = inner
        self.fixtures = fixtures if fixtures is not None else FixtureSet()

    def handle(self, request: BackendRequest):
        result = self.inner.handle(request)
        self.fixtures.add(request, response_to_json(request.op, result))
        return result


# ---------------------------------------------------------------------------
# Procedural backend over synthetic scenes

_SHAPE_WORDS = {
    "circle": "circle", "circles": "circle",
    "square": "square", "squares": "square",
    "triangle": "triangle", "triangles": "triangle",
    "face": "face", "faces": "face",
    "person": "face", "people": "face",
}

_ARTICLES = ("a ", "an ", "the ", "any ")


def _strip_articles(text: str) -> str:
    changed = True
    while changed:
        changed = False
        for art in _ARTICLES:
            if text.startswith(art):
                text = text[len(art):]
                changed = True
    return text


def _query_terms(query: str) -> tuple[set[str], set[str]]:
    tokens = re.findall(r"[a-z]+", norm_text(query))
    colors = {t for t in tokens if t in COLORS}
    shapes = {_SHAPE_WORDS[t] for t in tokens if t in _SHAPE_WORDS}
    return colors, shapes


def _matches(obj, query: str) -> bool:
    q = norm_text(query)
    if obj.label and norm_text(obj.label) in q:
        return True
    if obj.category and norm_text(obj.category) == q:
        return True
    colors, shapes = _query_terms(query)
    if colors and shapes:
        return obj.color in colors and obj.shape in shapes
    if shapes:
        return obj.shape in shapes
    if colors:
        return obj.color in colors
    return False


def _hash_score(*parts: str, ceiling: float = 0.3) -> float:
    digest = hashlib.sha256("|".join(parts).encode()).digest()
    return int.from_bytes(digest[:4], "big") / 2**32 * ceiling


@dataclass(frozen=True)
class _SceneView:
    """A registered scene seen through a window (full image or exact crop)."""

    scene: Scene
    dx: int
    dy: int
    width: int
    height: int

    def visible(self) -> list[tuple[int, Box]]:
        """(scene object index, box in view coordinates) for objects whose box
        overlaps the window."""
        out = []
        window = Box(float(self.dx), float(self.dy),
                     float(self.dx + self.width), float(self.dy + self.height))
        for i, obj in enumerate(self.scene.objects):
            clamped = obj.box.clamp(self.scene.width, self.scene.height)
            if clamped.intersection_area(window) <= 0:
                continue
            out.append((i, Box(
                min(max(clamped.x1 - self.dx, 0.0), float(self.width)),
                min(max(clamped.y1 - self.dy, 0.0), float(self.height)),
                min(max(clamped.x2 - self.dx, 0.0), float(self.width)),
                min(max(clamped.y2 - self.dy, 0.0), float(self.height)),
            )))
        return out


def _find_subraster(haystack, needle) -> Optional[tuple[int, int]]:
    """Offset (x, y) where ``needle`` equals a window of ``haystack``; scans
    top-to-bottom, left-to-right, first match wins."""
    hh, hw = haystack.shape[:2]
    nh, nw = needle.shape[:2]
    if nh > hh or nw > hw:
        return None
    first_row = needle[0]
    for y in range(hh - nh + 1):
        for x in range(hw - nw + 1):
            if not np.array_equal(haystack[y, x:x + nw], first_row):
                continue
            if np.array_equal(haystack[y:y + nh, x:x + nw], needle):
                return (x, y)
    return None


class ProceduralBackend(Backend):
    """Answers over registered scenes by matching color/shape/label words.

    Scores are exact for true matches and small hash-derived constants
    otherwise, so argmax selections are stable and predictable from the scene
    description alone.  Crops of a registered scene (exact sub-rasters, which
    is what the CROP modules produce) are recognized and answered in view
    coordinates.  ``knowledge`` maps normalized queries to item lists (stands
    in for a knowledge retriever).
    """

    def __init__(self, knowledge: Optional[dict[str, list[str]]] = None):
        self._scenes: dict[str, tuple[Scene, Image]] = {}
        self._views: dict[str, _SceneView] = {}
        self.knowledge = {norm_text(k): list(v) for k, v in (knowledge or {}).items()}

    def add_scene(self, scene: Scene) -> Image:
        image = render_scene(scene)
        self._scenes[image.content_hash] = (scene, image)
        self._views[image.content_hash] = _SceneView(
            scene, 0, 0, scene.width, scene.height)
        return image

    def _view_for(self, image: Image) -> _SceneView:
        view = self._views.get(image.content_hash)
        if view is not None:
            return view
        for scene, full in self._scenes.values():
            offset = _find_subraster(full.pixels, image.pixels)
            if offset is not None:
                view = _SceneView(scene, offset[0], offset[1],
                                  image.width, image.height)
                self._views[image.content_hash] = view
                return view
        raise BackendError(
            f"image {image.content_hash[:15]}… is neither a registered scene "
            "nor a crop of one")

    def _region(self, view: _SceneView, index: int, box: Box, with_mask: bool,
                category: Optional[str] = None) -> ObjectRegion:
        obj = view.scene.objects[index]
        mask = None
        if with_mask:
            full = object_mask(view.scene, index).bits
            window = full[view.dy:view.dy + view.height,
                          view.dx:view.dx + view.width]
            mask = Mask(window)
        return ObjectRegion(
            box=box,
            mask=mask,
            score=1.0,
            category=category if category is not None
            else (obj.category or obj.description()),
        )

    def locate(self, image, query):
        view = self._view_for(image)
        return [self._region(view, i, box, with_mask=False, category=query)
                for i, box in view.visible()
                if _matches(view.scene.objects[i], query)]

    def detect_faces(self, image):
        view = self._view_for(image)
        return [self._region(view, i, box, with_mask=False, category="face")
                for i, box in view.visible()
                if view.scene.objects[i].shape == "face"]

    def segment(self, image):
        view = self._view_for(image)
        return [self._region(view, i, box, with_mask=True)
                for i, box in view.visible()]

    def vqa(self, image, question):
        view = self._view_for(image)
        objects = [view.scene.objects[i] for i, _ in view.visible()]
        q = _strip_articles(norm_text(question).rstrip("?").strip())
        m = re.match(r"how many (.+)$", q)
        if m:
            desc = _strip_articles(m.group(1))
            return str(sum(1 for o in objects if _matches(o, desc)))
        m = re.match(r"(?:is|are) there (.+)$", q)
        if m:
            desc = _strip_articles(m.group(1))
            return "yes" if any(_matches(o, desc) for o in objects) else "no"
        m = re.match(r"what color is (.+)$", q)
        if m:
            desc = _strip_articles(m.group(1))
            for obj in objects:
                if _matches(obj, desc):
                    return obj.color
            return "unknown"
        raise BackendError(f"procedural vqa cannot answer {question!r}")

    def score_regions(self, image, boxes, texts):
        view = self._view_for(image)
        visible = view.visible()
        rows = []
        for box in boxes:
            best = None
            best_iou = 0.25  # below this the region has no scene identity
            for i, obj_box in visible:
                overlap = box.iou(obj_box)
                if overlap > best_iou:
                    best, best_iou = view.scene.objects[i], overlap
            rows.append([self._score(best, text, box) for text in texts])
        return rows

    @staticmethod
    def _score(obj, text: str, box: Box) -> float:
        anchor = f"{box.as_tuple()}"
        if obj is None:
            return _hash_score("noid", text, anchor)
        t = norm_text(text)
        if obj.label and t == norm_text(obj.label):
            return 1.0
        if obj.label and (t in norm_text(obj.label) or norm_text(obj.label) in t):
            return 0.95
        if obj.category and t == norm_text(obj.category):
            return 0.95
        colors, shapes = _query_terms(text)
        if colors and shapes:
            if obj.color in colors and obj.shape in shapes:
                return 0.9
        elif shapes and obj.shape in shapes:
            return 0.7
        elif colors and obj.color in colors:
            return 0.7
        return _hash_score(obj.description(), obj.label or "", text)

    def inpaint(self, image, mask, prompt):
        digest = hashlib.sha256(f"inpaint:{prompt}".encode()).digest()
        color = (digest[0], digest[1], digest[2])
        return fill_masked(image, mask, color)

    def knowledge_list(self, query, max_items):
        key = norm_text(query)
        if key not in self.knowledge:
            raise BackendError(f"no knowledge entry for query {query!r}")
        return list(self.knowledge[key])


# ---------------------------------------------------------------------------
# Remote backend (JSON over HTTP)


class RemoteBackend(RequestDispatchBackend):
    """Client for a backend served elsewhere; see the module docstring for the
    wire schema.  ``client`` is injectable for tests (any httpx-compatible
    object with post())."""

    def __init__(self, base_url: str, client=None, timeout: float = 30.0):
        import httpx

        self.base_url = base_url.rstrip("/")
        self.client = client or httpx.Client(timeout=timeout)
        self._uploaded: set[str] = set()

    def _ensure_image(self, image: Optional[Image]) -> None:
        if image is None or image.content_hash in self._uploaded:
            return
        resp = self.client.post(f"{self.base_url}/images",
                                content=image.to_png(),
                                headers={"content-type": "image/png"})
        if resp.status_code != 200:
            raise BackendError(f"image upload failed: {resp.status_code} {resp.text}")
        self._uploaded.add(image.content_hash)

    def handle(self, request: BackendRequest):
        self._ensure_image(request.image)
        resp = self.client.post(f"{self.base_url}/invoke",
                                json=request.to_json())
        if resp.status_code != 200:
            raise BackendError(
                f"backend returned {resp.status_code}: {resp.text}")
        return response_from_json(request.op, resp.json(),
                                  n_boxes=len(request.boxes),
                                  n_texts=len(request.texts))


# ---------------------------------------------------------------------------
# Region selection / classification / knowledge retrieval semantics
#
# Select and Classify share one backend op (score_regions).  Argmax ties
# always break toward the lowest index so outcomes are deterministic.


@dataclass(frozen=True)
class ListConfig:
    """Knowledge retrieval limits; 20 is the default cut-off."""

    default_max: int = 20

    def __post_init__(self):
        if self.default_max < 1:
            raise ValueError_("default_max must be >= 1")


def _argmax(values: Sequence[float]) -> int:
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def select_regions(image: Image, objs: Sequence[ObjectRegion], query: str,
                   category: Optional[str], backend: Backend) -> list[ObjectRegion]:
    """Pick the best region per comma-separated query phrase.

    With a category, only regions whose category equals it are candidates.
    Each phrase independently keeps its argmax-scoring region (a region may
    win several phrases) and carries the phrase as its tag.
    """
    if category is not None:
        candidates = [r for r in objs if r.category == category]
        if not candidates:
            raise NoCandidates(
                f"no region has category {category!r} "
                f"(present: {sorted({r.category for r in objs if r.category})})")
    else:
        candidates = list(objs)
        if not candidates:
            raise NoCandidates("no regions to select from")
    phrases = [p.strip() for p in query.split(",") if p.strip()]
    if not phrases:
        raise ValueError_(f"query {query!r} contains no phrases")
    scores = backend.score_regions(image, [r.box for r in candidates], phrases)
    picked = []
    for j, phrase in enumerate(phrases):
        winner = _argmax([scores[i][j] for i in range(len(candidates))])
        picked.append(candidates[winner].with_tag(phrase))
    return picked


def classify_regions(image: Image, objs: Sequence[ObjectRegion],
                     categories: Sequence[str], backend: Backend) -> list[ObjectRegion]:
    """Assign categories to regions as tags, at most one region per category.

    One category: only the argmax-scoring region is tagged.  Several: every
    region provisionally gets its best category, then each assigned category
    keeps only its highest-scoring region; the rest end up untagged.  Empty
    region lists pass through (upstream detectors may find nothing).
    """
    if not objs:
        return []
    if not categories:
        raise ValueError_("classify needs at least one category")
    scores = backend.score_regions(image, [r.box for r in objs], list(categories))
    if len(categories) == 1:
        winner = _argmax([scores[i][0] for i in range(len(objs))])
        return [r.with_tag(categories[0]) if i == winner else r.with_tag(None)
                for i, r in enumerate(objs)]
    provisional: list[tuple[int, float]] = []
    for i in range(len(objs)):
        j = _argmax(scores[i])
        provisional.append((j, scores[i][j]))
    keep: dict[int, int] = {}  # category index -> winning region index
    for i, (j, s) in enumerate(provisional):
        if j not in keep or s > provisional[keep[j]][1]:
            keep[j] = i
    winners = set(keep.values())
    return [r.with_tag(categories[provisional[i][0]]) if i in winners
            else r.with_tag(None)
            for i, r in enumerate(objs)]


def retrieve_list(query: str, max_items: Optional[int], config: ListConfig,
                  backend: Backend) -> list[str]:
    """Knowledge lookup: truncate to the effective max, trim, drop empties."""
    if not query.strip():
        raise ValueError_("knowledge query must be non-empty")
    effective = config.default_max if max_items is None else int(max_items)
    if effective < 1:
        raise ValueError_(f"max must be >= 1, got {max_items}")
    raw = backend.knowledge_list(query, effective)
    items = [s.strip() for s in raw[:effective]]
    items = [s for s in items if s]
    if not items:
        raise EmptyList(f"knowledge lookup for {query!r} produced no items")
    return items


def create_backend_app(backend: Backend, images: Optional[ImageStore] = None):
    """FastAPI app exposing any in-process backend over the wire protocol."""
    from fastapi import FastAPI, Request, Response

    store = images if images is not None else ImageStore()
    app = FastAPI(title="vispipe model backend")

    @app.get("/health")
    def health():
        return {"ok": True}

    @app.post("/images")
    async def upload(request: Request):
        data = await request.body()
        try:
            image = Image.from_png(data)
        except Exception:
            return Response(status_code=415, content="expected PNG bytes")
        return {"image_id": store.put(image)}

    @app.post("/invoke")
    async def invoke(request: Request):
        body = await request.json()
        try:
            req = BackendRequest.from_json(body, images=store)
            result = backend.handle(req)
        except FixtureMiss as e:
            return Response(status_code=404, content=str(e))
        except BackendError as e:
            return Response(status_code=400, content=str(e))
        return response_to_json(req.op, result)

    return app

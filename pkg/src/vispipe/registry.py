"""Module signatures and implementations.

The registry declares every module the program language can invoke: the
symbolic ones are implemented right here on top of :mod:`vispipe.imaging`;
the model-facing ones are thin adapters over the backend protocol.  Names
resolve case-insensitively; the registry is immutable after startup and safe
to share.

Roster (22 modules): LOC, FACEDET, SEG, VQA, SELECT, CLASSIFY, LIST, COUNT,
CROP, CROP_LEFTOF, CROP_RIGHTOF, CROP_ABOVE, CROP_BELOW, CROP_FRONTOF,
CROP_BEHIND, EVAL, RESULT, TAG, COLORPOP, BGBLUR, EMOJI, REPLACE.

Spatial crops take the box itself (CROP), or the strip left/right/above/below
of it; FRONTOF/BEHIND alias the plain crop because nothing here models depth.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Callable, Optional

from . import imaging
from .backends import (
    Backend,
    ListConfig,
    classify_regions,
    retrieve_list,
    select_regions,
)
from .errors import (
    BackendError,
    DuplicateModule,
    EmptyCrop,
    MissingMask,
    TypeMismatch,
    UnknownEmoji,
    UnknownModule,
    ValueError_,
)
from .exprs import eval_expr, substitute
from .values import (
    Box,
    Image,
    Mask,
    ObjectRegion,
    ProgramState,
    Value,
    ValueKind,
)

# ---------------------------------------------------------------------------
# Signatures


@dataclass(frozen=True)
class ArgSpec:
    """One declared argument: accepted kinds (None = any), required flag,
    default used when the step omits it."""

    name: str
    kinds: Optional[tuple[ValueKind, ...]]
    required: bool = True
    default: Optional[Value] = None

    def accepts(self, kind: ValueKind) -> bool:
        if self.kinds is None:
            return True
        if kind in self.kinds:
            return True
        return kind is ValueKind.NULL and not self.required

    def kinds_text(self) -> str:
        if self.kinds is None:
            return "any value"
        return " or ".join(k.value for k in self.kinds)


@dataclass(frozen=True)
class ModuleSignature:
    name: str
    args: tuple[ArgSpec, ...]
    output_kind: Optional[ValueKind]  # None = depends on inputs (EVAL, RESULT)

    def __post_init__(self):
        names = [a.name for a in self.args]
        if len(names) != len(set(names)):
            raise ValueError_(f"duplicate argument names in signature {self.name}")
        for a in self.args:
            if a.default is not None and a.kinds is not None \
                    and not a.accepts(a.default.kind):
                raise ValueError_(
                    f"default for {self.name}.{a.name} has wrong kind")


@dataclass(frozen=True)
class ModuleImpl:
    """Executable module: signature, execute(args, ctx), and a one-line
    summary hook used by rationale cells."""

    signature: ModuleSignature
    fn: Callable[[dict[str, Value], "ModuleContext"], Value]
    summary_fn: Optional[Callable[[dict[str, Value], Value], str]] = None

    def execute(self, args: dict[str, Value], ctx: "ModuleContext") -> Value:
        return self.fn(args, ctx)

    def summarize(self, args: dict[str, Value], output: Value) -> str:
        if self.summary_fn is not None:
            return self.summary_fn(args, output)
        return output.render_short()


@dataclass
class ModuleContext:
    """Everything a module may touch besides its resolved arguments."""

    state: ProgramState
    backend: Optional[Backend] = None
    step_index: int = 0
    list_config: ListConfig = field(default_factory=ListConfig)

    def require_backend(self) -> Backend:
        if self.backend is None:
            raise BackendError("this module needs a model backend, none configured")
        return self.backend


class Registry:
    """Name -> ModuleImpl table; resolution is case-insensitive."""

    def __init__(self):
        self._modules: dict[str, ModuleImpl] = {}

    def register(self, impl: ModuleImpl) -> "Registry":
        key = impl.signature.name.upper()
        if key in self._modules:
            raise DuplicateModule(f"module {impl.signature.name!r} already registered")
        self._modules[key] = impl
        return self

    def resolve(self, name: str) -> ModuleImpl:
        impl = self._modules.get(name.upper())
        if impl is None:
            raise UnknownModule(f"unknown module {name!r}")
        return impl

    def __contains__(self, name: str) -> bool:
        return name.upper() in self._modules

    def names(self) -> tuple[str, ...]:
        return tuple(sorted(self._modules))


# ---------------------------------------------------------------------------
# Emoji assets


def _load_emoji_table() -> dict[str, Image]:
    root = resources.files("vispipe").joinpath("assets/emoji")
    table = json.loads(root.joinpath("names.json").read_text(encoding="utf-8"))
    return {name: Image.from_png(root.joinpath(filename).read_bytes())
            for name, filename in table.items()}


_EMOJI: Optional[dict[str, Image]] = None


def emoji_table() -> dict[str, Image]:
    global _EMOJI
    if _EMOJI is None:
        _EMOJI = _load_emoji_table()
    return _EMOJI


# ---------------------------------------------------------------------------
# Shared argument plumbing


def _image(args: dict[str, Value]) -> Image:
    return args["image"].as_image("image")


def _regions(args: dict[str, Value], name: str = "object") -> tuple[ObjectRegion, ...]:
    return args[name].as_object_list(name)


def _regions_with_masks(args: dict[str, Value]) -> tuple[ObjectRegion, ...]:
    regions = _regions(args)
    for i, r in enumerate(regions):
        if r.mask is None:
            raise MissingMask(f"region {i} has no mask")
    return regions


def _box_from_arg(value: Value) -> Box:
    """CROP accepts a box or an object list (first region's box)."""
    if value.kind is ValueKind.BOX:
        return value.as_box("box")
    if value.kind is ValueKind.OBJECT_LIST:
        regions = value.as_object_list("box")
        if not regions:
            raise EmptyCrop("object list is empty, nothing to crop around")
        return regions[0].box
    raise TypeMismatch("box", "box or object_list", value.kind.value)


def _clamped(regions, image: Image) -> list[ObjectRegion]:
    return [replace(r, box=r.box.clamp(image.width, image.height)) for r in regions]


# ---------------------------------------------------------------------------
# Module functions


def _loc(args, ctx):
    image = _image(args)
    query = args["object"].as_text("object")
    regions = ctx.require_backend().locate(image, query)
    return Value.object_list(_clamped(regions, image))


def _facedet(args, ctx):
    image = _image(args)
    regions = ctx.require_backend().detect_faces(image)
    return Value.object_list(_clamped(regions, image))


def _seg(args, ctx):
    image = _image(args)
    regions = ctx.require_backend().segment(image)
    return Value.object_list(_clamped(regions, image))


def _vqa(args, ctx):
    image = _image(args)
    question = args["question"].as_text("question")
    return Value.text(ctx.require_backend().vqa(image, question))


def _select(args, ctx):
    image = _image(args)
    objs = _regions(args)
    query = args["query"].as_text("query")
    category = None if args["category"].is_null \
        else args["category"].as_text("category")
    picked = select_regions(image, objs, query, category, ctx.require_backend())
    return Value.object_list(picked)


def _classify(args, ctx):
    image = _image(args)
    objs = _regions(args)
    categories = args["categories"].as_text_list("categories")
    tagged = classify_regions(image, objs, categories, ctx.require_backend())
    return Value.object_list(tagged)


def _list(args, ctx):
    query = args["query"].as_text("query")
    max_items = None if args["max"].is_null else args["max"].as_number("max")
    items = retrieve_list(query, None if max_items is None else int(max_items),
                          ctx.list_config, ctx.require_backend())
    return Value.text_list(items)


def _count(args, ctx):
    return Value.number(len(_regions(args, "box")))


def _crop(relation: str):
    def fn(args, ctx):
        image = _image(args)
        box = _box_from_arg(args["box"])
        return Value.image(imaging.crop_spatial(image, box, relation))

    return fn


def _eval(args, ctx):
    template = args["expr"].as_text("expr")
    return eval_expr(substitute(template, ctx.state))


def _result(args, ctx):
    return args["var"]


def _tag(args, ctx):
    return Value.image(imaging.tag_regions(_image(args), _regions(args)))


def _colorpop(args, ctx):
    return Value.image(imaging.color_pop(_image(args), _regions_with_masks(args)))


def _bgblur(args, ctx):
    return Value.image(imaging.bg_blur(_image(args), _regions_with_masks(args)))


def _emoji(args, ctx):
    image = _image(args)
    regions = _regions(args)
    name = args["emoji"].as_text("emoji")
    table = emoji_table()
    glyph = table.get(name)
    if glyph is None:
        raise UnknownEmoji(name, tuple(sorted(table)))
    return Value.image(imaging.stamp_glyph(image, regions, glyph))


def _replace(args, ctx):
    image = _image(args)
    regions = _regions_with_masks(args)
    prompt = args["prompt"].as_text("prompt")
    union = imaging.union_mask(image, regions)
    out = ctx.require_backend().inpaint(image, Mask(union), prompt)
    if out.width != image.width or out.height != image.height:
        raise BackendError(
            f"inpaint returned {out.width}x{out.height} for a "
            f"{image.width}x{image.height} image")
    return Value.image(out)


# ---------------------------------------------------------------------------
# Registry assembly

_K = ValueKind


def _arg(name: str, *kinds: ValueKind, required: bool = True,
         default: Optional[Value] = None) -> ArgSpec:
    return ArgSpec(name, kinds or None, required, default)


def _sig(name: str, output: Optional[ValueKind], *args: ArgSpec) -> ModuleSignature:
    return ModuleSignature(name, args, output)


def default_registry() -> Registry:
    reg = Registry()
    null = Value.null()
    entries: list[tuple[ModuleSignature, Callable, Optional[Callable]]] = [
        (_sig("LOC", _K.OBJECT_LIST, _arg("image", _K.IMAGE),
              _arg("object", _K.TEXT)), _loc, None),
        (_sig("FACEDET", _K.OBJECT_LIST, _arg("image", _K.IMAGE)), _facedet, None),
        (_sig("SEG", _K.OBJECT_LIST, _arg("image", _K.IMAGE)), _seg, None),
        (_sig("VQA", _K.TEXT, _arg("image", _K.IMAGE),
              _arg("question", _K.TEXT)), _vqa, None),
        (_sig("SELECT", _K.OBJECT_LIST, _arg("image", _K.IMAGE),
              _arg("object", _K.OBJECT_LIST), _arg("query", _K.TEXT),
              _arg("category", _K.TEXT, required=False, default=null)),
         _select, None),
        (_sig("CLASSIFY", _K.OBJECT_LIST, _arg("image", _K.IMAGE),
              _arg("object", _K.OBJECT_LIST), _arg("categories", _K.TEXT_LIST)),
         _classify, None),
        (_sig("LIST", _K.TEXT_LIST, _arg("query", _K.TEXT),
              _arg("max", _K.NUMBER, required=False, default=null)), _list, None),
        (_sig("COUNT", _K.NUMBER, _arg("box", _K.OBJECT_LIST)), _count, None),
        (_sig("EVAL", None, _arg("expr", _K.TEXT)), _eval, None),
        (_sig("RESULT", None, _arg("var")), _result, None),
        (_sig("TAG", _K.IMAGE, _arg("image", _K.IMAGE),
              _arg("object", _K.OBJECT_LIST)), _tag, None),
        (_sig("COLORPOP", _K.IMAGE, _arg("image", _K.IMAGE),
              _arg("object", _K.OBJECT_LIST)), _colorpop, None),
        (_sig("BGBLUR", _K.IMAGE, _arg("image", _K.IMAGE),
              _arg("object", _K.OBJECT_LIST)), _bgblur, None),
        (_sig("EMOJI", _K.IMAGE, _arg("image", _K.IMAGE),
              _arg("object", _K.OBJECT_LIST), _arg("emoji", _K.TEXT)),
         _emoji, None),
        (_sig("REPLACE", _K.IMAGE, _arg("image", _K.IMAGE),
              _arg("object", _K.OBJECT_LIST), _arg("prompt", _K.TEXT)),
         _replace, None),
    ]
    for relation, name in (("none", "CROP"), ("left", "CROP_LEFTOF"),
                           ("right", "CROP_RIGHTOF"), ("above", "CROP_ABOVE"),
                           ("below", "CROP_BELOW"), ("frontof", "CROP_FRONTOF"),
                           ("behind", "CROP_BEHIND")):
        entries.append((_sig(name, _K.IMAGE, _arg("image", _K.IMAGE),
                             _arg("box", _K.BOX, _K.OBJECT_LIST)),
                        _crop(relation), None))
    for sig, fn, summary in entries:
        reg.register(ModuleImpl(sig, fn, summary))
    return reg

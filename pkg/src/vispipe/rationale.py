"""Visual rationales: one self-contained document per run.

Each executed step becomes one cell showing the step text, its resolved
inputs, and its output; images, masks, and object lists render as data-URI
thumbnails (max 256 px, nearest-neighbor) so the document has no external
references.  Failed runs render every completed cell plus an error banner on
the failing one.  Rendering is a pure function of the RunRecord, so the same
run always produces byte-identical HTML.

`rationale_cells` emits the machine-readable sidecar (same structure, same
thumbnails) consumed by UIs.
"""

from __future__ import annotations

import base64
import html
from typing import Optional

import numpy as np

from .imaging import draw_regions_overlay, scale_nearest
from .interpreter import RunRecord, StepTrace
from .values import Image, Mask, Value, ValueKind

THUMB_MAX = 256
_BOX_STROKE = 2


def _thumbnail(image: Image) -> Image:
    scale = max(image.width, image.height) / THUMB_MAX
    if scale <= 1.0:
        return image
    w = max(int(image.width / scale), 1)
    h = max(int(image.height / scale), 1)
    return Image(scale_nearest(image.pixels, w, h))


def _data_uri(image: Image) -> str:
    return "data:image/png;base64," + base64.b64encode(image.to_png()).decode()


def _mask_image(mask: Mask) -> Image:
    arr = np.zeros((mask.height, mask.width, 4), dtype=np.uint8)
    arr[..., 3] = 255
    arr[mask.bits] = (255, 255, 255, 255)
    return Image(arr)


def _image_for_value(value: Value, context_image: Optional[Image]) -> Optional[Image]:
    """The raster that should illustrate a value, if any."""
    if value.kind is ValueKind.IMAGE:
        return value.as_image()
    if value.kind is ValueKind.MASK:
        return _mask_image(value.as_mask())
    if value.kind is ValueKind.OBJECT_LIST and context_image is not None:
        return draw_regions_overlay(context_image, value.as_object_list(),
                                    stroke=_BOX_STROKE)
    return None


def _context_image(trace: StepTrace) -> Optional[Image]:
    for name in ("image", "left", "right"):
        v = trace.args.get(name)
        if v is not None and v.kind is ValueKind.IMAGE:
            return v.as_image()
    for v in trace.args.values():
        if v.kind is ValueKind.IMAGE:
            return v.as_image()
    return None


def _value_cell(name: str, value: Value, context_image: Optional[Image]) -> dict:
    out: dict = {"name": name, "kind": value.kind.value,
                 "text": value.render_short()}
    illustration = _image_for_value(value, context_image)
    if illustration is not None:
        out["thumbnail"] = _data_uri(_thumbnail(illustration))
    if value.kind is ValueKind.OBJECT_LIST:
        out["labels"] = [r.label() for r in value.as_object_list()]
    return out


def rationale_cells(run: RunRecord) -> dict:
    """Machine-readable sidecar: one entry per trace plus the result banner."""
    cells = []
    for trace in run.traces:
        context = _context_image(trace)
        cell: dict = {
            "index": trace.index,
            "step": trace.step_text,
            "module": trace.module,
            "args": [_value_cell(name, value, context)
                     for name, value in trace.args.items()],
            "output": None,
            "summary": trace.summary,
            "error": trace.error,
        }
        if trace.output is not None:
            cell["output"] = _value_cell("output", trace.output, context)
        cells.append(cell)
    result = None
    if run.result is not None:
        result = _value_cell("result", run.result, None)
    return {
        "run_id": run.run_id,
        "status": run.status,
        "program": run.program_source,
        "cells": cells,
        "result": result,
    }


_STYLE = """
body{font-family:sans-serif;background:#f5f5f7;margin:0;padding:16px;}
.cell{background:#fff;border:1px solid #ddd;border-radius:6px;margin:12px 0;
 padding:12px;}
.cell h3{margin:0 0 8px 0;font-size:14px;font-family:monospace;}
.io{display:flex;flex-wrap:wrap;gap:12px;}
.val{border:1px solid #eee;border-radius:4px;padding:6px;font-size:12px;}
.val .name{font-weight:bold;color:#555;}
.val img{display:block;margin-top:4px;max-width:256px;image-rendering:pixelated;}
.arrow{font-size:18px;align-self:center;}
.error{background:#fee;border:1px solid #c00;color:#900;padding:8px;
 border-radius:4px;margin-top:8px;font-size:13px;}
.result{background:#e8f5e9;border:1px solid #2e7d32;padding:10px;
 border-radius:6px;font-size:14px;}
.failed{background:#fee;border-color:#c00;}
""".strip()


def _render_value_html(cell: dict) -> str:
    parts = [f'<div class="val"><span class="name">{html.escape(cell["name"])}'
             f'</span>: {html.escape(cell["text"])}']
    if "thumbnail" in cell:
        parts.append(f'<img src="{cell["thumbnail"]}" alt="{cell["kind"]}"/>')
    parts.append("</div>")
    return "".join(parts)


def render_rationale(run: RunRecord) -> str:
    """Stitch every step cell into one self-contained HTML document."""
    doc = rationale_cells(run)
    out = [
        "<!DOCTYPE html>",
        '<html><head><meta charset="utf-8"/>',
        f"<title>rationale {html.escape(run.run_id)}</title>",
        f"<style>{_STYLE}</style></head><body>",
        f"<h2>Run {html.escape(run.run_id)}</h2>",
    ]
    for cell in doc["cells"]:
        out.append('<div class="cell">')
        out.append(f"<h3>[{cell['index']}] {html.escape(cell['step'])}</h3>")
        out.append('<div class="io">')
        for arg in cell["args"]:
            out.append(_render_value_html(arg))
        if cell["output"] is not None:
            out.append('<span class="arrow">&rarr;</span>')
            out.append(_render_value_html(cell["output"]))
        out.append("</div>")
        if cell["error"] is not None:
            message = html.escape(str(cell["error"].get("message", "")))
            code = html.escape(str(cell["error"].get("code", "error")))
            out.append(f'<div class="error"><b>{code}</b>: {message}</div>')
        out.append("</div>")
    if doc["status"] == "ok" and doc["result"] is not None:
        out.append('<div class="result"><b>Result</b>: '
                   f"{html.escape(doc['result']['text'])}")
        if "thumbnail" in doc["result"]:
            out.append(f'<br/><img src="{doc["result"]["thumbnail"]}" '
                       'alt="result" style="image-rendering:pixelated"/>')
        out.append("</div>")
    else:
        out.append('<div class="result failed"><b>Run failed</b></div>')
    out.append("</body></html>")
    return "\n".join(out)

"""Dataset loading, detection metrics, and batch evaluation.

Datasets are plain JSON (see `load_dataset`); image references ending in
``.json`` are synthetic scene descriptions rendered on the fly (and taught to
a procedural backend), anything else is read as a PNG/JPEG file.  One image
binds as ``IMAGE``; image pairs bind as ``LEFT`` and ``RIGHT``.

Tagging metrics follow the detection convention: candidate pred/gold pairs at
IoU >= threshold (tag equality required in tagging mode, ignored in
localization mode) are matched greedily in descending-IoU order, one-to-one.
Per-record precision/recall are averaged across records and summarized by
F1 = 2*avgP*avgR / (avgP + avgR).

`run_eval` generates, executes, scores, and writes one rationale per record
plus a canonical JSON report; per-record failures are recorded, never fatal.
Editing predictions get a blank ``judgment`` column for manual scoring
(`record_judgment` fills it in afterwards).
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .backends import Backend, ProceduralBackend
from .dsl import validate
from .errors import (
    DatasetError,
    EmptySet,
    GenerationError,
    LengthMismatch,
    VispipeError,
)
from .generator import (
    PromptSpec,
    VotingStrategy,
    generate_program,
    vote,
    vote_key,
)
from .interpreter import ExecutionOptions, RunRecord, execute
from .rationale import rationale_cells, render_rationale
from .registry import Registry, default_registry
from .scenes import Scene, render_scene
from .serialization import canonical_dumps
from .values import (
    Box,
    Image,
    ObjectRegion,
    Value,
    ValueKind,
    format_number,
    norm_text,
)

TASKS = ("qa", "pairqa", "tagging", "editing")


# ---------------------------------------------------------------------------
# Metrics


def iou(a: Box, b: Box) -> float:
    """Intersection over union of two boxes; 0 when the union has no area."""
    return a.iou(b)


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[tuple[int, int, float], ...]  # (pred idx, gold idx, IoU)
    precision: float
    recall: float


def match_tagging(preds: Sequence[ObjectRegion],
                  gold: Sequence[tuple[Box, str]],
                  threshold: float = 0.5,
                  mode: str = "tagging") -> MatchResult:
    """Greedy one-to-one matching by descending IoU.

    ``localization`` mode ignores tags; ``tagging`` mode additionally needs
    normalized tag equality (pred tag falls back to its category).  Empty
    sides degenerate cleanly: precision is 1 when both sides are empty, 0
    when only predictions are missing, and symmetrically for recall.
    """
    if mode not in ("tagging", "localization"):
        raise ValueError(f"unknown mode {mode!r}")
    candidates: list[tuple[float, int, int]] = []
    for pi, pred in enumerate(preds):
        for gi, (gbox, gtag) in enumerate(gold):
            overlap = iou(pred.box, gbox)
            if overlap < threshold:
                continue
            if mode == "tagging":
                label = pred.label()
                if label is None or norm_text(label) != norm_text(gtag):
                    continue
            candidates.append((overlap, pi, gi))
    candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
    used_pred: set[int] = set()
    used_gold: set[int] = set()
    pairs: list[tuple[int, int, float]] = []
    for overlap, pi, gi in candidates:
        if pi in used_pred or gi in used_gold:
            continue
        used_pred.add(pi)
        used_gold.add(gi)
        pairs.append((pi, gi, overlap))
    matches = len(pairs)
    if preds:
        precision = matches / len(preds)
    else:
        precision = 1.0 if not gold else 0.0
    if gold:
        recall = matches / len(gold)
    else:
        recall = 1.0 if not preds else 0.0
    return MatchResult(tuple(pairs), precision, recall)


def aggregate_f1(per_record: Sequence[tuple[float, float]]) -> tuple[float, float, float]:
    """Unweighted mean precision/recall across records and their harmonic
    mean; works on fractions or percentages alike."""
    if not per_record:
        raise EmptySet("no records to aggregate")
    avg_p = sum(p for p, _ in per_record) / len(per_record)
    avg_r = sum(r for _, r in per_record) / len(per_record)
    f1 = 0.0 if avg_p + avg_r == 0 else 2 * avg_p * avg_r / (avg_p + avg_r)
    return (avg_p, avg_r, f1)


def accuracy(preds: Sequence[Optional[str]], gold: Sequence[str]) -> float:
    """Exact-match accuracy after normalization; failed predictions count
    as wrong."""
    if len(preds) != len(gold):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(gold)} gold")
    if not gold:
        raise EmptySet("no answers to score")
    hits = sum(1 for p, g in zip(preds, gold)
               if p is not None and norm_text(p) == norm_text(g))
    return hits / len(gold)


# ---------------------------------------------------------------------------
# Datasets


@dataclass(frozen=True)
class EvalRecord:
    id: str
    task: str
    image_refs: tuple[str, ...]
    instruction: str
    gold_answer: Optional[str] = None
    gold_regions: tuple[tuple[Box, str], ...] = ()
    group: Optional[str] = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise DatasetError(f"record {self.id}: unknown task {self.task!r}")
        expected = 2 if self.task == "pairqa" else 1
        if len(self.image_refs) != expected:
            raise DatasetError(
                f"record {self.id}: {self.task} needs {expected} image(s), "
                f"got {len(self.image_refs)}")


@dataclass
class EvalDataset:
    task: str
    records: list[EvalRecord]
    knowledge: dict[str, list[str]] = field(default_factory=dict)
    base_dir: str = "."


def load_dataset(path: str) -> EvalDataset:
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    task = data.get("task")
    if task not in TASKS:
        raise DatasetError(f"dataset task must be one of {TASKS}, got {task!r}")
    records = []
    for row in data.get("records", []):
        gold = row.get("gold")
        gold_answer = None
        gold_regions: tuple = ()
        if task in ("qa", "pairqa"):
            if not isinstance(gold, str):
                raise DatasetError(f"record {row.get('id')}: gold must be an "
                                   "answer string")
            gold_answer = gold
        elif task == "tagging":
            if not isinstance(gold, list):
                raise DatasetError(f"record {row.get('id')}: gold must be a "
                                   "list of box/tag pairs")
            gold_regions = tuple((Box(*g["box"]), g["tag"]) for g in gold)
        records.append(EvalRecord(
            id=str(row["id"]),
            task=task,
            image_refs=tuple(row["images"]),
            instruction=row["instruction"],
            gold_answer=gold_answer,
            gold_regions=gold_regions,
            group=row.get("group"),
        ))
    return EvalDataset(task=task, records=records,
                       knowledge=data.get("knowledge", {}),
                       base_dir=os.path.dirname(os.path.abspath(path)))


def stratified_subset(records: Sequence[EvalRecord], per_group: int,
                      seed: int) -> list[EvalRecord]:
    """Up to ``per_group`` records per ``group`` label, seeded sampling,
    dataset order preserved in the output."""
    by_group: dict[str, list[int]] = {}
    for i, record in enumerate(records):
        by_group.setdefault(record.group or "", []).append(i)
    rng = random.Random(seed)
    chosen: set[int] = set()
    for group in sorted(by_group):
        indices = by_group[group]
        if len(indices) <= per_group:
            chosen.update(indices)
        else:
            chosen.update(rng.sample(indices, per_group))
    return [records[i] for i in sorted(chosen)]


# ---------------------------------------------------------------------------
# Batch evaluation


def input_names_for(task: str) -> tuple[str, ...]:
    return ("LEFT", "RIGHT") if task == "pairqa" else ("IMAGE",)


def load_record_images(record: EvalRecord, base_dir: str,
                       backend: Optional[Backend]) -> dict[str, Value]:
    """Resolve image refs; scene JSONs are rendered and, when the backend is
    procedural, registered so it can answer over them."""
    images = []
    for ref in record.image_refs:
        path = ref if os.path.isabs(ref) else os.path.join(base_dir, ref)
        if ref.endswith(".json"):
            scene = Scene.load(path)
            if isinstance(backend, ProceduralBackend):
                images.append(backend.add_scene(scene))
            else:
                images.append(render_scene(scene))
        else:
            with open(path, "rb") as f:
                images.append(Image.from_png(f.read()))
    names = input_names_for(record.task)
    inputs = {name: Value.image(img) for name, img in zip(names, images)}
    for gbox, _ in record.gold_regions:
        img = images[0]
        if gbox.x2 > img.width or gbox.y2 > img.height or gbox.x1 < 0 or gbox.y1 < 0:
            raise DatasetError(
                f"record {record.id}: gold box {gbox.as_tuple()} outside "
                f"{img.width}x{img.height} image")
    return inputs


def answer_text(value: Value) -> str:
    """Canonical answer rendering for accuracy comparisons."""
    if value.kind is ValueKind.TEXT:
        return value.data
    if value.kind is ValueKind.NUMBER:
        return format_number(value.data)
    if value.kind is ValueKind.BOOLEAN:
        return "True" if value.data else "False"
    return value.render_short()


def final_object_list(run: RunRecord) -> tuple[ObjectRegion, ...]:
    """Predicted regions of a tagging run: the last object list the program
    produced (the result itself is usually the tagged image).  When any
    region carries an assigned tag, only tagged regions count as predictions;
    regions Classify left untagged are non-claims, not tag predictions."""
    regions: tuple[ObjectRegion, ...] = ()
    if run.result is not None and run.result.kind is ValueKind.OBJECT_LIST:
        regions = run.result.as_object_list()
    else:
        for trace in reversed(run.traces):
            if trace.output is not None and \
                    trace.output.kind is ValueKind.OBJECT_LIST:
                regions = trace.output.as_object_list()
                break
    tagged = tuple(r for r in regions if r.tag is not None)
    return tagged if tagged else regions


def _record_inputs_subdir(out_dir: str) -> str:
    path = os.path.join(out_dir, "rationales")
    os.makedirs(path, exist_ok=True)
    return path


def run_eval(dataset: EvalDataset, spec: PromptSpec, client, backend: Backend,
             out_dir: str, registry: Optional[Registry] = None, seed: int = 0,
             options: ExecutionOptions = ExecutionOptions(step_timeout_s=None),
             ) -> dict:
    """Generate -> execute -> score every record and write the report."""
    registry = registry if registry is not None else default_registry()
    if isinstance(backend, ProceduralBackend):
        for query, items in dataset.knowledge.items():
            backend.knowledge[norm_text(query)] = list(items)
    os.makedirs(out_dir, exist_ok=True)
    rationale_dir = _record_inputs_subdir(out_dir)
    input_names = input_names_for(dataset.task)

    rows: list[dict] = []
    tagging_pr: list[tuple[float, float]] = []
    localization_pr: list[tuple[float, float]] = []
    answers: list[Optional[str]] = []

    for record in dataset.records:
        row: dict = {"id": record.id, "instruction": record.instruction,
                     "status": "ok", "program": None, "answer": None,
                     "error": None}
        representative: Optional[RunRecord] = None
        try:
            inputs = load_record_images(record, dataset.base_dir, backend)
            if isinstance(spec.strategy, VotingStrategy):
                per_run = []
                results: list[Optional[Value]] = []
                runs: list[Optional[RunRecord]] = []
                for i in range(spec.strategy.runs):
                    run_seed = spec.strategy.seed_for(i, seed)
                    try:
                        program = generate_program(
                            spec, record.instruction, client, seed=run_seed,
                            registry=registry, inputs=input_names)
                        run = execute(program, inputs, registry, backend,
                                      options)
                        runs.append(run)
                        results.append(run.result)
                        per_run.append({
                            "seed": run_seed,
                            "status": run.status,
                            "answer": None if run.result is None
                            else answer_text(run.result),
                        })
                    except (GenerationError, VispipeError) as e:
                        runs.append(None)
                        results.append(None)
                        per_run.append({"seed": run_seed, "status": "failed",
                                        "answer": None,
                                        "error": e.to_json()})
                row["per_run"] = per_run
                final = vote(results)  # AllRunsFailed propagates to row error
                winner_key = vote_key(final)
                for run, result in zip(runs, results):
                    if run is not None and result is not None \
                            and vote_key(result) == winner_key:
                        representative = run
                        break
                row["program"] = representative.program_source \
                    if representative else None
                result_value: Optional[Value] = final
            else:
                program = generate_program(
                    spec, record.instruction, client, seed=seed,
                    registry=registry, inputs=input_names)
                run = execute(program, inputs, registry, backend, options)
                representative = run
                row["program"] = run.program_source
                if run.status != "ok":
                    failing = next(t for t in run.traces if t.error)
                    raise VispipeError(
                        f"step {failing.index} failed: "
                        f"{failing.error.get('message')}")
                result_value = run.result
        except VispipeError as e:
            row["status"] = "failed"
            row["error"] = e.to_json()
            result_value = None

        if representative is not None:
            html_doc = render_rationale(representative)
            with open(os.path.join(rationale_dir, f"{record.id}.html"), "w",
                      encoding="utf-8") as f:
                f.write(html_doc)
            with open(os.path.join(rationale_dir, f"{record.id}.json"), "w",
                      encoding="utf-8") as f:
                f.write(canonical_dumps(rationale_cells(representative)))

        if dataset.task in ("qa", "pairqa"):
            answer = None if result_value is None else answer_text(result_value)
            row["answer"] = answer
            row["gold"] = record.gold_answer
            row["correct"] = (answer is not None and record.gold_answer is not None
                              and norm_text(answer) == norm_text(record.gold_answer))
            answers.append(answer)
        elif dataset.task == "tagging":
            preds = final_object_list(representative) \
                if representative is not None and row["status"] == "ok" else ()
            row["predictions"] = [
                {"box": list(r.box.as_tuple()), "tag": r.label()} for r in preds]
            tag_match = match_tagging(preds, record.gold_regions, mode="tagging")
            loc_match = match_tagging(preds, record.gold_regions,
                                      mode="localization")
            row["tagging"] = {"precision": tag_match.precision,
                              "recall": tag_match.recall}
            row["localization"] = {"precision": loc_match.precision,
                                   "recall": loc_match.recall}
            tagging_pr.append((tag_match.precision, tag_match.recall))
            localization_pr.append((loc_match.precision, loc_match.recall))
        elif dataset.task == "editing":
            row["answer"] = None if result_value is None \
                else answer_text(result_value)
            if result_value is not None and result_value.kind is ValueKind.IMAGE:
                row["result_image"] = result_value.data.content_hash
            row["judgment"] = None  # filled in by manual scoring
        rows.append(row)

    aggregates: dict = {"records": len(rows),
                        "failed": sum(1 for r in rows if r["status"] != "ok")}
    if dataset.task in ("qa", "pairqa"):
        gold = [r.gold_answer or "" for r in dataset.records]
        aggregates["accuracy"] = accuracy(answers, gold) if gold else None
    elif dataset.task == "tagging":
        for name, pr in (("tagging", tagging_pr),
                         ("localization", localization_pr)):
            avg_p, avg_r, f1 = aggregate_f1(pr)
            aggregates[name] = {"precision": avg_p, "recall": avg_r, "f1": f1}
    elif dataset.task == "editing":
        aggregates["judged_accuracy"] = None  # needs manual judgments

    report = {
        "task": dataset.task,
        "seed": seed,
        "k": spec.k,
        "strategy": type(spec.strategy).__name__.replace("Strategy", "").lower(),
        "rows": rows,
        "aggregates": aggregates,
    }
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as f:
        f.write(canonical_dumps(report))
    return report


def record_judgment(report_path: str, record_id: str, verdict: str) -> dict:
    """Fill the manual-judgment column of an editing report; recomputes the
    judged accuracy over all judged rows."""
    if verdict not in ("correct", "incorrect"):
        raise VispipeError("verdict must be 'correct' or 'incorrect'")
    with open(report_path, "r", encoding="utf-8") as f:
        report = json.load(f)
    hit = False
    for row in report["rows"]:
        if row["id"] == record_id:
            row["judgment"] = verdict
            hit = True
    if not hit:
        raise VispipeError(f"no record {record_id!r} in report")
    judged = [r for r in report["rows"] if r.get("judgment") is not None]
    correct = sum(1 for r in judged if r["judgment"] == "correct")
    report["aggregates"]["judged_accuracy"] = \
        correct / len(judged) if judged else None
    with open(report_path, "w", encoding="utf-8") as f:
        f.write(canonical_dumps(report))
    return report

"""Golden end-to-end records over synthetic scenes.

Each record pairs an instruction with the program a well-behaved generator
should emit and the expected outcome.  The scene descriptions are the oracle:
gold answers, gold boxes, and expected edited images are all derived from
them, never from engine output.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

from vispipe.scenes import Scene, SceneObject
from vispipe.values import Box

# The DSL quotes text with single quotes; expressions inside EVAL need \'.
Q = "\\'"


@dataclass(frozen=True)
class GoldenRecord:
    id: str
    task: str
    instruction: str
    program: str
    scenes: tuple[Scene, ...]
    gold_answer: Optional[str] = None
    gold_regions: tuple[tuple[Box, str], ...] = ()
    group: Optional[str] = None
    # editing only: (op, object index in scene, extra) checked against an
    # oracle rendering in the tests
    edit_check: Optional[tuple] = None


KNOWLEDGE = {
    "main characters on the show": ["amy", "bernadette"],
    "german car companies": ["bmw", "audi", "ford"],
    "ceo of ibm": ["samuel palmisano"],
    "most recent ceo of ibm": ["arvind krishna"],
}


def _scene_qa1() -> Scene:
    return Scene(200, 120, (
        SceneObject("square", "red", Box(20, 40, 60, 80)),
        SceneObject("face", "yellow", Box(120, 30, 170, 80), label="amy"),
    ))


def _scene_qa2() -> Scene:
    return Scene(220, 140, (
        SceneObject("square", "green", Box(30, 50, 80, 100)),
        SceneObject("circle", "blue", Box(140, 40, 190, 90)),
    ))


def _scene_qa3() -> Scene:
    return Scene(240, 140, (
        SceneObject("triangle", "purple", Box(10, 20, 60, 70)),
        SceneObject("triangle", "orange", Box(90, 60, 140, 110)),
        SceneObject("triangle", "cyan", Box(170, 10, 220, 60)),
        SceneObject("circle", "red", Box(100, 10, 130, 40)),
    ))


def _scene_qa4() -> Scene:
    return Scene(160, 200, (
        SceneObject("square", "red", Box(40, 120, 110, 180)),
        SceneObject("circle", "yellow", Box(50, 20, 100, 70)),
    ))


def _scene_pair_left() -> Scene:
    return Scene(150, 100, (
        SceneObject("circle", "blue", Box(10, 10, 55, 55)),
        SceneObject("circle", "blue", Box(80, 35, 130, 85)),
    ))


def _scene_pair_right() -> Scene:
    return Scene(150, 100, (
        SceneObject("square", "green", Box(40, 25, 100, 85)),
    ))


def _scene_face_left() -> Scene:
    return Scene(140, 110, (
        SceneObject("face", "pink", Box(30, 20, 90, 80), label="leonard"),
    ))


def _scene_tg1() -> Scene:
    return Scene(260, 140, (
        SceneObject("face", "yellow", Box(20, 30, 90, 100), label="amy"),
        SceneObject("face", "pink", Box(150, 25, 225, 100), label="bernadette"),
    ))


def _scene_tg2() -> Scene:
    return Scene(300, 120, (
        SceneObject("square", "gray", Box(15, 30, 80, 95), label="bmw"),
        SceneObject("square", "brown", Box(115, 30, 180, 95), label="audi"),
        SceneObject("square", "black", Box(215, 30, 280, 95), label="ford"),
    ))


def _scene_tg3() -> Scene:
    return Scene(220, 160, (
        SceneObject("square", "brown", Box(30, 80, 190, 150),
                    category="table-merged"),
        SceneObject("circle", "red", Box(80, 20, 130, 70), category="ball"),
    ))


def _scene_edit() -> Scene:
    return Scene(200, 120, (
        SceneObject("square", "red", Box(20, 40, 60, 80)),
        SceneObject("face", "yellow", Box(120, 30, 170, 80), label="amy"),
    ))


GQA_PROGRAM_LEFT_RIGHT = (
    "OBJ0=LOC(image=IMAGE,object='face')\n"
    "IMAGE0=CROP_LEFTOF(image=IMAGE,box=OBJ0)\n"
    "OBJ1=LOC(image=IMAGE0,object='red square')\n"
    "ANSWER0=COUNT(box=OBJ1)\n"
    f"ANSWER1=EVAL(expr='{Q}left{Q} if {{ANSWER0}} > 0 else {Q}right{Q}')\n"
    "FINAL=RESULT(var=ANSWER1)")


def golden_records() -> list[GoldenRecord]:
    records: list[GoldenRecord] = []

    records.append(GoldenRecord(
        id="qa1", task="qa",
        instruction="Is the red square left or right of the face?",
        program=GQA_PROGRAM_LEFT_RIGHT,
        scenes=(_scene_qa1(),), gold_answer="left", group="spatial"))

    records.append(GoldenRecord(
        id="qa2", task="qa",
        instruction="Is the blue circle left or right of the green square?",
        program=(
            "OBJ0=LOC(image=IMAGE,object='green square')\n"
            "IMAGE0=CROP_LEFTOF(image=IMAGE,box=OBJ0)\n"
            "OBJ1=LOC(image=IMAGE0,object='blue circle')\n"
            "ANSWER0=COUNT(box=OBJ1)\n"
            f"ANSWER1=EVAL(expr='{Q}left{Q} if {{ANSWER0}} > 0 else {Q}right{Q}')\n"
            "FINAL=RESULT(var=ANSWER1)"),
        scenes=(_scene_qa2(),), gold_answer="right", group="spatial"))

    records.append(GoldenRecord(
        id="qa3", task="qa",
        instruction="How many triangles are in the image?",
        program=(
            "OBJ0=LOC(image=IMAGE,object='triangle')\n"
            "ANSWER0=COUNT(box=OBJ0)\n"
            "FINAL=RESULT(var=ANSWER0)"),
        scenes=(_scene_qa3(),), gold_answer="3", group="count"))

    records.append(GoldenRecord(
        id="qa4", task="qa",
        instruction="Is there a circle above the red square?",
        program=(
            "OBJ0=LOC(image=IMAGE,object='red square')\n"
            "IMAGE0=CROP_ABOVE(image=IMAGE,box=OBJ0)\n"
            "OBJ1=LOC(image=IMAGE0,object='circle')\n"
            "ANSWER0=COUNT(box=OBJ1)\n"
            f"ANSWER1=EVAL(expr='{Q}yes{Q} if {{ANSWER0}} > 0 else {Q}no{Q}')\n"
            "FINAL=RESULT(var=ANSWER1)"),
        scenes=(_scene_qa4(),), gold_answer="yes", group="spatial"))

    records.append(GoldenRecord(
        id="pq1", task="pairqa",
        instruction=("There are two blue circles in the left image and a "
                     "green square in the right image."),
        program=(
            "ANSWER0=VQA(image=LEFT,question='How many blue circles are there?')\n"
            "ANSWER1=VQA(image=RIGHT,question='Is there a green square?')\n"
            f"ANSWER2=EVAL(expr='{{ANSWER0}} == {Q}2{Q} and {{ANSWER1}} == {Q}yes{Q}')\n"
            "FINAL=RESULT(var=ANSWER2)"),
        scenes=(_scene_pair_left(), _scene_pair_right()),
        gold_answer="True"))

    records.append(GoldenRecord(
        id="pq2", task="pairqa",
        instruction="One of the images contains a triangle.",
        program=(
            "ANSWER0=VQA(image=LEFT,question='Is there a triangle?')\n"
            "ANSWER1=VQA(image=RIGHT,question='Is there a triangle?')\n"
            f"ANSWER2=EVAL(expr='{{ANSWER0}} == {Q}yes{Q} or {{ANSWER1}} == {Q}yes{Q}')\n"
            "FINAL=RESULT(var=ANSWER2)"),
        scenes=(_scene_pair_left(), _scene_pair_right()),
        gold_answer="False"))

    records.append(GoldenRecord(
        id="pq3", task="pairqa",
        instruction="Exactly one of the images contains a face.",
        program=(
            "ANSWER0=VQA(image=LEFT,question='Is there a face?')\n"
            "ANSWER1=VQA(image=RIGHT,question='Is there a face?')\n"
            f"ANSWER2=EVAL(expr='{{ANSWER0}} == {Q}yes{Q} xor {{ANSWER1}} == {Q}yes{Q}')\n"
            "FINAL=RESULT(var=ANSWER2)"),
        scenes=(_scene_face_left(), _scene_pair_right()),
        gold_answer="True"))

    tg1 = _scene_tg1()
    records.append(GoldenRecord(
        id="tg1", task="tagging",
        instruction="Tag the main characters on the show",
        program=(
            "OBJ0=FACEDET(image=IMAGE)\n"
            "LIST0=LIST(query='main characters on the show',max=None)\n"
            "OBJ1=CLASSIFY(image=IMAGE,object=OBJ0,categories=LIST0)\n"
            "IMAGE0=TAG(image=IMAGE,object=OBJ1)\n"
            "FINAL=RESULT(var=IMAGE0)"),
        scenes=(tg1,),
        gold_regions=(
            (tg1.objects[0].box, "amy"),
            (tg1.objects[1].box, "bernadette"),
        )))

    tg2 = _scene_tg2()
    records.append(GoldenRecord(
        id="tg2", task="tagging",
        instruction="Tag the logos of the top 2 german car companies",
        program=(
            "OBJ0=LOC(image=IMAGE,object='square')\n"
            "LIST0=LIST(query='german car companies',max=2)\n"
            "OBJ1=CLASSIFY(image=IMAGE,object=OBJ0,categories=LIST0)\n"
            "IMAGE0=TAG(image=IMAGE,object=OBJ1)\n"
            "FINAL=RESULT(var=IMAGE0)"),
        scenes=(tg2,),
        gold_regions=(
            (tg2.objects[0].box, "bmw"),
            (tg2.objects[1].box, "audi"),
        )))

    tg3 = _scene_tg3()
    records.append(GoldenRecord(
        id="tg3", task="tagging",
        instruction="Tag the table",
        program=(
            "OBJ0=SEG(image=IMAGE)\n"
            "OBJ1=SELECT(image=IMAGE,object=OBJ0,query='table',category='table-merged')\n"
            "IMAGE0=TAG(image=IMAGE,object=OBJ1)\n"
            "FINAL=RESULT(var=IMAGE0)"),
        scenes=(tg3,),
        gold_regions=((tg3.objects[0].box, "table"),)))

    edit = _scene_edit()
    records.append(GoldenRecord(
        id="ed1", task="editing",
        instruction="Create a color pop of the red square",
        program=(
            "OBJ0=SEG(image=IMAGE)\n"
            "OBJ1=SELECT(image=IMAGE,object=OBJ0,query='red square',category=None)\n"
            "IMAGE0=COLORPOP(image=IMAGE,object=OBJ1)\n"
            "FINAL=RESULT(var=IMAGE0)"),
        scenes=(edit,), edit_check=("colorpop", 0, None)))

    records.append(GoldenRecord(
        id="ed2", task="editing",
        instruction="Blur everything behind the face",
        program=(
            "OBJ0=SEG(image=IMAGE)\n"
            "OBJ1=SELECT(image=IMAGE,object=OBJ0,query='face',category=None)\n"
            "IMAGE0=BGBLUR(image=IMAGE,object=OBJ1)\n"
            "FINAL=RESULT(var=IMAGE0)"),
        scenes=(edit,), edit_check=("bgblur", 1, None)))

    records.append(GoldenRecord(
        id="ed3", task="editing",
        instruction="Hide the face with a winking face",
        program=(
            "OBJ0=FACEDET(image=IMAGE)\n"
            "IMAGE0=EMOJI(image=IMAGE,object=OBJ0,emoji='winking_face')\n"
            "FINAL=RESULT(var=IMAGE0)"),
        scenes=(edit,), edit_check=("emoji", 1, "winking_face")))

    records.append(GoldenRecord(
        id="ed4", task="editing",
        instruction="Replace the red square with a blue ocean",
        program=(
            "OBJ0=SEG(image=IMAGE)\n"
            "OBJ1=SELECT(image=IMAGE,object=OBJ0,query='red square',category=None)\n"
            "IMAGE0=REPLACE(image=IMAGE,object=OBJ1,prompt='blue ocean')\n"
            "FINAL=RESULT(var=IMAGE0)"),
        scenes=(edit,), edit_check=("replace", 0, "blue ocean")))

    return records


def records_for(task: str) -> list[GoldenRecord]:
    return [r for r in golden_records() if r.task == task]


def replay_completions() -> dict[str, str]:
    return {r.instruction: r.program for r in golden_records()}


def pool_examples(task: str) -> list[dict]:
    """(instruction, program) pairs for prompt pools, mirroring the records."""
    return [{"instruction": r.instruction, "program": r.program}
            for r in records_for(task)]


def write_dataset(task: str, directory: str) -> str:
    """Materialize scenes + dataset JSON for one task; returns dataset path."""
    os.makedirs(directory, exist_ok=True)
    scene_dir = os.path.join(directory, "scenes")
    os.makedirs(scene_dir, exist_ok=True)
    rows = []
    for record in records_for(task):
        refs = []
        for i, scene in enumerate(record.scenes):
            ref = os.path.join("scenes", f"{record.id}_{i}.json")
            with open(os.path.join(directory, ref), "w", encoding="utf-8") as f:
                json.dump(scene.to_json(), f, indent=1)
            refs.append(ref)
        row: dict = {"id": record.id, "images": refs,
                     "instruction": record.instruction}
        if record.group:
            row["group"] = record.group
        if task in ("qa", "pairqa"):
            row["gold"] = record.gold_answer
        elif task == "tagging":
            row["gold"] = [{"box": list(b.as_tuple()), "tag": t}
                           for b, t in record.gold_regions]
        rows.append(row)
    dataset = {"task": task, "records": rows, "knowledge": KNOWLEDGE}
    path = os.path.join(directory, f"{task}.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(dataset, f, indent=1)
    return path

"""Few-shot program generation.

A prompt is a task header plus k in-context (instruction, program) examples
plus the new instruction; the completion client returns program text, which
is trimmed at the first blank line and parsed.  Strategies: ``random`` draws
k examples without replacement with a seeded PRNG, ``curated`` uses a fixed
id list, ``voting`` runs generation+execution several times and takes the
plurality answer (the vote itself lives here; orchestration is the harness's
job).

Clients implement one method, complete(prompt) -> text.  ReplayClient maps
the prompt's final instruction to a canned completion (fixture files are
plain instruction -> completion JSON); ScriptedClient applies regex template
rules; RemoteClient posts to a real completion endpoint and stays out of the
test suite.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

from .dsl import Program, parse_program, render_program, validate
from .errors import (
    AllRunsFailed,
    ClientError,
    GenerationError,
    PoolTooSmall,
    ProgramParseError,
    EmptyProgramError,
    UnknownExampleId,
    VispipeError,
)
from .values import Value, ValueKind, norm_text

# ---------------------------------------------------------------------------
# Example pools and prompt specs


@dataclass(frozen=True)
class InContextExample:
    instruction: str
    program: str
    tags: tuple[str, ...] = ()

    def __post_init__(self):
        parse_program(self.program)  # pool entries must be well-formed


@dataclass(frozen=True)
class RandomStrategy:
    pass


@dataclass(frozen=True)
class CuratedStrategy:
    ids: tuple[int, ...]


@dataclass(frozen=True)
class VotingStrategy:
    runs: int = 5
    seeds: Optional[tuple[int, ...]] = None  # default: base_seed + run index

    def seed_for(self, run: int, base_seed: int) -> int:
        if self.seeds is not None:
            return self.seeds[run]
        return base_seed + run


Strategy = Union[RandomStrategy, CuratedStrategy, VotingStrategy]


@dataclass(frozen=True)
class PromptSpec:
    """Everything needed to build prompts for one task."""

    pool: tuple[InContextExample, ...]
    k: int
    strategy: Strategy = field(default_factory=RandomStrategy)
    header: str = ""
    header_vars: tuple[tuple[str, str], ...] = (("list_max", "20"),)

    def rendered_header(self) -> str:
        text = self.header
        for name, value in self.header_vars:
            text = text.replace("{" + name + "}", value)
        return text


def load_pool(path: str) -> tuple[InContextExample, ...]:
    """Example pool file: {"examples": [{"instruction", "program", "tags"?}]}"""
    with open(path, "r", encoding="utf-8") as f:
        data = json.load(f)
    return tuple(
        InContextExample(e["instruction"], e["program"], tuple(e.get("tags", ())))
        for e in data["examples"])


def _example_block(example: InContextExample) -> str:
    return f"Instruction: {example.instruction}\nProgram:\n{example.program.strip()}"


def pick_examples(spec: PromptSpec, seed: int) -> list[InContextExample]:
    if isinstance(spec.strategy, CuratedStrategy):
        picked = []
        for i in spec.strategy.ids:
            if not (0 <= i < len(spec.pool)):
                raise UnknownExampleId(f"example id {i} not in pool of "
                                       f"{len(spec.pool)}")
            picked.append(spec.pool[i])
        return picked
    if spec.k > len(spec.pool):
        raise PoolTooSmall(
            f"k={spec.k} exceeds pool size {len(spec.pool)}")
    rng = random.Random(seed)
    return rng.sample(list(spec.pool), spec.k)


def build_prompt(spec: PromptSpec, instruction: str, seed: int = 0) -> str:
    """Deterministic prompt text for (spec, instruction, seed)."""
    blocks = []
    header = spec.rendered_header().strip()
    if header:
        blocks.append(header)
    blocks.extend(_example_block(e) for e in pick_examples(spec, seed))
    blocks.append(f"Instruction: {instruction}\nProgram:")
    return "\n\n".join(blocks)


# ---------------------------------------------------------------------------
# Completion clients

_FINAL_INSTRUCTION_RE = re.compile(
    r"Instruction: (.*)\nProgram:\s*\Z", re.DOTALL)


class ReplayClient:
    """Replays canned completions keyed by the prompt's final instruction."""

    def __init__(self, completions: dict[str, str]):
        self.completions = dict(completions)

    @classmethod
    def load(cls, path: str) -> "ReplayClient":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return cls(data.get("completions", data))

    def complete(self, prompt: str) -> str:
        m = _FINAL_INSTRUCTION_RE.search(prompt)
        if not m:
            raise ClientError("prompt has no trailing instruction block")
        instruction = m.group(1).strip()
        if instruction not in self.completions:
            raise ClientError(f"no replay completion for instruction "
                              f"{instruction!r}")
        return self.completions[instruction]


@dataclass(frozen=True)
class ScriptRule:
    pattern: str
    template: str  # may use \1 … group references


class ScriptedClient:
    """First matching regex rule wins; groups substitute into the template."""

    def __init__(self, rules: Sequence[ScriptRule]):
        self.rules = list(rules)

    @classmethod
    def load(cls, path: str) -> "ScriptedClient":
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return cls([ScriptRule(r["pattern"], r["template"])
                    for r in data["rules"]])

    def complete(self, prompt: str) -> str:
        m = _FINAL_INSTRUCTION_RE.search(prompt)
        if not m:
            raise ClientError("prompt has no trailing instruction block")
        instruction = m.group(1).strip()
        for rule in self.rules:
            match = re.search(rule.pattern, instruction)
            if match:
                return match.expand(rule.template)
        raise ClientError(f"no scripted rule matches {instruction!r}")


class RemoteClient:
    """POSTs {"prompt": ...} to a completion endpoint; not used in tests."""

    def __init__(self, endpoint: str, api_key: Optional[str] = None,
                 client=None, timeout: float = 60.0):
        import httpx

        self.endpoint = endpoint
        self.api_key = api_key
        self.client = client or httpx.Client(timeout=timeout)

    def complete(self, prompt: str) -> str:
        headers = {}
        if self.api_key:
            headers["authorization"] = f"Bearer {self.api_key}"
        resp = self.client.post(self.endpoint, json={"prompt": prompt},
                                headers=headers)
        if resp.status_code != 200:
            raise ClientError(f"completion endpoint returned {resp.status_code}")
        return resp.json()["completion"]


# ---------------------------------------------------------------------------
# Generation


def trim_completion(text: str) -> str:
    """Keep everything before the first blank line (models often append
    prose after the program)."""
    lines = []
    for line in text.strip("\n").split("\n"):
        if not line.strip():
            break
        lines.append(line)
    return "\n".join(lines)


def generate_program(spec: PromptSpec, instruction: str, client,
                     seed: int = 0, registry=None,
                     inputs: Sequence[str] = ()) -> Program:
    """Prompt the client and parse its completion into a Program.

    When a registry is given the program is also validated, so nothing
    syntactically fine but semantically broken slips through to execution.
    """
    prompt = build_prompt(spec, instruction, seed)
    try:
        completion = client.complete(prompt)
    except ClientError:
        raise
    except Exception as e:  # client implementations may fail arbitrarily
        raise ClientError(f"completion client failed: {e}") from e
    trimmed = trim_completion(completion)
    try:
        program = parse_program(trimmed)
    except (ProgramParseError, EmptyProgramError) as e:
        raise GenerationError(f"completion is not a valid program: {e}",
                              raw_completion=completion) from e
    if registry is not None:
        report = validate(program, registry, list(inputs))
        if not report.ok:
            raise GenerationError(
                "generated program failed validation: "
                + "; ".join(i.message for i in report.issues),
                raw_completion=completion)
    return program


# ---------------------------------------------------------------------------
# Voting


def vote_key(value: Value):
    if value.kind is ValueKind.TEXT:
        return ("text", norm_text(value.data))
    if value.kind is ValueKind.IMAGE:
        return ("image", value.data.content_hash)
    if value.kind is ValueKind.BOX:
        return ("box", value.data.as_tuple())
    if value.kind is ValueKind.OBJECT_LIST:
        return ("object_list",
                tuple((r.box.as_tuple(), r.tag, r.category)
                      for r in value.as_object_list()))
    if value.kind is ValueKind.TEXT_LIST:
        return ("text_list", tuple(norm_text(t) for t in value.as_text_list()))
    return (value.kind.value, value.data)


def vote(results: Sequence[Optional[Value]]) -> Value:
    """Plurality answer across runs; failed runs (None) are excluded and ties
    break toward the earliest first occurrence."""
    counts: dict = {}
    order: dict = {}
    originals: dict = {}
    for i, value in enumerate(results):
        if value is None:
            continue
        key = vote_key(value)
        counts[key] = counts.get(key, 0) + 1
        if key not in order:
            order[key] = i
            originals[key] = value
    if not counts:
        raise AllRunsFailed("every run failed; nothing to vote on")
    winner = min(counts, key=lambda k: (-counts[k], order[k]))
    return originals[winner]

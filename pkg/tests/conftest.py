from __future__ import annotations

import pytest

from vispipe.backends import ProceduralBackend
from vispipe.registry import default_registry
from vispipe.values import Value

from golden_suite import KNOWLEDGE, golden_records


@pytest.fixture(scope="session")
def registry():
    return default_registry()


class GoldenEnv:
    """Procedural backend with every golden scene registered, plus the
    rendered inputs keyed by record id."""

    def __init__(self):
        self.backend = ProceduralBackend(knowledge=KNOWLEDGE)
        self.records = golden_records()
        self.inputs: dict[str, dict[str, Value]] = {}
        for record in self.records:
            images = [self.backend.add_scene(s) for s in record.scenes]
            if len(images) == 2:
                self.inputs[record.id] = {"LEFT": Value.image(images[0]),
                                          "RIGHT": Value.image(images[1])}
            else:
                self.inputs[record.id] = {"IMAGE": Value.image(images[0])}

    def record(self, record_id: str):
        return next(r for r in self.records if r.id == record_id)


@pytest.fixture()
def golden_env():
    return GoldenEnv()

from __future__ import annotations

import pytest

from agenttrace.canonical import canonical_serialize
from agenttrace.store import Store


@pytest.fixture
def store(tmp_path):
    with Store(tmp_path / "data") as s:
        yield s


@pytest.fixture
def record_lines():
    def _lines(records) -> str:
        return "".join(canonical_serialize(r) + "\n" for r in records)

    return _lines

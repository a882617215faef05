"""Dataset record types shared by the transform and pipeline stages.

The JSONL wire fields are fixed: {id, origin, iteration, image_sha256,
image_path, code_sha256, code_path, score, render_status, model,
created_at}; instruction records add {instruction, judge_score,
annotator_model, judge_model}.  In-memory payloads (decoded image, code
text) ride along but never serialize.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .images import RasterImage

SAMPLE_FIELDS = (
    "id",
    "origin",
    "iteration",
    "image_sha256",
    "image_path",
    "code_sha256",
    "code_path",
    "score",
    "render_status",
    "model",
    "created_at",
)

INSTRUCT_FIELDS = SAMPLE_FIELDS + (
    "instruction",
    "judge_score",
    "annotator_model",
    "judge_model",
)


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


@dataclass
class SamplePair:
    """One (image, code) pair with provenance."""

    id: str
    origin: str  # seed | candidate | refined | transformed | instruct
    iteration: int
    image_sha256: str
    image_path: str
    code_sha256: str
    code_path: str
    score: float | None = None
    render_status: str = ""
    model: str = ""
    created_at: str = ""
    # payloads, not serialized
    image: RasterImage | None = field(default=None, repr=False, compare=False)
    code: str | None = field(default=None, repr=False, compare=False)

    def to_json(self) -> str:
        rec = {k: getattr(self, k) for k in SAMPLE_FIELDS}
        return json.dumps(rec, sort_keys=True)

    @classmethod
    def from_dict(cls, rec: dict) -> "SamplePair":
        return cls(**{k: rec.get(k) for k in SAMPLE_FIELDS})


@dataclass
class InstructRecord(SamplePair):
    """Instruction triple: edit text, post-transform image, pre-transform code."""

    instruction: str = ""
    judge_score: float = 0.0
    annotator_model: str = ""
    judge_model: str = ""

    def to_json(self) -> str:
        rec = {k: getattr(self, k) for k in INSTRUCT_FIELDS}
        return json.dumps(rec, sort_keys=True)

    @classmethod
    def from_dict(cls, rec: dict) -> "InstructRecord":
        return cls(**{k: rec.get(k) for k in INSTRUCT_FIELDS if k in rec})

"""Inference client interfaces: HTTP-style backend and scripted mocks.

Every neural-model role (image-to-tikz, instruct editing, general VLM,
general LLM, judge) goes through the same interface so the whole
pipeline runs with scripted mocks substituted.  Decoding defaults to
greedy, temperature 0.
"""

from __future__ import annotations

import hashlib
import json
import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path

import requests

from ..errors import ClientError
from ..images import RasterImage

ROLES = ("image_to_tikz", "instruct", "vlm", "llm", "judge")

GREEDY = {"strategy": "greedy", "temperature": 0.0}


@dataclass
class PromptPart:
    kind: str  # "text" | "image"
    text: str = ""
    image: RasterImage | None = None
    image_ref: str = ""

    @classmethod
    def of_text(cls, text: str) -> "PromptPart":
        return cls(kind="text", text=text)

    @classmethod
    def of_image(cls, image: RasterImage, ref: str = "") -> "PromptPart":
        return cls(kind="image", image=image, image_ref=ref)


class InferenceClient(ABC):
    role: str = ""
    model_name: str = ""

    def __init__(self, role: str, model_name: str, decoding: dict | None = None):
        self.role = role
        self.model_name = model_name
        self.decoding = dict(GREEDY if decoding is None else decoding)
        self.calls = 0

    @abstractmethod
    def _generate(self, parts: list[PromptPart]) -> str: ...

    def generate(self, parts: list[PromptPart]) -> str:
        self.calls += 1
        return self._generate(parts)


class HttpInferenceClient(InferenceClient):
    """POSTs {role, parts, decoding} as JSON; expects {"text": ...} back."""

    def __init__(self, role: str, endpoint: str, model_name: str = "", timeout_s: float = 60.0, decoding=None):
        super().__init__(role, model_name or endpoint, decoding)
        self.endpoint = endpoint
        self.timeout_s = timeout_s

    def _generate(self, parts: list[PromptPart]) -> str:
        import base64

        payload = {
            "role": self.role,
            "model": self.model_name,
            "decoding": self.decoding,
            "parts": [
                {"kind": "text", "text": p.text}
                if p.kind == "text"
                else {
                    "kind": "image",
                    "image_b64": base64.b64encode(p.image.to_png_bytes()).decode("ascii")
                    if p.image is not None
                    else "",
                    "image_ref": p.image_ref,
                }
                for p in parts
            ],
        }
        try:
            resp = requests.post(self.endpoint, json=payload, timeout=self.timeout_s)
            resp.raise_for_status()
            body = resp.json()
        except requests.RequestException as exc:
            raise ClientError(f"{self.role} call failed: {exc}") from exc
        if "text" not in body:
            raise ClientError(f"{self.role} response missing 'text'")
        return str(body["text"])


def image_key(image: RasterImage) -> str:
    return hashlib.sha256(image.to_png_bytes()).hexdigest()


class ScriptedMockClient(InferenceClient):
    """Deterministic stand-in driven by a fixture.

    Lookup order: image-hash table (for image-conditioned roles), then a
    consumable response sequence, then a default template.  The default
    may reference {image_sha} and {text_sha} of the request.
    """

    def __init__(
        self,
        role: str,
        by_image_sha: dict[str, str] | None = None,
        sequence: list[str] | None = None,
        default: str = "",
        model_name: str = "",
    ):
        super().__init__(role, model_name or f"mock-{role}")
        self.by_image_sha = dict(by_image_sha or {})
        self.sequence = list(sequence or [])
        self._cursor = 0
        self.default = default
        self.requests_log: list[list[str]] = []

    @classmethod
    def from_fixture(cls, role: str, path: str | Path) -> "ScriptedMockClient":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        spec = data.get(role, data)
        return cls(
            role,
            by_image_sha=spec.get("by_image_sha"),
            sequence=spec.get("sequence"),
            default=spec.get("default", ""),
            model_name=spec.get("model_name", ""),
        )

    def _generate(self, parts: list[PromptPart]) -> str:
        self.requests_log.append([p.kind for p in parts])
        image_sha = ""
        text_sha = hashlib.sha256(
            "\n".join(p.text for p in parts if p.kind == "text").encode()
        ).hexdigest()
        for part in parts:
            if part.kind == "image" and part.image is not None:
                image_sha = image_key(part.image)
                if image_sha in self.by_image_sha:
                    return self.by_image_sha[image_sha]
        if self._cursor < len(self.sequence):
            value = self.sequence[self._cursor]
            self._cursor += 1
            return value
        if self.default:
            # plain replacement: the default may itself contain TikZ braces
            return self.default.replace("{image_sha}", image_sha or "none").replace(
                "{text_sha}", text_sha
            )
        raise ClientError(f"mock {self.role}: no scripted response left")


class MockJudge(ScriptedMockClient):
    """Deterministic 1-10 score derived from the judged content."""

    def __init__(self, spread: int = 5, base: int = 6):
        super().__init__("judge", model_name="mock-judge")
        self.spread = spread
        self.base = base

    def _generate(self, parts: list[PromptPart]) -> str:
        self.requests_log.append([p.kind for p in parts])
        text = "\n".join(p.text for p in parts if p.kind == "text")
        digest = int(hashlib.sha256(text.encode()).hexdigest(), 16)
        return str(self.base + digest % self.spread)


def parse_judge_score(text: str) -> float:
    """First number in a judge reply, clamped to [0, 10]."""
    m = re.search(r"-?\d+(?:\.\d+)?", text)
    if not m:
        raise ClientError(f"judge reply has no score: {text[:80]!r}")
    return max(0.0, min(10.0, float(m.group(0))))

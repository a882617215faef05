"""Training-free reasoning flows built on translated and edited TikZ.

``solve_with_tikz``: translate the problem image to code, then hand the
problem text plus code (plus the image, in VLM mode only) to a reasoner.

``solve_with_auxiliary``: ask the VLM whether auxiliary construction
lines help; on a None verdict solve directly, otherwise have the
instruct model edit the code, render it, and solve with both the edited
image and its code attached.  An instruct output that will not render
gets one retry, then the no-auxiliary path with a fallback flag.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..images import RasterImage
from ..repair import repair
from .clients import InferenceClient, PromptPart
from .instruct import load_prompt

NONE_SENTINEL_PATTERN = r"(?i)^\s*none\s*[.!]?\s*$"


@dataclass
class ReasoningContext:
    problem_text: str
    problem_image: RasterImage
    prompt_instruction: str = ""  # template asking for auxiliary lines
    prompt_solve: str = ""  # template asking for the solution
    aux_instruction: str | None = None
    aux_code: str | None = None
    aux_image: RasterImage | None = None
    answer: str | None = None

    def __post_init__(self):
        if not self.prompt_instruction:
            self.prompt_instruction = load_prompt("aux_instruction_prompt.txt")
        if not self.prompt_solve:
            self.prompt_solve = load_prompt("problem_solving_prompt.txt")


@dataclass
class ReasoningOutcome:
    answer: str
    prompt_parts: list[PromptPart]
    used_auxiliary: bool = False
    fallback: bool = False
    translated_code: str | None = None


def is_none_sentinel(text: str, pattern: str = NONE_SENTINEL_PATTERN) -> bool:
    return re.match(pattern, text) is not None


def solve_with_tikz(
    problem: ReasoningContext,
    base_model: InferenceClient,
    reasoner: InferenceClient,
    mode: str,
) -> ReasoningOutcome:
    """Translate image to code, then reason over text+code (+image for VLMs)."""
    if mode not in ("vlm", "llm"):
        raise ValueError(f"mode must be 'vlm' or 'llm', got {mode!r}")
    raw = base_model.generate(
        [
            PromptPart.of_text("Write TikZ code reproducing this diagram."),
            PromptPart.of_image(problem.problem_image),
        ]
    )
    code, _ = repair(raw)
    parts = [
        PromptPart.of_text(problem.prompt_solve),
        PromptPart.of_text(problem.problem_text),
        PromptPart.of_text(code),
    ]
    if mode == "vlm":
        parts.append(PromptPart.of_image(problem.problem_image))
    answer = reasoner.generate(parts)
    return ReasoningOutcome(answer=answer, prompt_parts=parts, translated_code=code)


def solve_with_auxiliary(
    problem: ReasoningContext,
    vlm: InferenceClient,
    instruct_model: InferenceClient,
    renderer,
    none_pattern: str = NONE_SENTINEL_PATTERN,
) -> ReasoningOutcome:
    """Auxiliary-line reasoning; see module docstring for the flow."""
    aux_request = vlm.generate(
        [
            PromptPart.of_image(problem.problem_image),
            PromptPart.of_text(problem.problem_text),
            PromptPart.of_text(problem.prompt_instruction),
        ]
    )
    if is_none_sentinel(aux_request, none_pattern):
        parts = [
            PromptPart.of_image(problem.problem_image),
            PromptPart.of_text(problem.problem_text),
            PromptPart.of_text(problem.prompt_solve),
        ]
        return ReasoningOutcome(answer=vlm.generate(parts), prompt_parts=parts)

    problem.aux_instruction = aux_request
    aux_code = None
    aux_image = None
    for _ in range(2):  # one retry on render failure
        raw = instruct_model.generate(
            [
                PromptPart.of_image(problem.problem_image),
                PromptPart.of_text(aux_request),
            ]
        )
        candidate, _ = repair(raw)
        result = renderer.render(candidate)
        if result.ok:
            aux_code = candidate
            aux_image = result.image
            break
    if aux_code is None:
        parts = [
            PromptPart.of_image(problem.problem_image),
            PromptPart.of_text(problem.problem_text),
            PromptPart.of_text(problem.prompt_solve),
        ]
        return ReasoningOutcome(
            answer=vlm.generate(parts), prompt_parts=parts, fallback=True
        )

    problem.aux_code = aux_code
    problem.aux_image = aux_image
    parts = [
        PromptPart.of_text(problem.problem_text),
        PromptPart.of_image(problem.problem_image),
        PromptPart.of_text(problem.prompt_solve),
        PromptPart.of_image(aux_image),
        PromptPart.of_text(aux_code),
    ]
    return ReasoningOutcome(
        answer=vlm.generate(parts), prompt_parts=parts, used_auxiliary=True
    )

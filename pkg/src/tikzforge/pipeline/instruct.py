"""Instruction-dataset construction.

For every (image, code) pair in the final training set: transform the
code, render the transformed variant, have an annotator model describe
the edit, and keep triples the judge scores at or above the acceptance
threshold.  The stored triple pairs the annotated instruction with the
POST-transform image and the PRE-transform code: the model being taught
must reconstruct the original from the edited view.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources

from ..document import parse_document
from ..errors import TooFewStatements
from ..records import InstructRecord
from ..transform import remove_statements
from .clients import InferenceClient, PromptPart, parse_judge_score
from .manifest import DatasetManifest
from .refine import RunRoot

DEFAULT_JUDGE_THRESHOLD = 8.0


def load_prompt(name: str) -> str:
    return resources.files("tikzforge.assets").joinpath(name).read_text(encoding="utf-8")


@dataclass
class InstructStats:
    sources: int = 0
    accepted: int = 0
    dropped_render: int = 0
    dropped_judge: int = 0
    failures: int = 0


def build_instruct_dataset(
    root: RunRoot,
    final: DatasetManifest,
    annotator: InferenceClient,
    judge: InferenceClient,
    renderer,
    seed: int,
    threshold: float = DEFAULT_JUDGE_THRESHOLD,
    max_fraction: float = 0.4,
    snapshot: dict | None = None,
    clock=None,
    annotator_template: str | None = None,
    judge_template: str | None = None,
) -> tuple[DatasetManifest, InstructStats]:
    stats = InstructStats()
    annotator_template = annotator_template or load_prompt("annotator_prompt.txt")
    judge_template = judge_template or load_prompt("judge_prompt.txt")
    manifest = DatasetManifest(
        name="instruct",
        path=root.manifest_path("instruct"),
        parent_refs=[str(final.path)],
        config_snapshot={
            **(snapshot or {}),
            "judge_threshold": threshold,
            "annotator_model": annotator.model_name,
            "judge_model": judge.model_name,
        },
        clock=clock,
    ).open()

    for entry in final.entries:
        if not entry.code_path:
            continue
        stats.sources += 1
        try:
            original_code = root.read_code(entry.code_path)
            sub_seed = int(
                hashlib.sha256(f"ins:{seed}:{entry.code_sha256}".encode()).hexdigest()[:12],
                16,
            )
            try:
                outcome = remove_statements(
                    parse_document(original_code), sub_seed, max_fraction
                )
            except TooFewStatements:
                continue
            result = renderer.render(outcome.result_code)
            if not result.ok:
                stats.dropped_render += 1
                continue
            transformed_image = result.image

            instruction = annotator.generate(
                [
                    PromptPart.of_text(
                        annotator_template.format(original_code=original_code)
                    ),
                    PromptPart.of_image(transformed_image),
                ]
            ).strip()
            verdict = judge.generate(
                [
                    PromptPart.of_text(
                        judge_template.format(
                            instruction=instruction,
                            original_code=original_code,
                            transformed_code=outcome.result_code,
                        )
                    ),
                    PromptPart.of_image(transformed_image),
                ]
            )
            score = parse_judge_score(verdict)
            if score < threshold:
                stats.dropped_judge += 1
                continue

            image_sha, image_rel = root.write_image(transformed_image)
            triple_id = hashlib.sha256(
                f"{instruction}:{entry.code_sha256}:{image_sha}".encode()
            ).hexdigest()[:24]
            manifest.append(
                InstructRecord(
                    id=f"ins-{triple_id}",
                    origin="instruct",
                    iteration=entry.iteration,
                    image_sha256=image_sha,
                    image_path=image_rel,
                    code_sha256=entry.code_sha256,  # pre-transform target
                    code_path=entry.code_path,
                    render_status=result.status.value,
                    instruction=instruction,
                    judge_score=score,
                    annotator_model=annotator.model_name,
                    judge_model=judge.model_name,
                )
            )
            stats.accepted += 1
        except Exception as exc:
            from ..errors import RenderUnavailable, ToolchainMissing

            if isinstance(exc, (ToolchainMissing, RenderUnavailable)):
                raise
            stats.failures += 1
    manifest.close()
    return manifest, stats

"""Multi-iteration refine-loop driver.

Runs the candidate -> refined -> transformed -> union cycle for a number
of iterations against one run root.  Candidates accepted in an earlier
iteration are not re-offered; rejected ones are.  Model training between
iterations is external: the caller supplies (or keeps) the model client
per iteration, and each union emits a training export for that step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .clients import InferenceClient
from .manifest import DatasetManifest
from .refine import (
    RunRoot,
    advance_iteration,
    build_refined_set,
    build_transform_set,
)


@dataclass
class LoopSummary:
    iterations: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"iterations": self.iterations}


def run_refine_loop(
    root: RunRoot,
    candidates: DatasetManifest,
    model: InferenceClient,
    embedder,
    renderer,
    iterations: int,
    tau: float = 0.8,
    max_iterations: int = 4,
    seed: int = 0,
    variants_per_sample: int = 2,
    max_fraction: float = 0.4,
    snapshot: dict | None = None,
    clock=None,
    seed_manifest: DatasetManifest | None = None,
) -> tuple[DatasetManifest, LoopSummary]:
    """Run ``iterations`` refine cycles; returns (final manifest, summary)."""
    summary = LoopSummary()
    if seed_manifest is None:
        previous = DatasetManifest(
            "d0", root.manifest_path("d0"), config_snapshot=snapshot or {}, clock=clock
        ).open()
        previous.close()
    else:
        previous = seed_manifest

    accepted_images: set[str] = set()
    for k in range(1, iterations + 1):
        refined, rstats = build_refined_set(
            root,
            candidates,
            model,
            embedder,
            renderer,
            tau=tau,
            iteration=k,
            snapshot=snapshot,
            clock=clock,
            skip_image_shas=set(accepted_images),
        )
        # re-offer only candidates every earlier model rejected
        accepted_images.update(rstats.accepted_candidates)
        transformed, tstats = build_transform_set(
            root,
            refined,
            renderer,
            seed=seed + k,
            iteration=k,
            count_per_sample=variants_per_sample,
            max_fraction=max_fraction,
            snapshot=snapshot,
            clock=clock,
        )
        training = advance_iteration(
            root,
            k,
            max_iterations,
            previous,
            refined,
            transformed,
            model_id=model.model_name,
            snapshot=snapshot,
            clock=clock,
        )
        summary.iterations.append(
            {
                "k": k,
                "candidates_offered": rstats.candidates,
                "refined": len(refined),
                "transformed": len(transformed),
                "training": len(training),
                "dropped_render": rstats.dropped_render,
                "dropped_score": rstats.dropped_score,
                "failures": rstats.failures,
            }
        )
        previous = training
    return previous, summary

from .clients import (
    HttpInferenceClient,
    InferenceClient,
    MockJudge,
    PromptPart,
    ScriptedMockClient,
)
from .instruct import build_instruct_dataset
from .manifest import DatasetManifest, fixed_clock, union_manifests, utc_clock
from .reasoning import ReasoningContext, solve_with_auxiliary, solve_with_tikz
from .refine import (
    RunRoot,
    advance_iteration,
    build_candidates_from_pool,
    build_refined_set,
    build_transform_set,
    ingest_candidates,
    seed_manifest_from_pairs,
)

__all__ = [
    "HttpInferenceClient",
    "InferenceClient",
    "MockJudge",
    "PromptPart",
    "ScriptedMockClient",
    "DatasetManifest",
    "fixed_clock",
    "union_manifests",
    "utc_clock",
    "ReasoningContext",
    "solve_with_auxiliary",
    "solve_with_tikz",
    "RunRoot",
    "advance_iteration",
    "build_candidates_from_pool",
    "build_refined_set",
    "build_transform_set",
    "ingest_candidates",
    "seed_manifest_from_pairs",
    "build_instruct_dataset",
]

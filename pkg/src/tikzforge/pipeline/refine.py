"""Iterative self-refinement: candidate scoring, transform growth, unions.

One run root holds payload files (images/, codes/), stage manifests
(manifests/), and per-iteration training exports (exports/).  Paths in
manifests are root-relative so reruns into different directories emit
byte-identical manifest files.

Per-sample failures (model output that will not compile, scores at or
under the threshold) become counters; only infrastructure faults abort.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from ..document import parse_document
from ..errors import IterationLimitExceeded, MissingParentManifest, TooFewStatements
from ..images import RasterImage
from ..records import SamplePair, sha256_bytes, sha256_text
from ..repair import repair
from ..transform import generate_variants
from .clients import InferenceClient, PromptPart
from .manifest import DatasetManifest, union_manifests


@dataclass
class RefineStats:
    candidates: int = 0
    accepted: int = 0
    dropped_render: int = 0
    dropped_score: int = 0
    failures: int = 0
    accepted_candidates: set = field(default_factory=set)  # candidate image shas


@dataclass
class TransformStats:
    sources: int = 0
    produced: int = 0
    dropped_compile: int = 0
    dropped_blank: int = 0
    dropped_duplicate: int = 0


class RunRoot:
    """Directory layout for one pipeline run."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        for sub in ("images", "codes", "manifests", "exports"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    def write_image(self, image: RasterImage) -> tuple[str, str]:
        png = image.to_png_bytes()
        sha = sha256_bytes(png)
        rel = f"images/{sha}.png"
        path = self.root / rel
        if not path.exists():
            path.write_bytes(png)
        return sha, rel

    def write_code(self, code: str) -> tuple[str, str]:
        sha = sha256_text(code)
        rel = f"codes/{sha}.tikz"
        path = self.root / rel
        if not path.exists():
            path.write_text(code, encoding="utf-8")
        return sha, rel

    def read_image(self, rel: str) -> RasterImage:
        return RasterImage.from_file(self.root / rel)

    def read_code(self, rel: str) -> str:
        return (self.root / rel).read_text(encoding="utf-8")

    def manifest_path(self, name: str) -> Path:
        return self.root / "manifests" / f"{name}.jsonl"


def build_candidates_from_pool(
    root: RunRoot,
    pool: list[RasterImage],
    snapshot: dict | None = None,
    clock=None,
    source: str = "synthetic",
) -> DatasetManifest:
    """Candidate manifest from in-memory images (image-only entries)."""
    manifest = DatasetManifest(
        name="candidates",
        path=root.manifest_path("candidates"),
        config_snapshot={**(snapshot or {}), "source": source},
        clock=clock,
    ).open()
    for image in pool:
        sha, rel = root.write_image(image)
        manifest.append(
            SamplePair(
                id=f"cand-{sha[:24]}",
                origin="candidate",
                iteration=0,
                image_sha256=sha,
                image_path=rel,
                code_sha256="",
                code_path="",
            )
        )
    manifest.close()
    return manifest


def ingest_candidates(
    root: RunRoot,
    image_dirs: list[str | Path],
    source: str = "external",
    snapshot: dict | None = None,
    clock=None,
) -> DatasetManifest:
    """Candidate manifest from directories of PNG images."""
    images = []
    for d in image_dirs:
        for path in sorted(Path(d).glob("**/*.png")):
            images.append(RasterImage.from_file(path))
    return build_candidates_from_pool(root, images, snapshot, clock, source=source)


def build_refined_set(
    root: RunRoot,
    candidates: DatasetManifest,
    model: InferenceClient,
    embedder,
    renderer,
    tau: float,
    iteration: int,
    snapshot: dict | None = None,
    clock=None,
    skip_image_shas: set[str] | None = None,
) -> tuple[DatasetManifest, RefineStats]:
    """Keep (rendered image, predicted code) pairs scoring above tau.

    Every candidate image goes through: model prediction, repair, render,
    similarity against the original.  Accepted entries store the rendered
    image, not the candidate.
    """
    stats = RefineStats()
    manifest = DatasetManifest(
        name=f"refined_{iteration}",
        path=root.manifest_path(f"refined_{iteration}"),
        parent_refs=[str(candidates.path)],
        config_snapshot={**(snapshot or {}), "tau": tau, "model": model.model_name},
        clock=clock,
    ).open()
    for cand in candidates.entries:
        if cand.origin != "candidate":
            continue
        if skip_image_shas and cand.image_sha256 in skip_image_shas:
            continue
        stats.candidates += 1
        try:
            original = root.read_image(cand.image_path)
            raw = model.generate(
                [
                    PromptPart.of_text("Write TikZ code reproducing this diagram."),
                    PromptPart.of_image(original, ref=cand.image_path),
                ]
            )
            code, _ = repair(raw)
            result = renderer.render(code)
            if not result.ok:
                stats.dropped_render += 1
                continue
            score = embedder.pair_score(original, result.image)
            if not score > tau:
                stats.dropped_score += 1
                continue
            code_sha, code_rel = root.write_code(code)
            image_sha, image_rel = root.write_image(result.image)
            manifest.append(
                SamplePair(
                    id=f"ref{iteration}-{code_sha[:24]}",
                    origin="refined",
                    iteration=iteration,
                    image_sha256=image_sha,
                    image_path=image_rel,
                    code_sha256=code_sha,
                    code_path=code_rel,
                    score=score,
                    render_status=result.status.value,
                    model=model.model_name,
                )
            )
            stats.accepted += 1
            stats.accepted_candidates.add(cand.image_sha256)
        except (MissingParentManifest, IterationLimitExceeded):
            raise
        except Exception as exc:
            from ..errors import RenderUnavailable, ToolchainMissing

            if isinstance(exc, (ToolchainMissing, RenderUnavailable)):
                raise
            stats.failures += 1
    manifest.close()
    return manifest, stats


def build_transform_set(
    root: RunRoot,
    refined: DatasetManifest,
    renderer,
    seed: int,
    iteration: int,
    count_per_sample: int = 2,
    max_fraction: float = 0.4,
    snapshot: dict | None = None,
    clock=None,
) -> tuple[DatasetManifest, TransformStats]:
    """Compilable statement-deletion variants of every refined code."""
    stats = TransformStats()
    manifest = DatasetManifest(
        name=f"transform_{iteration}",
        path=root.manifest_path(f"transform_{iteration}"),
        parent_refs=[str(refined.path)],
        config_snapshot={
            **(snapshot or {}),
            "seed": seed,
            "count_per_sample": count_per_sample,
            "max_fraction": max_fraction,
        },
        clock=clock,
    ).open()
    for entry in refined.entries:
        if not entry.code_path:
            continue
        stats.sources += 1
        code = root.read_code(entry.code_path)
        sub_seed = int(
            hashlib.sha256(f"{seed}:{entry.code_sha256}".encode()).hexdigest()[:12], 16
        )
        try:
            pairs, vstats = generate_variants(
                parse_document(code),
                seed=sub_seed,
                count=count_per_sample,
                renderer=renderer,
                max_fraction=max_fraction,
                iteration=iteration,
            )
        except TooFewStatements:
            continue
        stats.dropped_compile += vstats.dropped_compile
        stats.dropped_blank += vstats.dropped_blank
        stats.dropped_duplicate += vstats.dropped_duplicate
        for pair in pairs:
            code_sha, code_rel = root.write_code(pair.code)
            image_sha, image_rel = root.write_image(pair.image)
            added = manifest.append(
                SamplePair(
                    id=f"tf{iteration}-{code_sha[:24]}",
                    origin="transformed",
                    iteration=iteration,
                    image_sha256=image_sha,
                    image_path=image_rel,
                    code_sha256=code_sha,
                    code_path=code_rel,
                    render_status=pair.render_status,
                )
            )
            if added:
                stats.produced += 1
    manifest.close()
    return manifest, stats


def advance_iteration(
    root: RunRoot,
    k: int,
    max_iterations: int,
    previous: DatasetManifest,
    refined: DatasetManifest,
    transformed: DatasetManifest,
    model_id: str = "",
    snapshot: dict | None = None,
    clock=None,
) -> DatasetManifest:
    """D_k = dedup-union(D_{k-1}, refined, transformed) plus training export."""
    if k > max_iterations:
        raise IterationLimitExceeded(f"iteration {k} exceeds K={max_iterations}")
    training = union_manifests(
        name=f"d{k}",
        path=root.manifest_path(f"d{k}"),
        parents=[previous, refined, transformed],
        config_snapshot={**(snapshot or {}), "iteration": k, "model": model_id},
        clock=clock,
    )
    export = root.root / "exports" / f"train_{k}.jsonl"
    with open(export, "w", encoding="utf-8") as fh:
        import json

        for entry in training.entries:
            if not entry.code_path:
                continue
            fh.write(
                json.dumps(
                    {"image_path": entry.image_path, "code_path": entry.code_path},
                    sort_keys=True,
                )
                + "\n"
            )
    training.close()
    return training


def seed_manifest_from_pairs(
    root: RunRoot,
    pairs: list[tuple[str, RasterImage]],
    snapshot: dict | None = None,
    clock=None,
) -> DatasetManifest:
    """D_0 from known (code, image) pairs."""
    manifest = DatasetManifest(
        name="d0",
        path=root.manifest_path("d0"),
        config_snapshot=snapshot or {},
        clock=clock,
    ).open()
    for code, image in pairs:
        code_sha, code_rel = root.write_code(code)
        image_sha, image_rel = root.write_image(image)
        manifest.append(
            SamplePair(
                id=f"seed-{code_sha[:24]}",
                origin="seed",
                iteration=0,
                image_sha256=image_sha,
                image_path=image_rel,
                code_sha256=code_sha,
                code_path=code_rel,
                render_status="compiled_nonblank",
            )
        )
    manifest.close()
    return manifest

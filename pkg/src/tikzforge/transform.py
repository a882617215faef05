"""Localized code transformation: random statement deletion.

Creates fine-grained code/image variants by removing between 1 and
``floor(max_fraction * L)`` statements (at least one) from a document's
graphical environments, keeping surviving statements in order.  Variant
generation renders each candidate and keeps only those that compile to a
non-blank image.

Deletion operates on semicolon-delimited statements, never on physical
lines, and environment delimiters are never candidates.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass

from .document import TikzDocument, parse_document, serialize
from .errors import TooFewStatements
from .records import SamplePair, sha256_bytes, sha256_text

DEFAULT_MAX_FRACTION = 0.4


@dataclass(frozen=True)
class TransformOutcome:
    original_hash: str
    removed_indices: tuple[int, ...]
    result_code: str
    compilable: bool | None  # None until a render check ran
    seed: int


@dataclass
class VariantStats:
    requested: int = 0
    produced: int = 0
    dropped_compile: int = 0
    dropped_blank: int = 0
    dropped_duplicate: int = 0


def max_removals(statement_count: int, max_fraction: float = DEFAULT_MAX_FRACTION) -> int:
    """Upper bound on removals: at least 1 even for tiny documents."""
    return max(1, int(max_fraction * statement_count))


def remove_statements(
    doc: TikzDocument | str,
    seed: int,
    max_fraction: float = DEFAULT_MAX_FRACTION,
) -> TransformOutcome:
    """Delete a seeded random subset of graphical statements.

    Samples k uniformly from [1, max_removals(L)], then a uniform
    k-subset of statement indices.  Raises TooFewStatements when the
    document has fewer than 2 deletable statements.
    """
    if isinstance(doc, str):
        doc = parse_document(doc)
    statements = doc.graphical_statements()
    count = len(statements)
    if count < 2:
        raise TooFewStatements(f"need at least 2 statements, found {count}")
    rng = random.Random(seed)
    k = rng.randint(1, max_removals(count, max_fraction))
    removed = tuple(sorted(rng.sample(range(count), k)))
    text = doc.text
    for idx in reversed(removed):
        st = statements[idx]
        text = text[: st.char_start] + text[st.char_end :]
    return TransformOutcome(
        original_hash=doc.source_hash,
        removed_indices=removed,
        result_code=serialize(parse_document(text)),
        compilable=None,
        seed=seed,
    )


def generate_variants(
    doc: TikzDocument | str,
    seed: int,
    count: int,
    renderer,
    max_fraction: float = DEFAULT_MAX_FRACTION,
    iteration: int = 0,
) -> tuple[list[SamplePair], VariantStats]:
    """Produce up to ``count`` distinct compilable variants as sample pairs.

    The outcome set is fully determined by (doc, seed, count) before the
    render filter; per-variant compile failures and blanks become counters,
    never errors.  ``renderer`` is anything with a ``render(code)`` method
    returning a RenderResult.
    """
    if isinstance(doc, str):
        doc = parse_document(doc)
    stats = VariantStats(requested=count)
    base = random.Random(seed)
    sub_seeds = [base.getrandbits(32) for _ in range(count)]
    outcomes: list[TransformOutcome] = []
    seen_hashes: set[str] = set()
    for sub in sub_seeds:
        outcome = remove_statements(doc, sub, max_fraction)
        digest = sha256_text(outcome.result_code)
        if digest in seen_hashes:
            stats.dropped_duplicate += 1
            continue
        seen_hashes.add(digest)
        outcomes.append(outcome)

    pairs: list[SamplePair] = []
    for outcome in outcomes:
        result = renderer.render(outcome.result_code)
        if result.status.value == "compile_error" or result.status.value == "timeout":
            stats.dropped_compile += 1
            continue
        if result.status.value == "compiled_blank":
            stats.dropped_blank += 1
            continue
        code_sha = sha256_text(outcome.result_code)
        image_png = result.image.to_png_bytes()
        pairs.append(
            SamplePair(
                id=hashlib.sha256(
                    f"transformed:{iteration}:{code_sha}".encode()
                ).hexdigest()[:24],
                origin="transformed",
                iteration=iteration,
                image_sha256=sha256_bytes(image_png),
                image_path="",
                code_sha256=code_sha,
                code_path="",
                score=None,
                render_status=result.status.value,
                image=result.image,
                code=outcome.result_code,
            )
        )
        stats.produced += 1
    return pairs, stats

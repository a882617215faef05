"""Synthetic TikZ corpus generation and fault injection.

Generates small standalone geometric documents (lines, polygons,
circles, grids, labeled points, scopes, loops) for exercising the repair
suite, the transform suite, and pipeline dry-runs at desk scale.  The
corruptor injects exactly one fault of a named class per document.
"""

from __future__ import annotations

import random

FAULT_CLASSES = (
    "dup_package",
    "dup_line",
    "truncated_tail",
    "missing_env_end",
    "missing_end_document",
    "misplaced_draw",
)

_LABELS = "ABCDEFGHKLMNPQRSTUVXYZ"


def _point(rng: random.Random) -> str:
    return f"({rng.randint(-4, 8)},{rng.randint(-4, 8)})"


def _statement(rng: random.Random) -> str:
    kind = rng.randrange(7)
    if kind == 0:
        return f"\\draw {_point(rng)} -- {_point(rng)};"
    if kind == 1:
        return f"\\draw {_point(rng)} -- {_point(rng)} -- {_point(rng)} -- cycle;"
    if kind == 2:
        return f"\\draw {_point(rng)} circle ({rng.randint(1, 3)});"
    if kind == 3:
        return f"\\draw {_point(rng)} rectangle {_point(rng)};"
    if kind == 4:
        return f"\\fill {_point(rng)} circle (0.{rng.randint(1, 9)});"
    if kind == 5:
        return f"\\node at {_point(rng)} {{{rng.choice(_LABELS)}}};"
    return f"\\draw {_point(rng)} -- {_point(rng)} -- {_point(rng)};"


def generate_document(
    seed: int,
    min_statements: int = 3,
    max_statements: int = 12,
    allow_scope: bool = True,
    allow_foreach: bool = True,
) -> str:
    """One well-formed standalone document with a single tikzpicture."""
    rng = random.Random(seed)
    n = rng.randint(min_statements, max_statements)
    lines = [
        "\\documentclass[border=2pt]{standalone}",
        "\\usepackage{tikz}",
        "\\begin{document}",
        "\\begin{tikzpicture}",
    ]
    body: list[str] = [_statement(rng) for _ in range(n)]
    if allow_scope and rng.random() < 0.35 and n >= 4:
        k = rng.randint(1, max(1, n // 3))
        inner, body = body[:k], body[k:]
        body.append("\\begin{scope}")
        body.extend(inner)
        body.append("\\end{scope}")
    if allow_foreach and rng.random() < 0.3:
        upper = rng.randint(2, 4)
        body.append(
            f"\\foreach \\i in {{0,...,{upper}}} {{ \\draw (\\i,0) -- (\\i,1); }}"
        )
    lines.extend(body)
    lines.append("\\end{tikzpicture}")
    lines.append("\\end{document}")
    return "\n".join(lines)


def generate_corpus(seed: int, count: int, **kwargs) -> list[str]:
    rng = random.Random(seed)
    return [generate_document(rng.getrandbits(32), **kwargs) for _ in range(count)]


def corrupt(doc: str, fault: str, seed: int) -> str:
    """Inject one fault of the given class; returns the corrupted text."""
    rng = random.Random(seed)
    lines = doc.split("\n")
    if fault == "dup_package":
        idx = next(i for i, l in enumerate(lines) if "\\usepackage" in l)
        lines.insert(idx + 1, lines[idx])
    elif fault == "dup_line":
        candidates = [
            i
            for i, l in enumerate(lines)
            if l.strip().startswith(("\\draw", "\\fill", "\\node"))
        ]
        idx = rng.choice(candidates)
        lines.insert(idx + 1, lines[idx])
    elif fault == "truncated_tail":
        # cut the last content line: tail truncation mimics output that
        # stopped mid-line
        candidates = [
            i
            for i, l in enumerate(lines)
            if l.strip().startswith(("\\draw", "\\fill", "\\node", "\\foreach"))
        ]
        idx = candidates[-1]
        line = lines[idx].rstrip(";")
        cut = rng.randint(max(6, len(line) // 2), max(7, len(line) - 1))
        lines[idx] = line[:cut].rstrip()
    elif fault == "missing_env_end":
        ends = [
            i
            for i, l in enumerate(lines)
            if l.strip() in ("\\end{tikzpicture}", "\\end{scope}")
        ]
        del lines[rng.choice(ends)]
    elif fault == "missing_end_document":
        lines = [l for l in lines if l.strip() != "\\end{document}"]
    elif fault == "misplaced_draw":
        candidates = [
            i for i, l in enumerate(lines) if l.strip().startswith(("\\draw", "\\fill"))
        ]
        idx = rng.choice(candidates)
        moved = lines.pop(idx)
        end_doc = next(i for i, l in enumerate(lines) if "\\end{document}" in l)
        # drop it either between the picture and end of document, or after
        if rng.random() < 0.5:
            lines.insert(end_doc, moved)
        else:
            lines.append(moved)
    else:
        raise ValueError(f"unknown fault class {fault!r}")
    return "\n".join(lines)


def corrupted_corpus(seed: int, count: int) -> list[tuple[str, str, str]]:
    """(clean, fault_class, corrupted) triples cycling the fault classes."""
    docs = generate_corpus(seed, count)
    rng = random.Random(seed ^ 0x5EED)
    out = []
    for i, doc in enumerate(docs):
        fault = FAULT_CLASSES[i % len(FAULT_CLASSES)]
        out.append((doc, fault, corrupt(doc, fault, rng.getrandbits(32))))
    return out


def build_pool(seed: int, size: int, renderer) -> list[tuple[str, "RasterImage"]]:
    """Renderable (code, image) pairs for mock pipeline runs.

    Keeps generating until ``size`` documents have compiled to non-blank
    images; the paired code is what a perfect image-to-code model would
    answer for each image.
    """
    rng = random.Random(seed)
    pool = []
    attempts = 0
    while len(pool) < size and attempts < size * 10:
        attempts += 1
        code = generate_document(rng.getrandbits(32), min_statements=3, max_statements=9)
        result = renderer.render(code)
        if result.ok:
            pool.append((code, result.image))
    return pool

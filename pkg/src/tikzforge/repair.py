"""Six-pass post-processing that fixes common TikZ compilation faults.

Pass order is fixed: package dedup, block-aware line dedup, truncated-tail
removal, environment balancing, document-structure normalization, logical
refinement.  Every pass is conservative: it removes or relocates input
lines but never invents drawing commands.  The composite ``repair`` is
idempotent on its own output.

Each pass takes a parsed document and returns a fresh document plus a
report; passes communicate only through document text, so they can also
be used standalone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .document import (
    Statement,
    GRAPHICAL_ENVS,
    VERBATIM_ENVS,
    EnvironmentSpan,
    TikzDocument,
    _USEPACKAGE_RE,
    comment_mask,
    parse_document,
    serialize,
    split_statements,
    strip_comment,
)

# Commands that are only legal inside a graphical environment.  Used both
# for misplaced-command relocation and for loop-invariant hoisting.
REQUIRED_ENV_COMMANDS = frozenset(
    {"draw", "node", "fill", "filldraw", "path", "shade", "clip", "coordinate"}
)

_SYMBOL_ONLY = re.compile(r"^[{}\[\]();,%\s]*$")
_FIRST_COMMAND = re.compile(r"\\([a-zA-Z@]+)")
_FOREACH_RE = re.compile(r"\\foreach\b")
_LOOPVAR_RE = re.compile(r"\\([a-zA-Z]+)")


@dataclass
class RepairReport:
    pass_actions: list[tuple[str, str, int]] = field(default_factory=list)
    removed_lines: int = 0
    appended_ends: list[str] = field(default_factory=list)

    @property
    def changed(self) -> bool:
        return bool(self.pass_actions)

    def merge(self, other: "RepairReport") -> None:
        self.pass_actions.extend(other.pass_actions)
        self.removed_lines += other.removed_lines
        self.appended_ends.extend(other.appended_ends)


def _is_symbol_only(line: str) -> bool:
    return bool(_SYMBOL_ONLY.match(strip_comment(line)))


def _reparse(lines: list[str]) -> TikzDocument:
    return parse_document("\n".join(lines))


# ---------------------------------------------------------------------------
# pass 1: package deduplication


def dedupe_packages(doc: TikzDocument) -> tuple[TikzDocument, RepairReport]:
    """Keep the first ``\\usepackage`` declaration per package name.

    Dedup keys on the package name only; option brackets are ignored.  A
    declaration listing several packages survives if any of its names is
    new.
    """
    report = RepairReport()
    seen: set[str] = set()
    new_lines: list[str] = []
    for i, line in enumerate(doc.lines):
        code = strip_comment(line)
        drops: list[tuple[int, int]] = []
        for m in _USEPACKAGE_RE.finditer(code):
            names = [n.strip() for n in m.group(2).split(",") if n.strip()]
            if names and all(n in seen for n in names):
                drops.append((m.start(), m.end()))
                report.pass_actions.append(
                    ("dedupe_packages", f"removed duplicate usepackage {','.join(names)}", i)
                )
            else:
                seen.update(names)
        if not drops:
            new_lines.append(line)
            continue
        out = line
        for a, b in reversed(drops):
            out = out[:a] + out[b:]
        if out.strip() == "":
            report.removed_lines += 1
        else:
            new_lines.append(out.rstrip(" \t"))
    return _reparse(new_lines), report


# ---------------------------------------------------------------------------
# pass 2: block-aware line deduplication


@dataclass
class _ForeachBlock:
    header_start: int  # char offset of "\foreach"
    body_open: int  # char offset of the body "{"
    body_close: int  # char offset of the matching "}"
    loop_vars: list[str]


def _find_group(text: str, mask: bytearray, start: int) -> tuple[int, int] | None:
    """Char offsets (open, close) of the next balanced brace group."""
    n = len(text)
    i = start
    while i < n and (mask[i] or text[i] not in "{"):
        if not mask[i] and text[i] not in " \t\n":
            return None
        i += 1
    if i >= n:
        return None
    depth = 0
    for j in range(i, n):
        if mask[j]:
            continue
        if text[j] == "{":
            depth += 1
        elif text[j] == "}":
            depth -= 1
            if depth == 0:
                return i, j
    return None


def _foreach_blocks(text: str) -> list[_ForeachBlock]:
    mask = comment_mask(text)
    blocks: list[_ForeachBlock] = []
    for m in _FOREACH_RE.finditer(text):
        if mask[m.start()]:
            continue
        in_kw = re.compile(r"\bin\b").search(text, m.end())
        if not in_kw:
            continue
        loop_vars = [
            v.group(1)
            for v in _LOOPVAR_RE.finditer(text, m.end(), in_kw.start())
        ]
        list_group = _find_group(text, mask, in_kw.end())
        if not list_group:
            continue
        body_group = _find_group(text, mask, list_group[1] + 1)
        if not body_group:
            continue  # single-statement loop, nothing to scan
        blocks.append(
            _ForeachBlock(
                header_start=m.start(),
                body_open=body_group[0],
                body_close=body_group[1],
                loop_vars=loop_vars,
            )
        )
    return blocks


def _effective_end_line(doc: TikzDocument, span: EnvironmentSpan) -> int:
    # an unclosed environment runs to end-of-file, which is where the
    # balancing pass will append its end directive
    return span.end_line if span.end_line is not None else len(doc.lines)


def _innermost_env_block(doc: TikzDocument, lineno: int) -> int | None:
    best: int | None = None
    best_depth = -1
    for idx, span in enumerate(doc.env_spans):
        if span.begin_line is None:
            continue
        if span.begin_line < lineno < _effective_end_line(doc, span) and span.depth > best_depth:
            best = idx
            best_depth = span.depth
    return best


def dedupe_block_lines(doc: TikzDocument) -> tuple[TikzDocument, RepairReport]:
    """Remove repeated identical lines within each innermost block.

    A line's block is the deepest balanced environment containing it, or
    the innermost ``\\foreach`` body when one applies.  Environment
    delimiter lines, symbol-only lines, and blanks are never removed.
    """
    report = RepairReport()
    text = doc.text
    blocks = _foreach_blocks(text)
    offsets = [0]
    for ln in doc.lines[:-1]:
        offsets.append(offsets[-1] + len(ln) + 1)

    def block_key(lineno: int) -> tuple | None:
        start = offsets[lineno]
        end = start + len(doc.lines[lineno])
        inner = None
        for b in blocks:
            if b.body_open < start and end <= b.body_close:
                if inner is None or b.body_open > inner.body_open:
                    inner = b
        if inner is not None:
            return ("foreach", inner.body_open)
        env = _innermost_env_block(doc, lineno)
        return ("env", env) if env is not None else None

    seen: dict[tuple, set[str]] = {}
    keep: list[str] = []
    for i, line in enumerate(doc.lines):
        key = block_key(i)
        stripped = line.strip()
        removable = (
            key is not None
            and stripped != ""
            and not _is_symbol_only(line)
            and "\\begin" not in line
            and "\\end" not in line
            and "\\foreach" not in line
        )
        if removable:
            bucket = seen.setdefault(key, set())
            if stripped in bucket:
                report.pass_actions.append(
                    ("dedupe_block_lines", f"removed duplicate line: {stripped[:60]}", i)
                )
                report.removed_lines += 1
                continue
            bucket.add(stripped)
        keep.append(line)
    return _reparse(keep), report


# ---------------------------------------------------------------------------
# pass 3: truncated tail removal


def remove_truncated_tail(doc: TikzDocument) -> tuple[TikzDocument, RepairReport]:
    """Drop dangling incomplete lines before each ``\\end{tikzpicture}``.

    Removal repeats line by line (last non-symbol-only code line first)
    until the trailing statement of the picture is complete; a single
    truncated line, the common case, is removed in one step.
    """
    report = RepairReport()
    cur = doc
    # bounded by total line count; each round removes one line
    for _ in range(len(doc.lines) + 1):
        target = _find_truncated_line(cur)
        if target is None:
            break
        lineno, preview = target
        lines = list(cur.lines)
        del lines[lineno]
        report.pass_actions.append(
            ("remove_truncated_tail", f"removed incomplete line: {preview[:60]}", lineno)
        )
        report.removed_lines += 1
        cur = _reparse(lines)
    return cur, report


def _tail_is_complete_construct(text: str) -> bool:
    """A trailing balanced ``\\foreach {...}`` group is complete without a
    semicolon and must not be mistaken for a truncated fragment."""
    code = strip_all_comments(text).strip()
    if not code.startswith("\\foreach"):
        return False
    depth = 0
    prev = ""
    for ch in code:
        if ch in "{[" and prev != "\\":
            depth += 1
        elif ch in "}]" and prev != "\\":
            depth -= 1
            if depth < 0:
                return False
        prev = ch if prev != "\\" else ""
    return depth == 0 and code.endswith("}")


def _unclosed_body_end(doc: TikzDocument, span: EnvironmentSpan) -> int:
    """Where the body of an unclosed environment effectively stops.

    Truncated output runs to end-of-file, but when an ancestor's end
    directive (e.g. ``\\end{document}``) follows, the body stops there.
    """
    ancestors = {"document"}
    parent = span.parent
    while parent is not None:
        ancestors.add(doc.env_spans[parent].name)
        parent = doc.env_spans[parent].parent
    from .document import _END_RE

    for m in _END_RE.finditer(doc.text, span.inner_start):
        if m.group(1).strip() in ancestors:
            return m.start()
    return len(doc.text)


def _find_truncated_line(doc: TikzDocument) -> tuple[int, str] | None:
    for span in doc.env_spans:
        if span.name not in GRAPHICAL_ENVS or span.begin_line is None:
            continue
        if span.balanced:
            stmts = [s for s in doc.statements_of(span) if not s.is_blank]
        else:
            # truncated output usually loses the \end lines as well
            text = doc.text
            base = span.inner_start
            stop = _unclosed_body_end(doc, span)
            stmts = [
                Statement(
                    text=s.text,
                    line_span=(
                        doc.line_of_char(base + s.char_start),
                        doc.line_of_char(base + max(s.char_start, s.char_end - 1)),
                    ),
                    complete=s.complete,
                    char_start=base + s.char_start,
                    char_end=base + s.char_end,
                )
                for s in split_statements(text[base:stop])
                if not s.is_blank
            ]
        if not stmts or stmts[-1].complete:
            continue
        tail = stmts[-1]
        if _tail_is_complete_construct(tail.text):
            continue
        # the fragment usually starts with the newline that ends the
        # previous statement's line; that line holds no dangling content
        lead = len(tail.text) - len(tail.text.lstrip())
        if lead >= len(tail.text):
            continue
        first_content_line = doc.line_of_char(tail.char_start + lead)
        for lineno in range(tail.line_span[1], first_content_line - 1, -1):
            line = doc.lines[lineno]
            code = strip_comment(line)
            if code.strip() == "" or _is_symbol_only(line):
                continue
            if "\\begin" in code or "\\end" in code:
                continue
            return lineno, line.strip()
    return None


# ---------------------------------------------------------------------------
# pass 4: environment balancing


def balance_environments(doc: TikzDocument) -> tuple[TikzDocument, RepairReport]:
    """Close every open environment and drop surplus ``\\end`` markers.

    Missing end directives are synthesized in reverse order of opening;
    an ``\\end{X}`` matching a non-top stack entry closes the
    environments above it first.
    """
    report = RepairReport()
    text = doc.text
    mask = comment_mask(text)
    events: list[tuple[int, str, str, int]] = []  # (pos, kind, name, end_pos)
    for m in re.finditer(r"\\(begin|end)\s*\{([^{}]*)\}", text):
        if mask[m.start()]:
            continue
        events.append((m.start(), m.group(1), m.group(2).strip(), m.end()))

    stack: list[str] = []
    inserts: list[tuple[int, str]] = []  # (char pos, text to insert)
    deletes: list[tuple[int, int]] = []
    verbatim: str | None = None
    for pos, kind, name, end_pos in events:
        if verbatim is not None:
            if kind == "end" and name == verbatim:
                stack.pop()
                verbatim = None
            continue
        if kind == "begin":
            stack.append(name)
            if name in VERBATIM_ENVS:
                verbatim = name
        else:
            if name in stack:
                while stack and stack[-1] != name:
                    inner = stack.pop()
                    inserts.append((pos, f"\\end{{{inner}}}\n"))
                    report.appended_ends.append(inner)
                    report.pass_actions.append(
                        ("balance_environments", f"inserted missing end {inner}", doc.line_of_char(pos))
                    )
                stack.pop()
            else:
                deletes.append((pos, end_pos))
                report.pass_actions.append(
                    ("balance_environments", f"removed surplus end {name}", doc.line_of_char(pos))
                )
    tail_appends = []
    while stack:
        name = stack.pop()
        tail_appends.append(f"\\end{{{name}}}")
        report.appended_ends.append(name)
        report.pass_actions.append(
            ("balance_environments", f"appended missing end {name}", len(doc.lines) - 1)
        )

    # surplus-end deletions leave a sentinel so lines they empty out can
    # be dropped without disturbing lines that were already blank
    sentinel = "\x00"
    use_sentinel = sentinel not in text
    edits: list[tuple[int, int, str]] = [(p, p, t) for p, t in inserts]
    edits.extend((a, b, sentinel if use_sentinel else "") for a, b in deletes)
    new_text = _apply_edits(text, edits)
    if tail_appends:
        if new_text and not new_text.endswith("\n"):
            new_text += "\n"
        new_text += "\n".join(tail_appends)
    if use_sentinel and deletes:
        kept = []
        for ln in new_text.split("\n"):
            if sentinel in ln:
                ln = ln.replace(sentinel, "")
                if ln.strip() == "":
                    continue
            kept.append(ln)
        new_text = "\n".join(kept)
    return parse_document(new_text), report


def _apply_edits(text: str, edits: list[tuple[int, int, str]]) -> str:
    for a, b, repl in sorted(edits, key=lambda e: e[0], reverse=True):
        text = text[:a] + repl + text[b:]
    return text


# ---------------------------------------------------------------------------
# pass 5: document structure normalization


_PREAMBLE_DIRECTIVES = re.compile(
    r"\\(documentclass|usepackage|usetikzlibrary|usepgfplotslibrary|tikzset|"
    r"pgfplotsset|definecolor|newcommand|renewcommand|input|standaloneconfig)\b"
)


def normalize_document_structure(doc: TikzDocument) -> tuple[TikzDocument, RepairReport]:
    """Force exactly one ``document`` environment pair around the content.

    Graphical environments stranded outside the document scope are moved
    inside it; a missing ``\\end{document}`` is appended after trailing
    blank lines are removed.
    """
    report = RepairReport()
    cur = doc

    begins = [s for s in cur.env_spans if s.name == "document" and s.begin_line is not None]
    ends = [s for s in cur.env_spans if s.name == "document" and s.end_line is not None]

    if not begins:
        lines = list(cur.lines)
        insert_at = _first_content_line(lines)
        lines.insert(insert_at, "\\begin{document}")
        while lines and lines[-1].strip() == "":
            lines.pop()
        lines.append("\\end{document}")
        report.pass_actions.append(
            ("normalize_document_structure", "wrapped content in document environment", insert_at)
        )
        cur = _reparse(lines)
    else:
        if not ends:
            lines = list(cur.lines)
            while lines and lines[-1].strip() == "":
                lines.pop()
            lines.append("\\end{document}")
            report.pass_actions.append(
                ("normalize_document_structure", "appended missing end document", len(lines) - 1)
            )
            cur = _reparse(lines)
        cur, extra = _merge_document_pairs(cur)
        report.merge(extra)

    cur, moved = _relocate_outside_graphics(cur)
    report.merge(moved)
    return cur, report


def _first_content_line(lines: list[str]) -> int:
    last_preamble = -1
    for i, line in enumerate(lines):
        code = strip_comment(line).strip()
        if code == "":
            continue
        if _PREAMBLE_DIRECTIVES.match(code):
            last_preamble = i
            continue
        return i
    return last_preamble + 1


def _merge_document_pairs(doc: TikzDocument) -> tuple[TikzDocument, RepairReport]:
    report = RepairReport()
    text = doc.text
    mask = comment_mask(text)
    markers = [
        (m.start(), m.end(), m.group(1))
        for m in re.finditer(r"\\(begin|end)\s*\{document\}", text)
        if not mask[m.start()]
    ]
    begin_marks = [m for m in markers if m[2] == "begin"]
    end_marks = [m for m in markers if m[2] == "end"]
    if len(begin_marks) <= 1 and len(end_marks) <= 1:
        return doc, report
    drop = begin_marks[1:] + end_marks[:-1]
    for a, b, kind in drop:
        report.pass_actions.append(
            ("normalize_document_structure", f"removed extra {kind} document", doc.line_of_char(a))
        )
    new_text = _apply_edits(text, [(a, b, "") for a, b, _ in drop])
    return parse_document(new_text), report


def _relocate_outside_graphics(doc: TikzDocument) -> tuple[TikzDocument, RepairReport]:
    report = RepairReport()
    cur = doc
    for _ in range(len(doc.env_spans) + 1):
        moved = _relocate_one(cur, report)
        if moved is None:
            break
        cur = moved
    return cur, report


def _relocate_one(doc: TikzDocument, report: RepairReport) -> TikzDocument | None:
    doc_spans = [s for s in doc.env_spans if s.name == "document" and s.balanced]
    if not doc_spans:
        return None
    d = doc_spans[0]
    text = doc.text
    d_begin = doc._begin_marker_start(d)
    d_end = doc._end_marker_end(d)
    for span in doc.env_spans:
        if span.name not in GRAPHICAL_ENVS or not span.balanced:
            continue
        g_start = doc._begin_marker_start(span)
        g_end = doc._end_marker_end(span)
        inside = d_begin < g_start and g_end <= d_end
        if inside:
            continue
        chunk = text[g_start:g_end]
        if g_start >= d_end:  # after \end{document}: move before it
            without = text[:g_start] + text[g_end:]
            insert_at = without.rfind("\\end{document}")
            new_text = without[:insert_at] + chunk + "\n" + without[insert_at:]
        else:  # before \begin{document}: move right after it
            without = text[:g_start] + text[g_end:]
            m = re.search(r"\\begin\s*\{document\}", without)
            insert_at = m.end()
            new_text = without[:insert_at] + "\n" + chunk + without[insert_at:]
        report.pass_actions.append(
            (
                "normalize_document_structure",
                f"relocated {span.name} inside document",
                doc.line_of_char(g_start),
            )
        )
        return parse_document(new_text)
    return None


# ---------------------------------------------------------------------------
# pass 6: logical refinement


def refine_logic(
    doc: TikzDocument,
    env_commands: frozenset[str] = REQUIRED_ENV_COMMANDS,
) -> tuple[TikzDocument, RepairReport]:
    """Hoist loop-invariant commands and re-home misplaced drawing commands.

    A graphical statement inside a ``\\foreach`` body that references none
    of the loop's variables moves to just before the loop.  A drawing
    statement outside any graphical environment moves into the nearest
    preceding tikzpicture (or the first one when none precedes).  A move
    whose line already exists in the destination block is a plain delete.
    """
    report = RepairReport()
    cur = doc
    for _ in range(200):  # bounded fixpoint; each round applies one move
        nxt = _hoist_one_loop_invariant(cur, env_commands, report)
        if nxt is not None:
            cur = nxt
            continue
        nxt = _rehome_one_misplaced(cur, env_commands, report)
        if nxt is not None:
            cur = nxt
            continue
        break
    return cur, report


def _first_command(stmt_text: str) -> str | None:
    m = _FIRST_COMMAND.search(strip_all_comments(stmt_text))
    return m.group(1) if m else None


def strip_all_comments(text: str) -> str:
    mask = comment_mask(text)
    return "".join(c for c, m in zip(text, mask) if not m)


def _references_any(text: str, loop_vars: list[str]) -> bool:
    code = strip_all_comments(text)
    for var in loop_vars:
        if re.search(r"\\" + re.escape(var) + r"(?![a-zA-Z])", code):
            return True
    return False


def _line_set_of_block(doc: TikzDocument, lineno: int) -> set[str]:
    idx = _innermost_env_block(doc, lineno)
    if idx is None:
        return set()
    span = doc.env_spans[idx]
    return {
        doc.lines[i].strip()
        for i in range(span.begin_line + 1, _effective_end_line(doc, span))
    }


def _hoist_one_loop_invariant(
    doc: TikzDocument, env_commands: frozenset[str], report: RepairReport
) -> TikzDocument | None:
    text = doc.text
    blocks = _foreach_blocks(text)
    for block in blocks:
        body = text[block.body_open + 1 : block.body_close]
        inner = [
            b
            for b in blocks
            if b is not block and block.body_open < b.body_open < block.body_close
        ]
        for st in split_statements(body):
            if st.is_blank or not st.complete:
                continue
            abs_start = block.body_open + 1 + st.char_start
            abs_end = block.body_open + 1 + st.char_end
            if any(b.header_start <= abs_start < b.body_close + 1 for b in inner):
                continue  # belongs to a nested loop
            cmd = _first_command(st.text)
            if cmd is None or cmd not in env_commands:
                continue
            if _references_any(st.text, block.loop_vars):
                continue
            stmt_line = st.text.strip()
            header_line = doc.line_of_char(block.header_start)
            line_start = sum(len(l) + 1 for l in doc.lines[:header_line])
            dest_lines = _line_set_of_block(doc, header_line)
            without = text[:abs_start] + text[abs_end:]
            if stmt_line in dest_lines:
                report.pass_actions.append(
                    ("refine_logic", f"dropped redundant loop statement: {stmt_line[:60]}", header_line)
                )
                new_text = without
            else:
                report.pass_actions.append(
                    ("refine_logic", f"hoisted loop-invariant statement: {stmt_line[:60]}", header_line)
                )
                indent = doc.lines[header_line][: len(doc.lines[header_line]) - len(doc.lines[header_line].lstrip())]
                new_text = (
                    without[:line_start]
                    + indent
                    + stmt_line
                    + "\n"
                    + without[line_start:]
                )
            return parse_document(new_text)
    return None


def _rehome_one_misplaced(
    doc: TikzDocument, env_commands: frozenset[str], report: RepairReport
) -> TikzDocument | None:
    graphical = [s for s in doc.env_spans if s.name in GRAPHICAL_ENVS and s.balanced]
    if not graphical:
        return None

    def in_graphical(lineno: int) -> bool:
        return any(s.begin_line <= lineno <= s.end_line for s in graphical)

    text = doc.text
    for lineno, line in enumerate(doc.lines):
        code = strip_comment(line).strip()
        m = _FIRST_COMMAND.match(code) if code.startswith("\\") else None
        if not m or m.group(1) not in env_commands:
            continue
        if in_graphical(lineno):
            continue
        grabbed = _grab_statement_lines(doc, lineno)
        if grabbed is None:
            continue  # incomplete fragment: leave in place
        first, last = grabbed
        stmt_lines = doc.lines[first : last + 1]
        target = _target_picture(graphical, first)
        dest_set = {
            doc.lines[i].strip()
            for i in range(target.begin_line + 1, target.end_line)
        }
        remaining = [ln for i, ln in enumerate(doc.lines) if not (first <= i <= last)]
        if all(ln.strip() in dest_set for ln in stmt_lines):
            report.pass_actions.append(
                ("refine_logic", f"dropped redundant misplaced statement: {stmt_lines[0].strip()[:60]}", lineno)
            )
            return _reparse(remaining)
        # recompute target end position in the remaining line list
        shift = sum(1 for i in range(first, last + 1) if i < target.end_line)
        insert_at = target.end_line - shift
        for ln in reversed(stmt_lines):
            remaining.insert(insert_at, ln)
        report.pass_actions.append(
            ("refine_logic", f"moved misplaced statement into {target.name}", lineno)
        )
        return _reparse(remaining)
    return None


def _grab_statement_lines(doc: TikzDocument, start: int) -> tuple[int, int] | None:
    """Line range of the complete statement starting at ``start``."""
    collected: list[str] = []
    for lineno in range(start, len(doc.lines)):
        line = doc.lines[lineno]
        if lineno > start and ("\\begin" in line or "\\end" in line):
            return None
        collected.append(line)
        stmts = split_statements("\n".join(collected))
        if stmts and stmts[-1].complete:
            return start, lineno
    return None


def _target_picture(graphical: list[EnvironmentSpan], lineno: int) -> EnvironmentSpan:
    preceding = [s for s in graphical if s.end_line is not None and s.end_line < lineno]
    if preceding:
        return max(preceding, key=lambda s: s.end_line)
    return min(graphical, key=lambda s: s.begin_line)


# ---------------------------------------------------------------------------
# composite


def repair(
    text: str | bytes,
    env_commands: frozenset[str] = REQUIRED_ENV_COMMANDS,
) -> tuple[str, RepairReport]:
    """Run all six passes in order on raw source.  Total: never raises."""
    doc = parse_document(text)
    report = RepairReport()
    for step in (
        dedupe_packages,
        dedupe_block_lines,
        remove_truncated_tail,
        balance_environments,
        normalize_document_structure,
    ):
        doc, r = step(doc)
        report.merge(r)
    doc, r = refine_logic(doc, env_commands)
    report.merge(r)
    return serialize(doc), report

"""Structural model of TikZ/LaTeX source.

Parsing is total: any byte string yields a document, and ``serialize``
reproduces the input up to the declared canonicalization (CRLF -> LF,
per-line trailing whitespace trim).  Nothing here repairs anything; broken
nesting is represented, not fixed.

Two views of a document body coexist: physical lines (what the repair
passes operate on) and semicolon-delimited statements (the unit of the
localized code transform).  Statement boundaries consider only ``{}`` and
``[]`` depth; parens are deliberately ignored because TikZ coordinates use
them with embedded commas but not statement-terminating semicolons.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field

# Environments whose content is treated as an opaque line block: no
# comment handling, no statement splitting, no nested env scanning.
VERBATIM_ENVS = frozenset(
    {"verbatim", "verbatim*", "lstlisting", "alltt", "minted", "filecontents"}
)

# Environments whose bodies hold drawing statements.
GRAPHICAL_ENVS = frozenset({"tikzpicture", "pgfpicture"})

_BEGIN_RE = re.compile(r"\\begin\s*\{([^{}]*)\}")
_END_RE = re.compile(r"\\end\s*\{([^{}]*)\}")
_USEPACKAGE_RE = re.compile(r"\\usepackage\s*(\[[^\]]*\])?\s*\{([^{}]*)\}")


def canonicalize(text: str) -> str:
    """Normalize CRLF to LF and strip trailing whitespace per line."""
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    return "\n".join(line.rstrip(" \t") for line in text.split("\n"))


def _decode(raw: str | bytes) -> tuple[str, bool]:
    if isinstance(raw, bytes):
        try:
            return raw.decode("utf-8"), False
        except UnicodeDecodeError:
            return raw.decode("utf-8", errors="replace"), True
    return raw, False


def _backslash_run(text: str, idx: int) -> int:
    """Number of consecutive backslashes immediately before ``idx``."""
    n = 0
    j = idx - 1
    while j >= 0 and text[j] == "\\":
        n += 1
        j -= 1
    return n


def comment_mask(text: str) -> bytearray:
    """Byte mask over ``text``: 1 where the char belongs to a comment.

    A ``%`` opens a comment through end-of-line unless escaped by an odd
    backslash run.  Newlines themselves stay code.
    """
    mask = bytearray(len(text))
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "%" and _backslash_run(text, i) % 2 == 0:
            j = text.find("\n", i)
            if j < 0:
                j = n
            for k in range(i, j):
                mask[k] = 1
            i = j
        else:
            i += 1
    return mask


def strip_comment(line: str) -> str:
    """Code part of a single line, comment removed."""
    mask = comment_mask(line)
    try:
        cut = mask.index(1)
    except ValueError:
        return line
    return line[:cut]


@dataclass(frozen=True)
class Statement:
    """One semicolon-delimited unit of an environment body."""

    text: str
    line_span: tuple[int, int]
    complete: bool
    # char offsets into the text the statement was split from
    char_start: int = 0
    char_end: int = 0

    @property
    def is_blank(self) -> bool:
        """True when the statement carries no code (whitespace/comments only)."""
        code = "".join(
            c for c, m in zip(self.text, comment_mask(self.text)) if not m
        )
        return code.strip() == ""


@dataclass
class EnvironmentSpan:
    """One ``\\begin{X}``/``\\end{X}`` pair (possibly half-open)."""

    name: str
    begin_line: int | None
    end_line: int | None
    depth: int
    parent: int | None
    # char offsets of the body: right after the begin marker, at the
    # start of the end marker; None when the marker is absent
    inner_start: int | None = None
    inner_end: int | None = None

    @property
    def balanced(self) -> bool:
        return self.begin_line is not None and self.end_line is not None


@dataclass
class TikzDocument:
    """Parsed TikZ/LaTeX source, losslessly serializable."""

    lines: list[str]
    preamble_end: int
    package_decls: list[tuple[str, str]]
    env_spans: list[EnvironmentSpan]
    diagnostics: list[str] = field(default_factory=list)

    @property
    def text(self) -> str:
        return "\n".join(self.lines)

    @property
    def preamble_lines(self) -> list[str]:
        return self.lines[: self.preamble_end]

    @property
    def body_lines(self) -> list[str]:
        return self.lines[self.preamble_end :]

    @property
    def source_hash(self) -> str:
        return hashlib.sha256(self.text.encode("utf-8")).hexdigest()

    @property
    def balanced(self) -> bool:
        return all(span.balanced for span in self.env_spans)

    def spans_named(self, name: str) -> list[EnvironmentSpan]:
        return [s for s in self.env_spans if s.name == name]

    def line_of_char(self, offset: int) -> int:
        return self.text.count("\n", 0, offset)

    def body_of(self, span: EnvironmentSpan) -> str:
        if span.inner_start is None or span.inner_end is None:
            return ""
        return self.text[span.inner_start : span.inner_end]

    def statements_of(self, span: EnvironmentSpan) -> list[Statement]:
        """Statements of one environment body, nested env markers excluded.

        Nested ``\\begin``/``\\end`` markers act as hard segment
        boundaries so they never merge into a statement; the contents of
        nested scopes are still split normally.
        """
        if span.inner_start is None or span.inner_end is None:
            return []
        text = self.text
        cuts: list[tuple[int, int]] = []
        for other in self.env_spans:
            if other is span:
                continue
            for marker in self._marker_ranges(other):
                if span.inner_start <= marker[0] and marker[1] <= span.inner_end:
                    cuts.append(marker)
        cuts.sort()
        segments: list[tuple[int, int]] = []
        pos = span.inner_start
        for a, b in cuts:
            if a > pos:
                segments.append((pos, a))
            pos = max(pos, b)
        if span.inner_end > pos:
            segments.append((pos, span.inner_end))
        out: list[Statement] = []
        for a, b in segments:
            for st in split_statements(text[a:b]):
                base_line = self.line_of_char(a + st.char_start)
                end_line = self.line_of_char(a + max(st.char_start, st.char_end - 1))
                out.append(
                    Statement(
                        text=st.text,
                        line_span=(base_line, end_line),
                        complete=st.complete,
                        char_start=a + st.char_start,
                        char_end=a + st.char_end,
                    )
                )
        return out

    def _marker_ranges(self, span: EnvironmentSpan) -> list[tuple[int, int]]:
        ranges = []
        if span.begin_line is not None and span.inner_start is not None:
            begin_at = self._begin_marker_start(span)
            ranges.append((begin_at, span.inner_start))
        if span.end_line is not None and span.inner_end is not None:
            end_at = self._end_marker_end(span)
            ranges.append((span.inner_end, end_at))
        return ranges

    def _begin_marker_start(self, span: EnvironmentSpan) -> int:
        # inner_start sits right after "\begin{name}"; back up over it
        text = self.text
        marker = text.rfind("\\begin", 0, span.inner_start)
        return marker if marker >= 0 else span.inner_start

    def _end_marker_end(self, span: EnvironmentSpan) -> int:
        m = _END_RE.match(self.text, span.inner_end)
        return m.end() if m else span.inner_end

    def graphical_statements(self) -> list[Statement]:
        """Content statements inside graphical environments, document order.

        Only innermost-region splitting is applied via ``statements_of``
        on each graphical span; nested graphical spans contribute through
        their outermost graphical ancestor to avoid double counting.
        """
        tops = [
            s
            for s in self.env_spans
            if s.name in GRAPHICAL_ENVS
            and s.balanced
            and not self._has_graphical_ancestor(s)
        ]
        out = []
        for span in tops:
            out.extend(st for st in self.statements_of(span) if not st.is_blank)
        out.sort(key=lambda st: st.char_start)
        return out

    def _has_graphical_ancestor(self, span: EnvironmentSpan) -> bool:
        parent = span.parent
        while parent is not None:
            p = self.env_spans[parent]
            if p.name in GRAPHICAL_ENVS:
                return True
            parent = p.parent
        return False


def parse_document(raw: str | bytes) -> TikzDocument:
    """Parse arbitrary source into a TikzDocument.  Never fails."""
    text, lossy = _decode(raw)
    text = canonicalize(text)
    lines = text.split("\n")
    diagnostics = ["undecodable bytes replaced"] if lossy else []

    spans: list[EnvironmentSpan] = []
    stack: list[int] = []  # indices into spans
    verbatim_until: str | None = None

    # line start offsets for (line, col) <-> char offset conversion
    offsets = [0]
    for ln in lines[:-1]:
        offsets.append(offsets[-1] + len(ln) + 1)

    for lineno, line in enumerate(lines):
        if verbatim_until is not None:
            m = _END_RE.search(line)
            if m and m.group(1) == verbatim_until:
                idx = stack.pop()
                spans[idx].end_line = lineno
                spans[idx].inner_end = offsets[lineno] + m.start()
                verbatim_until = None
            continue
        mask = comment_mask(line)
        events: list[tuple[int, str, re.Match]] = []
        for m in _BEGIN_RE.finditer(line):
            if not mask[m.start()]:
                events.append((m.start(), "begin", m))
        for m in _END_RE.finditer(line):
            if not mask[m.start()]:
                events.append((m.start(), "end", m))
        events.sort(key=lambda e: e[0])
        for col, kind, m in events:
            name = m.group(1).strip()
            if kind == "begin":
                span = EnvironmentSpan(
                    name=name,
                    begin_line=lineno,
                    end_line=None,
                    depth=len(stack),
                    parent=stack[-1] if stack else None,
                    inner_start=offsets[lineno] + m.end(),
                    inner_end=None,
                )
                spans.append(span)
                stack.append(len(spans) - 1)
                if name in VERBATIM_ENVS:
                    verbatim_until = name
                    break  # rest of the line is opaque
            else:
                if stack and spans[stack[-1]].name == name:
                    idx = stack.pop()
                    spans[idx].end_line = lineno
                    spans[idx].inner_end = offsets[lineno] + m.start()
                else:
                    # mismatched or stray \end: half-open span, never dropped
                    spans.append(
                        EnvironmentSpan(
                            name=name,
                            begin_line=None,
                            end_line=lineno,
                            depth=len(stack),
                            parent=stack[-1] if stack else None,
                            inner_start=None,
                            inner_end=offsets[lineno] + m.start(),
                        )
                    )
                    diagnostics.append(
                        f"unmatched \\end{{{name}}} at line {lineno}"
                    )
    for idx in stack:
        diagnostics.append(
            f"unclosed \\begin{{{spans[idx].name}}} at line {spans[idx].begin_line}"
        )

    doc_spans = [s for s in spans if s.name == "document" and s.begin_line is not None]
    if doc_spans:
        preamble_end = doc_spans[0].begin_line
    else:
        begins = [s.begin_line for s in spans if s.begin_line is not None]
        preamble_end = min(begins) if begins else 0

    packages: list[tuple[str, str]] = []
    for line in lines:
        code = strip_comment(line)
        for m in _USEPACKAGE_RE.finditer(code):
            for name in m.group(2).split(","):
                name = name.strip()
                if name:
                    packages.append((name, m.group(0)))

    return TikzDocument(
        lines=lines,
        preamble_end=preamble_end,
        package_decls=packages,
        env_spans=spans,
        diagnostics=diagnostics,
    )


def serialize(doc: TikzDocument) -> str:
    """Deterministic text for a document; inverse of parse up to canonicalization."""
    return doc.text


def split_statements(body: str | list[str]) -> list[Statement]:
    """Split an environment body into semicolon-delimited statements.

    Splits occur only at semicolons at combined ``{}``/``[]`` depth 0 and
    outside comments.  The returned statements tile the body text exactly:
    no gaps, no overlaps.  A trailing fragment with code content becomes a
    Statement with ``complete=False``; trailing whitespace or comments
    attach to the preceding statement.
    """
    text = "\n".join(body) if isinstance(body, list) else body
    if text == "":
        return []
    mask = comment_mask(text)
    curly = 0
    square = 0
    bad_nesting = False
    boundaries: list[int] = []  # offset right after each splitting ';'
    seg_start = 0
    seg_flags: list[bool] = []  # per boundary: segment had clean nesting
    for i, ch in enumerate(text):
        if mask[i]:
            continue
        if ch in "{}[]" and _backslash_run(text, i) % 2 == 1:
            continue  # escaped literal bracket
        if ch == "{":
            curly += 1
        elif ch == "}":
            if curly == 0:
                bad_nesting = True  # stray closer: ignored for depth
            else:
                curly -= 1
        elif ch == "[":
            square += 1
        elif ch == "]":
            if square == 0:
                bad_nesting = True
            else:
                square -= 1
        elif ch == ";" and curly == 0 and square == 0:
            boundaries.append(i + 1)
            seg_flags.append(not bad_nesting)
            bad_nesting = False

    statements: list[Statement] = []
    pos = 0
    for bnd, clean in zip(boundaries, seg_flags):
        statements.append(_make_statement(text, pos, bnd, complete=clean))
        pos = bnd
    if pos < len(text):
        tail = text[pos:]
        tail_code = "".join(
            c for c, m in zip(tail, comment_mask(tail)) if not m
        ).strip()
        if tail_code == "" and statements:
            last = statements[-1]
            statements[-1] = _make_statement(
                text, last.char_start, len(text), complete=last.complete
            )
        else:
            statements.append(_make_statement(text, pos, len(text), complete=False))
    return statements


def _make_statement(text: str, start: int, end: int, complete: bool) -> Statement:
    start_line = text.count("\n", 0, start)
    end_line = text.count("\n", 0, max(start, end - 1))
    return Statement(
        text=text[start:end],
        line_span=(start_line, end_line),
        complete=complete,
        char_start=start,
        char_end=end,
    )

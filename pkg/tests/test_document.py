"""Parser and serializer tests: totality, round-trip, statement splitting."""

import random

import pytest

from tikzforge.document import (
    Statement,
    canonicalize,
    parse_document,
    serialize,
    split_statements,
)


def test_empty_input():
    doc = parse_document("")
    assert doc.env_spans == []
    assert doc.graphical_statements() == []
    assert serialize(doc) == ""


def test_minimal_wellformed_one_liner():
    doc = parse_document("\\begin{tikzpicture}\\draw (0,0)--(1,1);\\end{tikzpicture}")
    assert len(doc.env_spans) == 1
    assert doc.env_spans[0].name == "tikzpicture"
    assert doc.env_spans[0].balanced
    stmts = doc.graphical_statements()
    assert len(stmts) == 1
    assert stmts[0].complete
    assert "\\draw" in stmts[0].text


def test_unbalanced_scope_is_represented_not_rejected():
    doc = parse_document("\\begin{tikzpicture}\n\\begin{scope}\n\\draw (0,0);\n\\end{tikzpicture}")
    scopes = doc.spans_named("scope")
    assert len(scopes) == 1
    assert scopes[0].end_line is None
    assert not doc.balanced
    assert any("scope" in d for d in doc.diagnostics)


def test_stray_end_is_kept_as_half_open_span():
    doc = parse_document("\\end{scope}")
    assert len(doc.spans_named("scope")) == 1
    assert doc.spans_named("scope")[0].begin_line is None


def test_parse_is_total_on_bytes():
    doc = parse_document(b"\xff\xfe garbage \\begin{tikzpicture}")
    assert any("undecodable" in d for d in doc.diagnostics)


def test_nesting_depth_and_parent():
    src = "\n".join(
        [
            "\\begin{document}",
            "\\begin{tikzpicture}",
            "\\begin{scope}",
            "\\draw (0,0);",
            "\\end{scope}",
            "\\end{tikzpicture}",
            "\\end{document}",
        ]
    )
    doc = parse_document(src)
    by_name = {s.name: s for s in doc.env_spans}
    assert by_name["document"].depth == 0
    assert by_name["tikzpicture"].depth == 1
    assert by_name["scope"].depth == 2
    assert doc.env_spans[by_name["scope"].parent].name == "tikzpicture"
    assert by_name["scope"].begin_line < by_name["scope"].end_line


def test_comments_hide_environment_markers():
    src = "% \\begin{tikzpicture}\n\\begin{scope}\n\\end{scope}"
    doc = parse_document(src)
    assert doc.spans_named("tikzpicture") == []
    assert len(doc.spans_named("scope")) == 1


def test_verbatim_content_is_opaque():
    src = "\n".join(
        [
            "\\begin{verbatim}",
            "\\begin{tikzpicture}",
            "% not a comment either ; {",
            "\\end{verbatim}",
        ]
    )
    doc = parse_document(src)
    assert doc.spans_named("tikzpicture") == []
    assert doc.spans_named("verbatim")[0].balanced


def test_package_decls_collected():
    src = "\\usepackage{tikz}\n\\usepackage[utf8]{inputenc}\n\\usepackage{amsmath,amssymb}"
    doc = parse_document(src)
    names = [n for n, _ in doc.package_decls]
    assert names == ["tikz", "inputenc", "amsmath", "amssymb"]


def test_preamble_split_at_begin_document():
    src = "\\documentclass{standalone}\n\\usepackage{tikz}\n\\begin{document}\nx\n\\end{document}"
    doc = parse_document(src)
    assert doc.preamble_lines == ["\\documentclass{standalone}", "\\usepackage{tikz}"]
    assert doc.body_lines[0] == "\\begin{document}"


def test_canonicalization_round_trip():
    raw = "\\draw (0,0);   \r\n\\draw (1,1);\t\r\n"
    doc = parse_document(raw)
    assert serialize(doc) == canonicalize(raw)
    again = parse_document(serialize(doc))
    assert serialize(again) == serialize(doc)


# --- split_statements -------------------------------------------------------


def test_split_basic_two_statements():
    stmts = split_statements("\\draw (0,0)--(1,1); \\node at (0,0) {a;b};")
    assert len(stmts) == 2
    assert all(s.complete for s in stmts)
    assert "{a;b}" in stmts[1].text


def test_split_unterminated_fragment():
    stmts = split_statements("\\draw (0,0) --")
    assert len(stmts) == 1
    assert not stmts[0].complete


def test_split_comment_semicolon_ignored():
    stmts = split_statements("% c; \n\\fill (0,0) circle (1);")
    assert len(stmts) == 1
    assert stmts[0].complete


def test_split_bracket_semicolon_protected():
    stmts = split_statements("\\draw[dash pattern=on 1pt off 1pt;] (0,0);")
    # the ; inside [] must not split
    assert len(stmts) == 1


def test_split_tiling_property():
    body = "\\draw (0,0); % x\n\\node {y;}; \\fill (1,1) circle (2);\n  "
    stmts = split_statements(body)
    assert "".join(s.text for s in stmts) == body


def test_split_escaped_percent_is_code():
    stmts = split_statements("\\node {100\\%}; \\draw (0,0);")
    assert len(stmts) == 2


def test_split_line_spans():
    stmts = split_statements("\\draw (0,0)\n  -- (1,1);\n\\fill (2,2);")
    assert stmts[0].line_span == (0, 1)
    assert stmts[1].line_span == (1, 2)  # leading newline attaches to stmt 2


def test_depth0_insertion_property_random():
    rng = random.Random(7)
    base = "\\draw (0,0) -- (1,1);\\node at (2,2) {lbl};\\fill (3,3) circle (1);"
    n_before = len(split_statements(base))
    # inserting a semicolon inside any balanced brace group never changes the count
    for _ in range(50):
        idx = base.find("{lbl}")
        pos = idx + 1 + rng.randrange(3)
        mutated = base[:pos] + ";" + base[pos:]
        assert len(split_statements(mutated)) == n_before


def test_statement_blankness():
    assert Statement(text="  % hi\n", line_span=(0, 1), complete=False).is_blank
    assert not Statement(text="\\draw;", line_span=(0, 0), complete=True).is_blank


def test_one_line_env_span_bounds():
    doc = parse_document("\\begin{scope}\\end{scope}")
    span = doc.spans_named("scope")[0]
    assert span.begin_line == span.end_line == 0
    assert doc.body_of(span) == ""

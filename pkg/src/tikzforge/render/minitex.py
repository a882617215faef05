"""Hermetic fallback TikZ compiler.

Stands in for a LaTeX engine when none is installed: validates document
structure with TeX-like strictness (unbalanced environments, truncated
statements, undefined control sequences, misplaced drawing commands and
material before ``\\begin{document}`` are all hard errors), renders a
TikZ subset (polylines, rectangles, circles, ellipses, arcs, grids,
named coordinates, ``\\foreach`` loops, node labels) and writes a
single-page PDF with the raster embedded.  Node labels are schematic
glyph blocks, not typography.

Deliberately self-contained: stdlib only, no imports from the tikzforge
package, so compile checks stay an independent oracle for the repair and
transform logic.  Invoked like an engine::

    python -m tikzforge.render.minitex -interaction=nonstopmode doc.tex

Exit 0 and ``doc.pdf`` on success; exit 1 with ``! ...`` lines in
``doc.log`` on any error.  A ``\\loop\\iftrue\\repeat`` construct hangs
forever, as it would in TeX, so caller-side timeouts stay honest.
"""

import math
import re
import sys
import time
import zlib

DPI = 300
PX_PER_CM = DPI / 2.54
LINE_PX = 3
BORDER_CM = 0.2
MAX_CANVAS = 4000
MAX_LOOP_ITEMS = 10000

GRAPHICAL_COMMANDS = {
    "draw", "fill", "filldraw", "path", "shade", "shadedraw", "clip",
    "coordinate", "node",
}

PREAMBLE_COMMANDS = {
    "documentclass", "usepackage", "usetikzlibrary", "usepgfplotslibrary",
    "tikzset", "pgfplotsset", "definecolor", "colorlet", "newcommand",
    "renewcommand", "providecommand", "input", "standaloneconfig",
    "RequirePackage", "PassOptionsToPackage", "pagestyle", "setlength",
    "pgfdeclarelayer", "pgfsetlayers", "pdfminorversion",
}

TEXT_COMMANDS = {
    "textbf", "textit", "textrm", "texttt", "textsf", "textsc", "emph",
    "underline", "tiny", "scriptsize", "footnotesize", "small",
    "normalsize", "large", "Large", "LARGE", "huge", "Huge", "par",
    "noindent", "centering", "quad", "qquad", "hspace", "vspace",
    "label", "ref", "text", "mbox", ",", ";", " ", "&", "#", "_", "%",
    "$", "{", "}",
}

MATH_COMMANDS = {
    "frac", "sqrt", "cdot", "times", "div", "pm", "mp", "leq", "geq",
    "neq", "approx", "equiv", "angle", "triangle", "circ", "degree",
    "pi", "alpha", "beta", "gamma", "delta", "epsilon", "varepsilon",
    "zeta", "eta", "theta", "vartheta", "iota", "kappa", "lambda", "mu",
    "nu", "xi", "rho", "sigma", "tau", "upsilon", "phi", "varphi",
    "chi", "psi", "omega", "Gamma", "Delta", "Theta", "Lambda", "Xi",
    "Pi", "Sigma", "Phi", "Psi", "Omega", "sin", "cos", "tan", "cot",
    "log", "ln", "exp", "sum", "prod", "int", "infty", "overline",
    "hat", "bar", "vec", "dot", "ddot", "mathrm", "mathbf", "mathit",
    "mathsf", "mathcal", "cdots", "ldots", "dots", "prime", "perp",
    "parallel", "cong", "sim", "subset", "supset", "cup", "cap", "in",
    "to", "rightarrow", "leftarrow", "Rightarrow", "left", "right",
}

OTHER_COMMANDS = {
    "begin", "end", "foreach", "pgfmathsetmacro", "pgfmathtruncatemacro",
    "tikz", "pgftext", "pic", "color", "textcolor", "clip", "scope",
    "linewidth", "columnwidth", "textwidth", "baselineskip",
}

KNOWN_COMMANDS = (
    GRAPHICAL_COMMANDS | PREAMBLE_COMMANDS | TEXT_COMMANDS
    | MATH_COMMANDS | OTHER_COMMANDS
)


class CompileError(Exception):
    pass


def strip_comments(text):
    out = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "%":
            back = 0
            j = i - 1
            while j >= 0 and text[j] == "\\":
                back += 1
                j -= 1
            if back % 2 == 0:
                nl = text.find("\n", i)
                i = n if nl < 0 else nl
                continue
        out.append(ch)
        i += 1
    return "".join(out)


# --- validation -------------------------------------------------------------


def check_structure(text):
    """TeX-like structural validation; raises CompileError on the first fault."""
    if re.search(r"\\loop\b[\s\S]*?\\iftrue\b[\s\S]*?\\repeat\b", text):
        # a genuine non-terminating expansion: behave like TeX and hang
        while True:
            time.sleep(0.5)

    if "\\documentclass" not in text:
        raise CompileError("LaTeX Error: Missing \\documentclass.")
    begin_doc = re.search(r"\\begin\s*\{document\}", text)
    if not begin_doc:
        raise CompileError("LaTeX Error: Missing \\begin{document}.")
    end_doc = re.search(r"\\end\s*\{document\}", text)
    if not end_doc:
        raise CompileError("Emergency stop: no legal \\end found.")
    if end_doc.start() < begin_doc.end():
        raise CompileError("LaTeX Error: \\end{document} before \\begin{document}.")

    preamble = text[: begin_doc.start()]
    for m in re.finditer(r"\\([a-zA-Z@]+)", preamble):
        if m.group(1) not in PREAMBLE_COMMANDS:
            raise CompileError(
                f"LaTeX Error: Missing \\begin{{document}}. (\\{m.group(1)} in preamble)"
            )

    body = text[begin_doc.end() : end_doc.start()]

    # environment nesting inside the document
    stack = []
    for m in re.finditer(r"\\(begin|end)\s*\{([^{}]*)\}", body):
        kind, name = m.group(1), m.group(2).strip()
        if kind == "begin":
            stack.append(name)
        else:
            if not stack:
                raise CompileError(f"LaTeX Error: \\end{{{name}}} without \\begin.")
            top = stack.pop()
            if top != name:
                raise CompileError(
                    f"LaTeX Error: \\begin{{{top}}} ended by \\end{{{name}}}."
                )
    if stack:
        raise CompileError(
            f"LaTeX Error: \\begin{{{stack[-1]}}} ended by \\end{{document}}."
        )

    depth = 0
    prev = ""
    for ch in body:
        if ch == "{" and prev != "\\":
            depth += 1
        elif ch == "}" and prev != "\\":
            depth -= 1
            if depth < 0:
                raise CompileError("Too many }'s.")
        prev = ch if prev != "\\" else ""
    if depth > 0:
        raise CompileError("Missing } inserted. (\\end{document} inside a group)")

    loop_vars = {
        v
        for m in re.finditer(r"\\foreach([^{]*?)\bin\b", body)
        for v in re.findall(r"\\([a-zA-Z]+)", m.group(1))
    }
    for m in re.finditer(r"\\([a-zA-Z@]+|.)", body):
        name = m.group(1)
        if name not in KNOWN_COMMANDS and name not in loop_vars and name.isalpha():
            raise CompileError(f"Undefined control sequence. \\{name}")

    _check_pictures(body)
    return body


def _picture_ranges(body):
    ranges = []
    for m in re.finditer(r"\\begin\s*\{tikzpicture\}", body):
        e = re.search(r"\\end\s*\{tikzpicture\}", body[m.end() :])
        if e:
            ranges.append((m.start(), m.end(), m.end() + e.start()))
    return ranges


def _check_pictures(body):
    ranges = _picture_ranges(body)

    # drawing commands are only legal inside tikzpicture
    for m in re.finditer(r"\\(draw|fill|filldraw|shade|shadedraw|clip|coordinate)\b", body):
        inside = any(b <= m.start() < e for _, b, e in ranges)
        if not inside:
            raise CompileError(
                f"Package tikz Error: \\{m.group(1)} outside tikzpicture."
            )
    # \node is also a text-mode no-go outside pictures
    for m in re.finditer(r"\\node\b", body):
        inside = any(b <= m.start() < e for _, b, e in ranges)
        if not inside:
            raise CompileError("Package tikz Error: \\node outside tikzpicture.")

    for _, b, e in ranges:
        # expand loops first: a braced loop body is self-terminating and
        # carries no trailing semicolon of its own
        _check_statements(expand_foreach(body[b:e]))


def _strip_env_markers(picture):
    # nested environment markers (scope, pgfonlayer, ...) are structure,
    # not statements; nesting itself was already validated
    return re.sub(r"\\(begin|end)\s*\{[^{}]*\}(\s*\[[^\]]*\])?", " ", picture)


def _check_statements(picture):
    """Semicolon-terminated statement discipline within one picture."""
    picture = _strip_env_markers(picture)
    depth = 0
    seg_start = 0
    i = 0
    n = len(picture)
    statements = []
    while i < n:
        ch = picture[i]
        if ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
            if depth < 0:
                raise CompileError("Argument of \\tikz@ has an extra }.")
        elif ch == ";" and depth == 0:
            statements.append(picture[seg_start : i + 1])
            seg_start = i + 1
        i += 1
    if depth > 0:
        raise CompileError("Paragraph ended before \\tikz@path was complete.")
    tail = picture[seg_start:].strip()
    if tail and not re.fullmatch(r"[\s}]*", tail):
        raise CompileError(
            f"File ended while scanning use of \\tikz@path. ({tail[:40]})"
        )
    for stmt in statements:
        cmds = re.findall(
            r"\\(draw|fill|filldraw|path|shade|shadedraw|clip|coordinate|node)\b",
            _at_depth0(stmt),
        )
        if len(cmds) > 1:
            raise CompileError(
                f"Package tikz Error: runaway path, \\{cmds[1]} inside \\{cmds[0]}."
            )


def _at_depth0(stmt):
    out = []
    depth = 0
    for ch in stmt:
        if ch in "{[":
            depth += 1
        elif ch in "}]":
            depth = max(0, depth - 1)
        elif depth == 0:
            out.append(ch)
    return "".join(out)


# --- foreach expansion ------------------------------------------------------


def expand_foreach(picture):
    budget = [MAX_LOOP_ITEMS]

    def expand(text):
        m = re.search(r"\\foreach\b", text)
        if not m:
            return text
        after = text[m.end() :]
        in_kw = re.search(r"\bin\b", after)
        if not in_kw:
            raise CompileError("Package pgffor Error: malformed \\foreach.")
        variables = re.findall(r"\\([a-zA-Z]+)", after[: in_kw.start()])
        rest = after[in_kw.end() :]
        list_group = _take_group(rest)
        if not list_group:
            raise CompileError("Package pgffor Error: missing value list.")
        values_text, rest = list_group
        body_group = _take_group(rest)
        if body_group:
            body, rest = body_group
        else:
            # braceless form: body is the next depth-0 statement
            depth = 0
            cut = None
            for j, ch in enumerate(rest):
                if ch in "{[":
                    depth += 1
                elif ch in "}]":
                    depth -= 1
                elif ch == ";" and depth == 0:
                    cut = j + 1
                    break
            if cut is None:
                raise CompileError("Package pgffor Error: missing loop body.")
            body, rest = rest[:cut], rest[cut:]
        expansion = []
        for value in _loop_values(values_text):
            parts = [p.strip() for p in value.split("/")]
            chunk = body
            for var, part in zip(variables, parts):
                chunk = re.sub(
                    r"\\" + re.escape(var) + r"(?![a-zA-Z])", part, chunk
                )
            budget[0] -= 1
            if budget[0] < 0:
                raise CompileError("Package pgffor Error: loop budget exhausted.")
            expansion.append(chunk)
        return expand(text[: m.start()] + " ".join(expansion) + rest)

    return expand(picture)


def _take_group(text):
    i = 0
    n = len(text)
    while i < n and text[i] in " \t\n":
        i += 1
    if i >= n or text[i] != "{":
        return None
    depth = 0
    for j in range(i, n):
        if text[j] == "{":
            depth += 1
        elif text[j] == "}":
            depth -= 1
            if depth == 0:
                return text[i + 1 : j], text[j + 1 :]
    return None


def _loop_values(values_text):
    items = [v.strip() for v in _split_top_commas(values_text)]
    if "..." in items:
        k = items.index("...")
        try:
            first = float(items[0])
            prev = float(items[k - 1])
            last = float(items[k + 1])
        except (ValueError, IndexError):
            raise CompileError("Package pgffor Error: bad dots range.")
        step = prev - first if k >= 2 else (1.0 if last >= first else -1.0)
        if step == 0:
            raise CompileError("Package pgffor Error: zero step.")
        out = []
        v = first
        while (step > 0 and v <= last + 1e-9) or (step < 0 and v >= last - 1e-9):
            out.append(_fmt_num(v))
            v += step
            if len(out) > MAX_LOOP_ITEMS:
                break
        return out
    return [v for v in items if v != ""]


def _split_top_commas(text):
    parts = []
    depth = 0
    cur = []
    for ch in text:
        if ch in "{[(":
            depth += 1
        elif ch in "}])":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    parts.append("".join(cur))
    return parts


def _fmt_num(v):
    return str(int(v)) if abs(v - round(v)) < 1e-9 else f"{v:g}"


# --- geometry ---------------------------------------------------------------


class Picture:
    def __init__(self):
        self.lines = []  # list of ((x1,y1),(x2,y2))
        self.fills = []  # list of polygon point lists
        self.disks = []  # list of (center, r)
        self.texts = []  # list of ((x,y), string)
        self.named = {}


_COORD_RE = re.compile(r"\(\s*([^()]*?)\s*\)")


def interpret_picture(picture_src):
    pic = Picture()
    src = _strip_env_markers(expand_foreach(picture_src))
    depth = 0
    seg = []
    statements = []
    for ch in src:
        seg.append(ch)
        if ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
        elif ch == ";" and depth == 0:
            statements.append("".join(seg))
            seg = []
    for stmt in statements:
        _interpret_statement(stmt.strip(), pic)
    return pic


def _interpret_statement(stmt, pic):
    m = re.match(r"\\([a-zA-Z]+)", stmt)
    if not m:
        return
    cmd = m.group(1)
    rest = stmt[m.end() :]
    if cmd == "coordinate":
        nm = re.match(r"\s*(\[[^\]]*\])?\s*\(([^()]*)\)\s*at\s*", rest)
        if not nm:
            raise CompileError("Package tikz Error: malformed \\coordinate.")
        cm = _COORD_RE.search(rest, nm.end() - 1)
        if not cm:
            raise CompileError("Package tikz Error: coordinate without position.")
        pic.named[nm.group(2).strip()] = _resolve_coord(cm.group(1), pic, None)
        return
    if cmd == "node":
        _interpret_node(rest, pic)
        return
    if cmd in ("draw", "fill", "filldraw", "path", "shade", "shadedraw", "clip"):
        _interpret_path(rest, pic, filled=cmd in ("fill", "filldraw", "shade", "shadedraw"))
        return
    # tikzset/pgfmath assignments: no visual effect


def _interpret_node(rest, pic):
    pos = (0.0, 0.0)
    nm = re.match(r"\s*(\[[^\]]*\])?\s*(\(([^()]*)\))?\s*(\[[^\]]*\])?\s*at\s*", rest)
    after = rest
    name = None
    if nm and "at" in nm.group(0):
        cm = _COORD_RE.search(rest, nm.end() - 1)
        if not cm:
            raise CompileError("Package tikz Error: \\node at without coordinate.")
        pos = _resolve_coord(cm.group(1), pic, None)
        name = nm.group(3)
        after = rest[cm.end() :]
    grp = _take_group(after)
    text = grp[0] if grp else ""
    pic.texts.append((pos, _plain_text(text)))
    if name:
        pic.named[name.strip()] = pos


def _plain_text(text):
    return re.sub(r"[\\{}$^_]", "", text).strip()


def _interpret_path(rest, pic, filled):
    rest = re.sub(r"^\s*\[[^\]]*\]", "", rest)
    tokens = _tokenize_path(rest)
    current = None
    start = None
    points = []
    i = 0
    while i < len(tokens):
        kind, value = tokens[i]
        if kind == "coord":
            pt = _resolve_coord(value, pic, current)
            current = pt
            points.append(pt)
            if start is None:
                start = pt
        elif kind == "op":
            if value == "cycle":
                if start is not None and current is not None:
                    pic.lines.append((current, start))
                    points.append(start)
                    current = start
            elif value == "rectangle":
                found = _next_coord(tokens, i, pic, current)
                if found is None or current is None:
                    raise CompileError("Package tikz Error: rectangle needs a corner.")
                corner, i = found
                (x1, y1), (x2, y2) = current, corner
                rect = [(x1, y1), (x2, y1), (x2, y2), (x1, y2)]
                for k in range(4):
                    pic.lines.append((rect[k], rect[(k + 1) % 4]))
                if filled:
                    pic.fills.append(rect)
                current = corner
            elif value == "circle":
                r = _circle_radius(tokens, i)
                if r is None or current is None:
                    raise CompileError("Package tikz Error: circle needs a radius.")
                i += 1
                _emit_circle(pic, current, r, r, filled)
            elif value == "ellipse":
                axes = _ellipse_axes(tokens, i)
                if axes is None or current is None:
                    raise CompileError("Package tikz Error: ellipse needs axes.")
                i += 1
                _emit_circle(pic, current, axes[0], axes[1], filled)
            elif value == "arc":
                spec = _next_paren(tokens, i)
                if spec is None or current is None:
                    raise CompileError("Package tikz Error: malformed arc.")
                i += 1
                current = _emit_arc(pic, current, spec)
                points.append(current)
            elif value == "grid":
                found = _next_coord(tokens, i, pic, current)
                if found is None or current is None:
                    raise CompileError("Package tikz Error: grid needs a corner.")
                corner, i = found
                _emit_grid(pic, current, corner)
                current = corner
            elif value in ("--", "|-", "-|"):
                if (
                    i + 1 < len(tokens)
                    and tokens[i + 1] == ("op", "cycle")
                ):
                    nxt = start
                    i += 1
                else:
                    found = _next_coord(tokens, i, pic, current)
                    if found is None:
                        raise CompileError("Package tikz Error: path ends after --.")
                    nxt, i = found
                if nxt is None:
                    raise CompileError("Package tikz Error: path ends after --.")
                if current is None:
                    current = nxt
                else:
                    if value == "--":
                        pic.lines.append((current, nxt))
                    elif value == "|-":
                        mid = (current[0], nxt[1])
                        pic.lines.append((current, mid))
                        pic.lines.append((mid, nxt))
                    else:
                        mid = (nxt[0], current[1])
                        pic.lines.append((current, mid))
                        pic.lines.append((mid, nxt))
                points.append(nxt)
                current = nxt
            elif value == "node":
                grp, consumed = _node_on_path(tokens, i)
                pic.texts.append((current or (0.0, 0.0), _plain_text(grp)))
                i += consumed
        i += 1
    if filled and len(points) >= 3:
        pic.fills.append(points)


def _tokenize_path(text):
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\n":
            i += 1
            continue
        prefix = ""
        if ch == "+":
            m = re.match(r"(\+\+?)\s*\(", text[i:])
            if m:
                prefix = m.group(1)
                i += m.end() - 1  # position on the '('
                ch = "("
            else:
                i += 1
                continue
        if ch == "(":
            depth = 0
            for j in range(i, n):
                if text[j] == "(":
                    depth += 1
                elif text[j] == ")":
                    depth -= 1
                    if depth == 0:
                        tokens.append(("coord", prefix + text[i + 1 : j]))
                        i = j + 1
                        break
            else:
                raise CompileError("Package tikz Error: unbalanced parentheses.")
            continue
        if ch == "[":
            depth = 0
            for j in range(i, n):
                if text[j] == "[":
                    depth += 1
                elif text[j] == "]":
                    depth -= 1
                    if depth == 0:
                        tokens.append(("opts", text[i + 1 : j]))
                        i = j + 1
                        break
            else:
                raise CompileError("Package tikz Error: unbalanced brackets.")
            continue
        if ch == "{":
            grp = _take_group(text[i:])
            if grp is None:
                raise CompileError("Package tikz Error: unbalanced braces.")
            body, _ = grp
            tokens.append(("group", body))
            i += len(body) + 2
            continue
        if text.startswith("--", i):
            tokens.append(("op", "--"))
            i += 2
            continue
        if text.startswith("|-", i):
            tokens.append(("op", "|-"))
            i += 2
            continue
        if text.startswith("-|", i):
            tokens.append(("op", "-|"))
            i += 2
            continue
        m = re.match(r"[a-zA-Z]+", text[i:])
        if m:
            tokens.append(("op", m.group(0)))
            i += m.end()
            continue
        if ch == ";":
            break
        i += 1  # skip stray punctuation
    return tokens


def _next_coord(tokens, i, pic, current):
    """Resolve the coordinate following token ``i``; returns (point, index).

    Mid-path labels (``-- node {x} (1,1)``) are skipped here and handled
    when the main loop reaches them.
    """
    for j in range(i + 1, len(tokens)):
        kind, value = tokens[j]
        if kind == "coord":
            return _resolve_coord(value, pic, current), j
        if kind in ("opts", "group") or (kind == "op" and value == "node"):
            continue
        return None
    return None


def _next_paren(tokens, i):
    if i + 1 < len(tokens) and tokens[i + 1][0] == "coord":
        return tokens[i + 1][1]
    return None


def _circle_radius(tokens, i):
    if i + 1 < len(tokens):
        kind, value = tokens[i + 1]
        if kind == "coord":
            try:
                return abs(float(value.strip()))
            except ValueError:
                return None
        if kind == "opts":
            m = re.search(r"radius\s*=\s*([-\d.]+)", value)
            if m:
                return abs(float(m.group(1)))
    return None


def _ellipse_axes(tokens, i):
    if i + 1 < len(tokens) and tokens[i + 1][0] == "coord":
        m = re.match(r"\s*([-\d.]+)\s*and\s*([-\d.]+)\s*", tokens[i + 1][1])
        if m:
            return abs(float(m.group(1))), abs(float(m.group(2)))
    return None


def _node_on_path(tokens, i):
    consumed = 0
    for j in range(i + 1, min(i + 4, len(tokens))):
        consumed += 1
        if tokens[j][0] == "group":
            return tokens[j][1], consumed
        if tokens[j][0] not in ("opts",):
            break
    return "", 0


def _resolve_coord(spec, pic, current):
    spec = spec.strip()
    relative = False
    update = False
    if spec.startswith("++"):
        relative = update = True
        spec = spec[2:].strip()
    elif spec.startswith("+"):
        relative = True
        spec = spec[1:].strip()
    if ":" in spec and "," not in spec:
        try:
            ang_s, rad_s = spec.split(":", 1)
            ang = math.radians(float(ang_s))
            rad = float(rad_s)
            pt = (rad * math.cos(ang), rad * math.sin(ang))
        except ValueError:
            raise CompileError(f"Package tikz Error: bad polar coordinate ({spec}).")
    elif "," in spec:
        parts = _split_top_commas(spec)
        if len(parts) < 2:
            raise CompileError(f"Package tikz Error: bad coordinate ({spec}).")
        try:
            pt = (_num(parts[0]), _num(parts[1]))
        except ValueError:
            raise CompileError(f"Package tikz Error: bad coordinate ({spec}).")
    else:
        name = spec
        if name not in pic.named:
            raise CompileError(f"Package tikz Error: No shape named {name} is known.")
        pt = pic.named[name]
    if relative and current is not None:
        pt = (current[0] + pt[0], current[1] + pt[1])
    return pt


def _num(token):
    token = token.strip()
    m = re.match(r"([-+]?\d*\.?\d+)\s*(cm|pt|mm|in)?$", token)
    if not m:
        raise ValueError(token)
    v = float(m.group(1))
    unit = m.group(2)
    if unit == "pt":
        v /= 28.3465
    elif unit == "mm":
        v /= 10.0
    elif unit == "in":
        v *= 2.54
    return v


def _emit_circle(pic, center, rx, ry, filled):
    pts = []
    for k in range(64):
        a = 2 * math.pi * k / 64
        pts.append((center[0] + rx * math.cos(a), center[1] + ry * math.sin(a)))
    for k in range(64):
        pic.lines.append((pts[k], pts[(k + 1) % 64]))
    if filled:
        pic.fills.append(pts)


def _emit_arc(pic, current, spec):
    m = re.match(r"\s*([-\d.]+)\s*:\s*([-\d.]+)\s*:\s*([-\d.]+)\s*$", spec)
    if not m:
        raise CompileError(f"Package tikz Error: bad arc ({spec}).")
    a0 = math.radians(float(m.group(1)))
    a1 = math.radians(float(m.group(2)))
    r = float(m.group(3))
    cx = current[0] - r * math.cos(a0)
    cy = current[1] - r * math.sin(a0)
    prev = current
    steps = 16
    for k in range(1, steps + 1):
        a = a0 + (a1 - a0) * k / steps
        nxt = (cx + r * math.cos(a), cy + r * math.sin(a))
        pic.lines.append((prev, nxt))
        prev = nxt
    return prev


def _emit_grid(pic, a, b):
    x1, x2 = sorted((a[0], b[0]))
    y1, y2 = sorted((a[1], b[1]))
    x = math.ceil(x1)
    while x <= x2 + 1e-9:
        pic.lines.append(((x, y1), (x, y2)))
        x += 1
    y = math.ceil(y1)
    while y <= y2 + 1e-9:
        pic.lines.append(((x1, y), (x2, y)))
        y += 1


# --- rasterization ----------------------------------------------------------


class Canvas:
    def __init__(self, w, h):
        self.w = w
        self.h = h
        self.buf = bytearray(b"\xff" * (w * h * 3))

    def put(self, x, y, v=0):
        if 0 <= x < self.w and 0 <= y < self.h:
            i = (y * self.w + x) * 3
            self.buf[i] = self.buf[i + 1] = self.buf[i + 2] = v

    def dot(self, x, y, t=LINE_PX):
        half = t // 2
        for dy in range(-half, half + 1):
            for dx in range(-half, half + 1):
                self.put(x + dx, y + dy)

    def line(self, x0, y0, x1, y1):
        dx = abs(x1 - x0)
        dy = -abs(y1 - y0)
        sx = 1 if x0 < x1 else -1
        sy = 1 if y0 < y1 else -1
        err = dx + dy
        while True:
            self.dot(x0, y0)
            if x0 == x1 and y0 == y1:
                break
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x0 += sx
            if e2 <= dx:
                err += dx
                y0 += sy

    def fill_polygon(self, pts):
        if len(pts) < 3:
            return
        ys = [p[1] for p in pts]
        for y in range(max(0, min(ys)), min(self.h - 1, max(ys)) + 1):
            xs = []
            n = len(pts)
            for k in range(n):
                (x0, y0), (x1, y1) = pts[k], pts[(k + 1) % n]
                if (y0 <= y < y1) or (y1 <= y < y0):
                    t = (y - y0) / (y1 - y0)
                    xs.append(x0 + t * (x1 - x0))
            xs.sort()
            for a, b in zip(xs[::2], xs[1::2]):
                for x in range(max(0, int(math.ceil(a))), min(self.w - 1, int(b)) + 1):
                    self.put(x, y)

    def glyph_text(self, x, y, text):
        # schematic glyphs: 3x5 bit pattern per character, derived from
        # its codepoint; deterministic ink, not typography
        cx = x
        for ch in text[:40]:
            bits = zlib.crc32(ch.encode("utf-8")) & 0x7FFF
            for row in range(5):
                for col in range(3):
                    if bits >> (row * 3 + col) & 1:
                        for sy in range(2):
                            for sx in range(2):
                                self.put(cx + col * 2 + sx, y + row * 2 + sy)
            cx += 9
            if cx >= self.w:
                break


def render_pictures(pics, plain_chunks):
    all_x = []
    all_y = []
    for pic in pics:
        for (x0, y0), (x1, y1) in pic.lines:
            all_x += [x0, x1]
            all_y += [y0, y1]
        for pts in pic.fills:
            all_x += [p[0] for p in pts]
            all_y += [p[1] for p in pts]
        for (x, y), text in pic.texts:
            all_x += [x, x + 0.3 * max(1, len(text))]
            all_y += [y - 0.2, y + 0.2]
    has_drawables = bool(all_x) or any(t.strip() for t in plain_chunks)
    if not has_drawables and not any(pic.texts for pic in pics):
        if not pics:
            raise CompileError("No pages of output.")
    if not all_x:
        all_x, all_y = [0.0, 1.0], [0.0, 1.0]

    minx, maxx = min(all_x) - BORDER_CM, max(all_x) + BORDER_CM
    miny, maxy = min(all_y) - BORDER_CM, max(all_y) + BORDER_CM
    scale = PX_PER_CM
    w = int((maxx - minx) * scale) + 1
    h = int((maxy - miny) * scale) + 1
    if max(w, h) > MAX_CANVAS:
        scale *= MAX_CANVAS / max(w, h)
        w = max(1, int((maxx - minx) * scale) + 1)
        h = max(1, int((maxy - miny) * scale) + 1)
    text_rows = [t for t in plain_chunks if t.strip()]
    h_extra = 14 * len(text_rows)
    canvas = Canvas(max(w, 16), max(h, 16) + h_extra)

    def to_px(pt):
        return (
            int(round((pt[0] - minx) * scale)),
            int(round((maxy - pt[1]) * scale)),
        )

    for pic in pics:
        for pts in pic.fills:
            canvas.fill_polygon([to_px(p) for p in pts])
        for a, b in pic.lines:
            (x0, y0), (x1, y1) = to_px(a), to_px(b)
            canvas.line(x0, y0, x1, y1)
        for (pos, text) in pic.texts:
            if text:
                px, py = to_px(pos)
                canvas.glyph_text(px, py, text)
    for row, text in enumerate(text_rows):
        canvas.glyph_text(4, max(h, 16) + 2 + 14 * row, text[:60])
    return canvas


# --- PDF output -------------------------------------------------------------


def write_pdf(path, canvas):
    w_px, h_px = canvas.w, canvas.h
    w_pt = w_px * 72.0 / DPI
    h_pt = h_px * 72.0 / DPI
    img = zlib.compress(bytes(canvas.buf), 6)
    content = f"q {w_pt:.2f} 0 0 {h_pt:.2f} 0 0 cm /Im1 Do Q".encode()

    objects = [
        b"<< /Type /Catalog /Pages 2 0 R >>",
        b"<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
        (
            f"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 {w_pt:.2f} {h_pt:.2f}] "
            f"/Contents 4 0 R /Resources << /XObject << /Im1 5 0 R >> >> >>"
        ).encode(),
        b"<< /Length %d >>\nstream\n%s\nendstream" % (len(content), content),
        (
            b"<< /Type /XObject /Subtype /Image /Width %d /Height %d "
            b"/ColorSpace /DeviceRGB /BitsPerComponent 8 /Filter /FlateDecode "
            b"/Length %d >>\nstream\n" % (w_px, h_px, len(img))
        )
        + img
        + b"\nendstream",
    ]
    out = bytearray(b"%PDF-1.4\n")
    offsets = []
    for i, obj in enumerate(objects, start=1):
        offsets.append(len(out))
        out += b"%d 0 obj\n" % i + obj + b"\nendobj\n"
    xref_at = len(out)
    out += b"xref\n0 %d\n" % (len(objects) + 1)
    out += b"0000000000 65535 f \n"
    for off in offsets:
        out += b"%010d 00000 n \n" % off
    out += (
        b"trailer\n<< /Size %d /Root 1 0 R >>\nstartxref\n%d\n%%%%EOF\n"
        % (len(objects) + 1, xref_at)
    )
    with open(path, "wb") as fh:
        fh.write(bytes(out))


# --- driver -----------------------------------------------------------------


def compile_file(tex_path):
    base = tex_path[:-4] if tex_path.endswith(".tex") else tex_path
    log_lines = [f"This is minitex, a fallback TikZ compiler. Input: {tex_path}"]
    try:
        with open(tex_path, "r", encoding="utf-8", errors="replace") as fh:
            raw = fh.read()
        text = strip_comments(raw)
        body = check_structure(text)
        ranges = _picture_ranges(body)
        pics = [interpret_picture(body[b:e]) for _, b, e in ranges]
        plain = []
        pos = 0
        scrub = body
        for s, b, e in sorted(ranges):
            end_len = len("\\end{tikzpicture}")
            plain.append(scrub[pos:s])
            pos = e + end_len
        plain.append(scrub[pos:])
        plain_chunks = [
            re.sub(r"\\[a-zA-Z@]+|\\begin\{[^}]*\}|\\end\{[^}]*\}|[{}]", "", p).strip()
            for p in plain
        ]
        if not pics and not any(plain_chunks):
            raise CompileError("No pages of output.")
        canvas = render_pictures(pics, plain_chunks)
        write_pdf(base + ".pdf", canvas)
        log_lines.append(f"Output written on {base}.pdf (1 page).")
        status = 0
    except CompileError as exc:
        log_lines.append(f"! {exc}")
        log_lines.append("No pages of output.")
        status = 1
    except Exception as exc:  # never die without a log
        log_lines.append(f"! minitex internal error: {exc!r}")
        status = 1
    with open(base + ".log", "w", encoding="utf-8") as fh:
        fh.write("\n".join(log_lines) + "\n")
    if status != 0:
        sys.stderr.write(log_lines[-2] + "\n" if len(log_lines) > 1 else "error\n")
    return status


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    files = [a for a in argv if not a.startswith("-")]
    if not files:
        sys.stderr.write("usage: minitex [options] file.tex\n")
        return 2
    return compile_file(files[-1])


if __name__ == "__main__":
    sys.exit(main())

"""Wrap, compile, rasterize, and classify TikZ renders.

The compile step shells out to a TeX engine and a PDF-to-PNG converter.
Real binaries (pdflatex/xelatex/lualatex/tectonic, pdftoppm/pdftocairo/
gs/magick) are discovered on PATH and preferred; when neither half of a
real toolchain is available the bundled minitex/minipdf fallback pair is
used so the harness works on machines with no TeX installation.  Explicit
``TEX_BIN``/``PDF2PNG_BIN`` settings always win and must exist.

Every compile job owns a private sandbox directory and is removed
afterwards unless ``keep_artifacts`` is set; no job ever touches files
outside its sandbox.
"""

from __future__ import annotations

import enum
import os
import shlex
import shutil
import subprocess
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import ToolchainMissing
from ..images import RasterImage

# foreground detection: a pixel counts as ink when its gray value is more
# than BLANK_DELTA away from the dominant background; the image is blank
# when the ink fraction stays below BLANK_FRACTION
BLANK_DELTA = 5
BLANK_FRACTION = 0.001

LANGUAGE_PACKAGES = {
    "cjk": "\\usepackage{CJKutf8}",
    "chinese": "\\usepackage[UTF8]{ctex}",
    "japanese": "\\usepackage{CJKutf8}",
    "korean": "\\usepackage{kotex}",
    "cyrillic": "\\usepackage[T2A]{fontenc}",
    "greek": "\\usepackage[greek,english]{babel}",
    "vietnamese": "\\usepackage[utf8]{vietnam}",
}

_TEX_CANDIDATES = ("pdflatex", "xelatex", "lualatex", "tectonic")
_PDF2PNG_CANDIDATES = ("pdftoppm", "pdftocairo", "gs", "magick")


class RenderStatus(str, enum.Enum):
    COMPILED_NONBLANK = "compiled_nonblank"
    COMPILED_BLANK = "compiled_blank"
    COMPILE_ERROR = "compile_error"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class RenderResult:
    status: RenderStatus
    image: RasterImage | None
    log_excerpt: str
    wall_time: float
    engine: str = ""
    flags: tuple[str, ...] = ()

    def __post_init__(self):
        has_image = self.status in (
            RenderStatus.COMPILED_NONBLANK,
            RenderStatus.COMPILED_BLANK,
        )
        if has_image != (self.image is not None):
            raise ValueError("image must be present iff the compile produced one")

    @property
    def ok(self) -> bool:
        return self.status == RenderStatus.COMPILED_NONBLANK


@dataclass(frozen=True)
class RenderConfig:
    tex_cmd: tuple[str, ...] | None = None  # None: discover
    pdf2png_cmd: tuple[str, ...] | None = None
    dpi: int = 300
    timeout_s: float = 30.0
    jobs: int = 0  # 0: logical CPU count
    keep_artifacts: bool = False
    work_root: str | None = None
    languages: tuple[str, ...] = ()

    @classmethod
    def from_env(cls, env: dict | None = None, **overrides) -> "RenderConfig":
        env = dict(os.environ if env is None else env)
        kwargs = {}
        if env.get("TEX_BIN"):
            kwargs["tex_cmd"] = tuple(shlex.split(env["TEX_BIN"]))
        if env.get("PDF2PNG_BIN"):
            kwargs["pdf2png_cmd"] = tuple(shlex.split(env["PDF2PNG_BIN"]))
        if env.get("RENDER_DPI"):
            kwargs["dpi"] = int(env["RENDER_DPI"])
        if env.get("RENDER_TIMEOUT_S"):
            kwargs["timeout_s"] = float(env["RENDER_TIMEOUT_S"])
        if env.get("RENDER_JOBS"):
            kwargs["jobs"] = int(env["RENDER_JOBS"])
        kwargs.update(overrides)
        return cls(**kwargs)


def wrap_standalone(code: str, languages: tuple[str, ...] = ()) -> str:
    """Embed TikZ code in a standalone LaTeX document.

    Code already carrying a ``\\documentclass`` is returned unchanged.
    Code with a ``document`` environment but no class (typical repair
    output) gets a preamble prepended; bare fragments get the full
    wrapper.
    """
    if "\\documentclass" in code:
        return code
    preamble = ["\\documentclass[border=2pt]{standalone}", "\\usepackage{tikz}"]
    for hint in languages:
        if hint.startswith("\\"):
            preamble.append(hint)
        elif hint.lower() in LANGUAGE_PACKAGES:
            preamble.append(LANGUAGE_PACKAGES[hint.lower()])
    header = "\n".join(preamble)
    if "\\begin{document}" in code:
        return header + "\n" + code
    return header + "\n\\begin{document}\n" + code + "\n\\end{document}\n"


def is_blank(image: RasterImage) -> bool:
    """True when almost no pixel differs from the dominant background."""
    gray = image.to_gray_array()
    hist = np.bincount(gray.reshape(-1), minlength=256)
    background = int(hist.argmax())
    ink = np.count_nonzero(np.abs(gray.astype(np.int16) - background) > BLANK_DELTA)
    return ink / gray.size < BLANK_FRACTION


def _which(cmd: str) -> str | None:
    if os.path.sep in cmd:
        return cmd if os.path.isfile(cmd) and os.access(cmd, os.X_OK) else None
    return shutil.which(cmd)


_HERE = os.path.dirname(os.path.abspath(__file__))


def _fallback_tex() -> tuple[str, ...]:
    # by file path with -S: the tool is stdlib-only, skipping site
    # startup saves real time at corpus scale
    return (sys.executable, "-S", os.path.join(_HERE, "minitex.py"), "-interaction=nonstopmode")


def _fallback_pdf2png() -> tuple[str, ...]:
    return (sys.executable, "-S", os.path.join(_HERE, "minipdf.py"))


@dataclass
class Toolchain:
    tex: tuple[str, ...]
    pdf2png: tuple[str, ...]
    engine_name: str
    fallback: bool


def resolve_toolchain(config: RenderConfig) -> Toolchain:
    """Pick engine and converter; raise ToolchainMissing for bad explicit paths."""
    explicit_tex = config.tex_cmd
    explicit_conv = config.pdf2png_cmd
    if explicit_tex:
        if _which(explicit_tex[0]) is None:
            raise ToolchainMissing(f"TEX_BIN not found: {explicit_tex[0]}")
    if explicit_conv:
        if _which(explicit_conv[0]) is None:
            raise ToolchainMissing(f"PDF2PNG_BIN not found: {explicit_conv[0]}")

    found_tex = None
    for cand in _TEX_CANDIDATES:
        if _which(cand):
            found_tex = (cand,)
            break
    found_conv = None
    for cand in _PDF2PNG_CANDIDATES:
        if _which(cand):
            found_conv = (cand,)
            break

    tex = explicit_tex or found_tex
    conv = explicit_conv or found_conv
    # only pair a real engine with a real converter; otherwise use the
    # bundled pair end to end so PDFs stay readable by their converter
    if tex is None or conv is None:
        tex = explicit_tex or _fallback_tex()
        conv = explicit_conv or _fallback_pdf2png()
    fallback = "minitex" in " ".join(tex)
    name = "minitex" if fallback else os.path.basename(tex[0])
    return Toolchain(tex=tuple(tex), pdf2png=tuple(conv), engine_name=name, fallback=fallback)


def _tex_argv(chain: Toolchain, texfile: str) -> list[str]:
    base = os.path.basename(chain.tex[0])
    argv = list(chain.tex)
    if base in ("pdflatex", "xelatex", "lualatex"):
        argv += ["-interaction=nonstopmode", "-halt-on-error"]
    return argv + [texfile]


def _pdf2png_argv(chain: Toolchain, pdf: str, out_base: str, dpi: int) -> tuple[list[str], str]:
    base = os.path.basename(chain.pdf2png[0])
    if base == "pdftoppm":
        return list(chain.pdf2png) + ["-png", "-r", str(dpi), "-singlefile", pdf, out_base], out_base + ".png"
    if base == "pdftocairo":
        return list(chain.pdf2png) + ["-png", "-singlefile", "-r", str(dpi), pdf, out_base], out_base + ".png"
    if base == "gs":
        out = out_base + ".png"
        return list(chain.pdf2png) + [
            "-dSAFER", "-dBATCH", "-dNOPAUSE", "-sDEVICE=png16m",
            f"-r{dpi}", "-dFirstPage=1", "-dLastPage=1",
            f"-sOutputFile={out}", pdf,
        ], out
    if base == "magick":
        out = out_base + ".png"
        return list(chain.pdf2png) + ["-density", str(dpi), pdf + "[0]", out], out
    # bundled fallback converter
    out = out_base + ".png"
    return list(chain.pdf2png) + [pdf, out, "-r", str(dpi)], out


class RenderHarness:
    """Compiles TikZ/LaTeX sources in isolated sandboxes.

    Shareable across threads; each job runs in its own temp directory.
    """

    def __init__(self, config: RenderConfig | None = None):
        self.config = config or RenderConfig.from_env()
        self.toolchain = resolve_toolchain(self.config)
        jobs = self.config.jobs or os.cpu_count() or 1
        self._jobs = max(1, jobs)

    def wrap(self, code: str) -> str:
        return wrap_standalone(code, self.config.languages)

    def render(self, code: str) -> RenderResult:
        """wrap -> compile -> rasterize -> blankness classification."""
        return self.compile_and_rasterize(self.wrap(code))

    def render_many(self, codes: list[str]) -> list[RenderResult]:
        if not codes:
            return []
        with ThreadPoolExecutor(max_workers=self._jobs) as pool:
            return list(pool.map(self.render, codes))

    def compile_and_rasterize(self, latex: str, workdir: str | None = None) -> RenderResult:
        start = time.monotonic()
        sandbox = tempfile.mkdtemp(prefix="render-", dir=workdir or self.config.work_root)
        flags: list[str] = []
        if self.toolchain.fallback:
            flags.append("fallback-toolchain")
        try:
            texfile = os.path.join(sandbox, "doc.tex")
            with open(texfile, "w", encoding="utf-8") as fh:
                fh.write(latex)

            argv = _tex_argv(self.toolchain, "doc.tex")
            try:
                proc = subprocess.run(
                    argv,
                    cwd=sandbox,
                    stdin=subprocess.DEVNULL,
                    capture_output=True,
                    timeout=self.config.timeout_s,
                )
            except subprocess.TimeoutExpired:
                return RenderResult(
                    status=RenderStatus.TIMEOUT,
                    image=None,
                    log_excerpt=f"compile exceeded {self.config.timeout_s}s",
                    wall_time=time.monotonic() - start,
                    engine=self.toolchain.engine_name,
                    flags=tuple(flags),
                )
            pdf = os.path.join(sandbox, "doc.pdf")
            if proc.returncode != 0 or not os.path.exists(pdf):
                return RenderResult(
                    status=RenderStatus.COMPILE_ERROR,
                    image=None,
                    log_excerpt=self._log_excerpt(sandbox, proc),
                    wall_time=time.monotonic() - start,
                    engine=self.toolchain.engine_name,
                    flags=tuple(flags),
                )
            if _page_count(pdf) > 1:
                flags.append("multipage-pdf")

            conv_argv, png = _pdf2png_argv(
                self.toolchain, "doc.pdf", os.path.join(sandbox, "doc"), self.config.dpi
            )
            conv = subprocess.run(
                conv_argv,
                cwd=sandbox,
                stdin=subprocess.DEVNULL,
                capture_output=True,
                timeout=self.config.timeout_s,
            )
            if conv.returncode != 0 or not os.path.exists(png):
                return RenderResult(
                    status=RenderStatus.COMPILE_ERROR,
                    image=None,
                    log_excerpt="pdf-to-png conversion failed: "
                    + conv.stderr.decode("utf-8", "replace")[-2000:],
                    wall_time=time.monotonic() - start,
                    engine=self.toolchain.engine_name,
                    flags=tuple(flags),
                )
            image = RasterImage.from_file(png)
            status = (
                RenderStatus.COMPILED_BLANK if is_blank(image) else RenderStatus.COMPILED_NONBLANK
            )
            return RenderResult(
                status=status,
                image=image,
                log_excerpt="",
                wall_time=time.monotonic() - start,
                engine=self.toolchain.engine_name,
                flags=tuple(flags),
            )
        finally:
            if not self.config.keep_artifacts:
                shutil.rmtree(sandbox, ignore_errors=True)

    @staticmethod
    def _log_excerpt(sandbox: str, proc: subprocess.CompletedProcess) -> str:
        log = os.path.join(sandbox, "doc.log")
        if os.path.exists(log):
            with open(log, "r", encoding="utf-8", errors="replace") as fh:
                lines = fh.read().splitlines()
            return "\n".join(lines[-40:])
        return (proc.stdout + proc.stderr).decode("utf-8", "replace")[-2000:]


def _page_count(pdf_path: str) -> int:
    try:
        with open(pdf_path, "rb") as fh:
            data = fh.read()
    except OSError:
        return 1
    import re as _re

    return max(1, len(_re.findall(rb"/Type\s*/Page[^s]", data)))

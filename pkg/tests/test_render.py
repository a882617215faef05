"""Render harness tests: wrapping, blankness, compile statuses, sandboxing."""

import os

import numpy as np
import pytest

from tikzforge.images import RasterImage
from tikzforge.render import (
    RenderConfig,
    RenderHarness,
    RenderResult,
    RenderStatus,
    is_blank,
    wrap_standalone,
)


@pytest.fixture(scope="module")
def harness():
    return RenderHarness(RenderConfig(timeout_s=15))


# --- wrap_standalone ---------------------------------------------------------


def test_wrap_bare_tikzpicture():
    out = wrap_standalone("\\begin{tikzpicture}\\draw (0,0);\\end{tikzpicture}")
    assert out.startswith("\\documentclass")
    assert "standalone" in out.split("\n")[0]
    assert out.count("\\begin{document}") == 1


def test_wrap_preserves_existing_documentclass():
    src = "\\documentclass{article}\n\\begin{document}x\\end{document}"
    assert wrap_standalone(src) == src


def test_wrap_adds_language_packages():
    out = wrap_standalone("\\begin{tikzpicture}\\end{tikzpicture}", languages=("cjk",))
    assert "CJKutf8" in out


def test_wrap_document_env_without_class_gets_preamble_only():
    src = "\\begin{document}\n\\begin{tikzpicture}\\end{tikzpicture}\n\\end{document}"
    out = wrap_standalone(src)
    assert out.count("\\begin{document}") == 1
    assert out.startswith("\\documentclass")


# --- is_blank ---------------------------------------------------------------


def _white(w, h):
    return RasterImage.from_array(np.full((h, w), 255, dtype=np.uint8))


def test_all_white_is_blank():
    assert is_blank(_white(100, 100))


def test_black_square_one_percent_not_blank():
    arr = np.full((100, 100), 255, dtype=np.uint8)
    arr[10:20, 10:20] = 0
    assert not is_blank(RasterImage.from_array(arr))


def test_nine_dark_pixels_below_threshold_blank():
    arr = np.full((100, 100), 255, dtype=np.uint8)
    arr.flat[:9] = 0  # 0.09% < 0.1%
    assert is_blank(RasterImage.from_array(arr))


def test_small_delta_is_background_noise():
    arr = np.full((50, 50), 250, dtype=np.uint8)
    arr[0:25, :] = 253  # within delta 5 of the dominant value
    assert is_blank(RasterImage.from_array(arr))


# --- RenderResult invariants --------------------------------------------------


def test_result_image_iff_compiled():
    with pytest.raises(ValueError):
        RenderResult(status=RenderStatus.COMPILE_ERROR, image=_white(4, 4), log_excerpt="", wall_time=0)
    with pytest.raises(ValueError):
        RenderResult(status=RenderStatus.COMPILED_BLANK, image=None, log_excerpt="", wall_time=0)


# --- compile paths ------------------------------------------------------------


def test_minimal_draw_compiles_nonblank(harness):
    r = harness.render("\\begin{tikzpicture}\\draw (0,0) -- (1,1);\\end{tikzpicture}")
    assert r.status == RenderStatus.COMPILED_NONBLANK
    assert r.image is not None
    assert r.image.width > 0 and r.image.channels in (1, 3)


def test_undefined_macro_is_compile_error_with_log(harness):
    r = harness.render("\\begin{tikzpicture}\\undefinedmacro\\end{tikzpicture}")
    assert r.status == RenderStatus.COMPILE_ERROR
    assert r.image is None
    assert "undefinedmacro" in r.log_excerpt.lower() or "!" in r.log_excerpt


def test_infinite_loop_hits_timeout():
    h = RenderHarness(RenderConfig(timeout_s=2))
    r = h.render("\\loop\\iftrue\\repeat")
    assert r.status == RenderStatus.TIMEOUT
    assert r.wall_time >= 2


def test_empty_code_golden_status(harness):
    # pinned: the wrapper around empty code yields a document with no
    # pages, which the toolchain reports as a compile error
    r = harness.render("")
    assert r.status == RenderStatus.COMPILE_ERROR


def test_render_never_raises_on_garbage(harness):
    r = harness.render("\x00\x01 not latex at all }{][")
    assert r.status in (RenderStatus.COMPILE_ERROR, RenderStatus.COMPILED_BLANK)


def test_blank_classification_roundtrip(harness):
    r = harness.render("\\begin{tikzpicture}\\end{tikzpicture}")
    assert r.status in (RenderStatus.COMPILED_BLANK, RenderStatus.COMPILE_ERROR)


def test_same_code_same_verdict(harness):
    code = "\\begin{tikzpicture}\\draw (0,0) circle (1);\\end{tikzpicture}"
    r1, r2 = harness.render(code), harness.render(code)
    assert r1.status == r2.status == RenderStatus.COMPILED_NONBLANK
    assert r1.image.to_png_bytes() == r2.image.to_png_bytes()


def test_sandboxes_are_cleaned(tmp_path, harness):
    cfg = RenderConfig(timeout_s=15, work_root=str(tmp_path))
    h = RenderHarness(cfg)
    h.render("\\begin{tikzpicture}\\draw (0,0) -- (1,0);\\end{tikzpicture}")
    h.render("\\begin{tikzpicture}\\undefined\\end{tikzpicture}")
    assert os.listdir(tmp_path) == []


def test_keep_artifacts(tmp_path):
    cfg = RenderConfig(timeout_s=15, work_root=str(tmp_path), keep_artifacts=True)
    h = RenderHarness(cfg)
    h.render("\\begin{tikzpicture}\\draw (0,0) -- (1,0);\\end{tikzpicture}")
    leftovers = os.listdir(tmp_path)
    assert len(leftovers) == 1
    assert any(f.endswith(".tex") for f in os.listdir(tmp_path / leftovers[0]))


def test_render_many_preserves_order(harness):
    codes = [
        "\\begin{tikzpicture}\\draw (0,0) -- (1,1);\\end{tikzpicture}",
        "\\begin{tikzpicture}\\broken\\end{tikzpicture}",
        "\\begin{tikzpicture}\\draw (0,0) circle (1);\\end{tikzpicture}",
    ]
    results = harness.render_many(codes)
    assert [r.status for r in results] == [
        RenderStatus.COMPILED_NONBLANK,
        RenderStatus.COMPILE_ERROR,
        RenderStatus.COMPILED_NONBLANK,
    ]


def test_toolchain_missing_for_bad_explicit_bin():
    from tikzforge.errors import ToolchainMissing

    with pytest.raises(ToolchainMissing):
        RenderHarness(RenderConfig(tex_cmd=("/does/not/exist/pdflatex",)))


def test_config_from_env_overrides():
    cfg = RenderConfig.from_env(
        env={"RENDER_DPI": "150", "RENDER_TIMEOUT_S": "7", "TEX_BIN": "pdflatex -foo"}
    )
    assert cfg.dpi == 150
    assert cfg.timeout_s == 7
    assert cfg.tex_cmd == ("pdflatex", "-foo")

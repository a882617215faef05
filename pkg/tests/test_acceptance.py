"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.  Budgets are asserted, so a pathologically slow
environment fails loudly instead of silently degrading.
"""

import json
import math
import random
import time
from pathlib import Path

import mpmath
import numpy as np
import pytest

from tikzforge.augment import AugmentConfig, augment
from tikzforge.document import parse_document, serialize, split_statements
from tikzforge.document import canonicalize
from tikzforge.images import RasterImage
from tikzforge.metrics import fid, mse, psnr, ssim
from tikzforge.pipeline import (
    MockJudge,
    ReasoningContext,
    RunRoot,
    ScriptedMockClient,
    build_candidates_from_pool,
    build_instruct_dataset,
    build_refined_set,
    fixed_clock,
    solve_with_auxiliary,
)
from tikzforge.pipeline.clients import image_key
from tikzforge.pipeline.driver import run_refine_loop
from tikzforge.pipeline.manifest import DatasetManifest
from tikzforge.pipeline.synthetic import build_pool, corrupted_corpus
from tikzforge.records import sha256_text
from tikzforge.render import RenderConfig, RenderHarness
from tikzforge.repair import repair
from tikzforge.scorer import ReferenceEmbedder
from tikzforge.transform import max_removals, remove_statements

CORPUS_DIR = Path(__file__).parent / "fixtures" / "corpus"


@pytest.fixture(scope="module")
def harness():
    return RenderHarness(RenderConfig(timeout_s=20))


def report(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# Repair suite: 500 corrupted documents, balance + idempotence + CSR lift


def test_acceptance_repair_suite(harness):
    start = time.monotonic()
    triples = corrupted_corpus(seed=2024, count=500)

    balanced = 0
    idempotent = 0
    unique_doc_pair = 0
    repaired_texts = []
    repaired_cleans = []
    for clean, fault, corrupted in triples:
        fixed, _ = repair(corrupted)
        repaired_texts.append(fixed)
        repaired_cleans.append(repair(clean)[0])
        if parse_document(fixed).balanced:
            balanced += 1
        if fixed.count("\\begin{document}") == 1 and fixed.count("\\end{document}") == 1:
            unique_doc_pair += 1
        twice, _ = repair(fixed)
        if twice == fixed:
            idempotent += 1

    def streamed_csr(texts):
        # render one at a time: keeping 500 rasters alive would hold
        # gigabytes of pixels for no reason
        return sum(harness.render(t).ok for t in texts) / len(texts)

    corrupted_csr = streamed_csr([c for _, _, c in triples])
    repaired_csr = streamed_csr(repaired_texts)
    # monotone safety: compiling input keeps compiling after repair
    clean_csr = streamed_csr(repaired_cleans)
    elapsed = time.monotonic() - start

    report(
        "repair.balance",
        balanced == 500,
        f"{balanced}/500 environment-balanced outputs",
    )
    report(
        "repair.uniqueness",
        unique_doc_pair == 500,
        f"{unique_doc_pair}/500 with exactly one document pair",
    )
    report(
        "repair.idempotence",
        idempotent == 500,
        f"{idempotent}/500 textually idempotent",
    )
    report(
        "repair.csr_lift",
        corrupted_csr < 0.5 and repaired_csr >= 0.95,
        f"CSR corrupted {corrupted_csr:.1%} -> repaired {repaired_csr:.1%}",
    )
    report(
        "repair.monotone_safety",
        clean_csr == 1.0,
        f"repair of known-good bases keeps CSR at {clean_csr:.1%}",
    )
    report("repair.runtime", elapsed <= 600, f"{elapsed:.1f}s (budget 600s)")


# ---------------------------------------------------------------------------
# Round-trip suite: corpus canonical equality + statement fuzz


def test_acceptance_roundtrip_suite():
    start = time.monotonic()
    files = sorted(CORPUS_DIR.glob("*.tikz"))
    assert len(files) == 20, f"expected 20 corpus files, found {len(files)}"
    exact = 0
    for path in files:
        raw = path.read_text(encoding="utf-8")
        if serialize(parse_document(raw)) == canonicalize(raw):
            exact += 1
    report("roundtrip.corpus", exact == 20, f"{exact}/20 files round-trip canonically")

    rng = random.Random(777)
    pieces = [
        "\\draw (0,0) -- (1,1);",
        "\\node at (2,2) {a;b};",
        "\\fill[red] (3,3) circle (1);",
        "% comment; with semicolon\n",
        "\\draw[dash pattern=on 2pt off 1pt;] (0,0);",
        "\n",
        "  ",
        "\\path (0,0) rectangle (1,1);",
        "\\node {nested {deep; group}};",
        "\\draw (0,0) --",
    ]
    partition_ok = 0
    depth0_ok = 0
    trials = 10_000
    for _ in range(trials):
        body = "".join(rng.choice(pieces) for _ in range(rng.randint(1, 8)))
        stmts = split_statements(body)
        if "".join(s.text for s in stmts) == body:
            partition_ok += 1
        # inserting a ';' inside a balanced brace group never changes count
        brace_at = body.find("{")
        if brace_at < 0:
            depth0_ok += 1
        else:
            mutated = body[: brace_at + 1] + ";" + body[brace_at + 1 :]
            if len(split_statements(mutated)) == len(stmts):
                depth0_ok += 1
    elapsed = time.monotonic() - start
    report(
        "roundtrip.partition",
        partition_ok == trials,
        f"{partition_ok}/{trials} fuzzed bodies tile exactly",
    )
    report(
        "roundtrip.depth0",
        depth0_ok == trials,
        f"{depth0_ok}/{trials} brace-protected semicolon insertions",
    )
    report("roundtrip.runtime", elapsed <= 60, f"{elapsed:.1f}s (budget 60s)")


# ---------------------------------------------------------------------------
# Transform suite: 1000 seeded runs over L in [2, 60]


def make_doc(n_statements: int) -> str:
    lines = ["\\begin{tikzpicture}"]
    for i in range(n_statements):
        lines.append(f"\\draw ({i},0) -- ({i},1);")
    lines.append("\\end{tikzpicture}")
    return "\n".join(lines)


def test_acceptance_transform_suite():
    start = time.monotonic()
    rng = random.Random(31337)
    bounds_ok = 0
    subseq_ok = 0
    determinism_ok = 0
    trials = 1000
    docs = {}
    for _ in range(trials):
        n = rng.randint(2, 60)
        doc = docs.setdefault(n, parse_document(make_doc(n)))
        seed = rng.getrandbits(32)
        out = remove_statements(doc, seed)
        k = len(out.removed_indices)
        if 1 <= k <= max_removals(n):
            bounds_ok += 1
        original = [s.text.strip() for s in doc.graphical_statements()]
        survivors = [
            s.text.strip()
            for s in parse_document(out.result_code).graphical_statements()
        ]
        if survivors == [t for i, t in enumerate(original) if i not in out.removed_indices]:
            subseq_ok += 1
        if remove_statements(doc, seed).removed_indices == out.removed_indices:
            determinism_ok += 1
    elapsed = time.monotonic() - start
    report("transform.bounds", bounds_ok == trials, f"{bounds_ok}/{trials} within [1, max]")
    report("transform.subsequence", subseq_ok == trials, f"{subseq_ok}/{trials} strict subsequences")
    report("transform.determinism", determinism_ok == trials, f"{determinism_ok}/{trials} seed-stable")
    report("transform.runtime", elapsed <= 60, f"{elapsed:.1f}s (budget 60s)")


# ---------------------------------------------------------------------------
# Metrics suite: identities, closed forms, extended-precision oracle


def _oracle_frechet(mu_a, cov_a, mu_b, cov_b, dps=50):
    with mpmath.workdps(dps):
        ca = mpmath.matrix(cov_a.tolist())
        cb = mpmath.matrix(cov_b.tolist())
        eigenvalues, _ = mpmath.eig(ca * cb)
        trace_sqrt = mpmath.mpf(0)
        for ev in eigenvalues:
            re = mpmath.re(ev)
            trace_sqrt += mpmath.sqrt(re) if re > 0 else 0
        diff = sum((mpmath.mpf(x) - mpmath.mpf(y)) ** 2 for x, y in zip(mu_a, mu_b))
        tr = sum(mpmath.mpf(cov_a[i, i]) + mpmath.mpf(cov_b[i, i]) for i in range(cov_a.shape[0]))
        return float(diff + tr - 2 * trace_sqrt)


def test_acceptance_metrics_suite():
    start = time.monotonic()
    rng = np.random.default_rng(99)

    identity_ok = True
    for _ in range(30):
        w, h = int(rng.integers(6, 48)), int(rng.integers(6, 48))
        a = rng.integers(0, 256, (h, w), dtype=np.int64).astype(np.uint8)
        b = rng.integers(0, 256, (h, w), dtype=np.int64).astype(np.uint8)
        identity_ok &= mse(a, a) == 0.0
        identity_ok &= abs(ssim(a, a) - 1.0) < 1e-9
        identity_ok &= mse(a, b) == mse(b, a)
        identity_ok &= abs(ssim(a, b) - ssim(b, a)) < 1e-12
        identity_ok &= -1.0 <= ssim(a, b) <= 1.0
        identity_ok &= psnr(a, a) == math.inf
    report("metrics.identities", identity_ok, "mse/ssim/psnr identities and symmetry on 30 fuzzed pairs")

    x = rng.normal(size=(32, 6))
    self_fid = fid(x, x)
    report("metrics.fid_self", self_fid <= 1e-6, f"FID(X,X) = {self_fid:.2e}")

    h = math.sqrt(0.5)
    s = math.sqrt(2.0)
    fid4 = fid([[-h], [h]], [[2 - h], [2 + h]])
    fid1 = fid([[-h], [h]], [[-s], [s]])
    report(
        "metrics.fid_closed_forms",
        abs(fid4 - 4.0) <= 1e-9 and abs(fid1 - 1.0) <= 1e-9,
        f"univariate constructions: {fid4:.12f} (want 4), {fid1:.12f} (want 1)",
    )

    oracle_ok = True
    worst = 0.0
    for _ in range(12):
        d = int(rng.integers(1, 9))
        n = int(rng.integers(max(3, d + 1), 65))
        m = int(rng.integers(max(3, d + 1), 65))
        a = rng.normal(size=(n, d)) @ rng.normal(size=(d, d)) + rng.normal(size=d)
        b = rng.normal(size=(m, d)) @ rng.normal(size=(d, d)) + rng.normal(size=d)
        got = fid(a, b)
        want = _oracle_frechet(
            a.mean(axis=0),
            np.atleast_2d(np.cov(a, rowvar=False, ddof=1)),
            b.mean(axis=0),
            np.atleast_2d(np.cov(b, rowvar=False, ddof=1)),
        )
        rel = abs(got - want) / max(abs(want), 1e-12)
        worst = max(worst, rel)
        oracle_ok &= rel <= 1e-5 or abs(got - want) <= 1e-8
    elapsed = time.monotonic() - start
    report("metrics.fid_oracle", oracle_ok, f"worst relative error {worst:.2e} over 12 random sets")
    report("metrics.runtime", elapsed <= 60, f"{elapsed:.1f}s (budget 60s)")


# ---------------------------------------------------------------------------
# Augment suite: dims, range, determinism, parameter capture, identity limits


def test_acceptance_augment_suite():
    start = time.monotonic()
    arr = np.full((80, 120, 3), 255, dtype=np.uint8)
    arr[20:60, 30:90] = 0
    arr[30:40, 50:70] = (170, 40, 90)
    img = RasterImage.from_array(arr)
    cfg = AugmentConfig()
    intervals = {
        "offset": cfg.offset_range_px,
        "illum_base": cfg.illum_base,
        "illum_range": cfg.illum_range,
        "illum_dark": cfg.illum_dark_band,
        "illum_bright": cfg.illum_bright_band,
        "blur_radius": cfg.blur_radius,
        "contrast": cfg.contrast,
        "saturation": cfg.saturation,
        "k1": cfg.k1,
        "k2": cfg.k2,
        "rotation_deg": cfg.rotation_deg,
    }

    dims_ok = 0
    range_ok = 0
    captured_ok = 0
    trials = 1000
    for seed in range(trials):
        trace = {}
        out = augment(img, seed=seed, trace=trace)
        if (out.width, out.height) == (img.width, img.height):
            dims_ok += 1
        data = out.to_array()
        if data.min() >= 0 and data.max() <= 255:
            range_ok += 1
        in_range = all(
            intervals[key][0] <= v <= intervals[key][1]
            for key, values in trace.items()
            if key not in ("illum_direction", "blur_skipped")
            for v in values
        )
        if in_range:
            captured_ok += 1

    determinism = all(
        augment(img, seed=s).pixels == augment(img, seed=s).pixels for s in (0, 17, 991)
    )

    from tikzforge.augment import adjust_colors, expand_canvas, radial_distort, rotate, warp_with_offsets

    base = img.to_array()
    bordered = expand_canvas(base, 100)
    identity_ok = (
        np.array_equal(warp_with_offsets(bordered, 100, np.zeros((4, 2))), bordered)
        and np.array_equal(radial_distort(base, 0.0, 0.0), base)
        and np.array_equal(rotate(base, 0.0), base)
        and np.array_equal(adjust_colors(base, 1.0, 1.0), base)
    )
    elapsed = time.monotonic() - start

    report("augment.dimensions", dims_ok == trials, f"{dims_ok}/{trials} dimension-preserving")
    report("augment.range", range_ok == trials, f"{range_ok}/{trials} inside [0,255]")
    report("augment.parameters", captured_ok == trials, f"{captured_ok}/{trials} parameter draws in-interval")
    report("augment.determinism", determinism, "byte-equal across repeat runs for 3 seeds")
    report("augment.identity_limits", identity_ok, "zero-parameter stages are pixel-exact identities")
    report("augment.runtime", elapsed <= 120, f"{elapsed:.1f}s (budget 120s)")


# ---------------------------------------------------------------------------
# Pipeline dry run: invariants, determinism, kill/resume


def _echo_clients(pool):
    table = {image_key(img): code for code, img in pool}
    return ScriptedMockClient("image_to_tikz", by_image_sha=table, model_name="mock-echo")


def _dry_run(where, pool, harness, seed=7, iterations=2):
    root = RunRoot(where)
    clock = fixed_clock()
    snapshot = {"tau": 0.8, "seed": seed, "max_fraction": 0.4}
    candidates = build_candidates_from_pool(
        root, [img for _, img in pool], snapshot=snapshot, clock=clock
    )
    final, summary = run_refine_loop(
        root,
        candidates,
        _echo_clients(pool),
        ReferenceEmbedder(),
        harness,
        iterations=iterations,
        tau=0.8,
        max_iterations=4,
        seed=seed,
        variants_per_sample=2,
        snapshot=snapshot,
        clock=clock,
    )
    annotator = ScriptedMockClient(
        "vlm", default="Remove the element near region {image_sha}.", model_name="mock-annotator"
    )
    instruct, _ = build_instruct_dataset(
        root, final, annotator, MockJudge(), harness, seed=seed, threshold=8.0,
        snapshot=snapshot, clock=clock,
    )
    return root, final, instruct


def test_acceptance_pipeline_dry_run(harness, tmp_path):
    start = time.monotonic()
    pool = build_pool(seed=4242, size=50, renderer=harness)
    assert len(pool) == 50, f"pool construction fell short: {len(pool)}"

    root, final, instruct = _dry_run(tmp_path / "run1", pool, harness)

    # invariant 1: filter soundness
    refined_entries = [e for e in final.entries if e.origin == "refined"]
    soundness = all(e.score is not None and e.score > 0.8 for e in refined_entries)
    report(
        "pipeline.filter_soundness",
        soundness and refined_entries,
        f"{len(refined_entries)} refined entries all score > 0.8",
    )

    # invariant 2: union monotonicity across iterations
    d1 = DatasetManifest.load(root.root / "manifests" / "d1.jsonl")
    d2 = DatasetManifest.load(root.root / "manifests" / "d2.jsonl")
    monotone = len(d2) >= len(d1) and d1.ids() <= d2.ids()
    report("pipeline.monotonicity", monotone, f"|D1|={len(d1)} <= |D2|={len(d2)}, ids preserved")

    # invariant 3: transformed entries all compiled non-blank
    transformed = [e for e in d2.entries if e.origin == "transformed"]
    compilable = all(e.render_status == "compiled_nonblank" for e in transformed)
    report(
        "pipeline.compilability",
        compilable and transformed,
        f"{len(transformed)} transformed entries compiled non-blank",
    )

    # invariant 4: instruct pairing (pre-transform code, post-transform image)
    final_codes = {e.code_sha256 for e in final.entries if e.code_sha256}
    pairing = len(instruct) > 0
    import hashlib

    for e in instruct.entries:
        pairing &= e.code_sha256 in final_codes
        original_code = root.read_code(e.code_path)
        sub_seed = int(
            hashlib.sha256(f"ins:7:{e.code_sha256}".encode()).hexdigest()[:12], 16
        )
        outcome = remove_statements(parse_document(original_code), sub_seed, 0.4)
        rerender = harness.render(outcome.result_code)
        pairing &= rerender.ok and (
            hashlib.sha256(rerender.image.to_png_bytes()).hexdigest() == e.image_sha256
        )
    report(
        "pipeline.instruct_pairing",
        pairing,
        f"{len(instruct)} triples pair pre-transform code with post-transform render",
    )

    # invariant 5: auxiliary-line call counts with scripted mocks
    problem = ReasoningContext(problem_text="Find the angle.", problem_image=pool[0][1])
    vlm_none = ScriptedMockClient("vlm", sequence=["None", "Answer: 1"])
    ins_none = ScriptedMockClient("instruct", default=pool[1][0])
    out_none = solve_with_auxiliary(problem, vlm_none, ins_none, harness)
    none_branch = vlm_none.calls == 2 and ins_none.calls == 0 and not out_none.used_auxiliary

    problem2 = ReasoningContext(problem_text="Find the angle.", problem_image=pool[0][1])
    vlm_aux = ScriptedMockClient("vlm", sequence=["Draw the diagonal.", "Answer: 2"])
    ins_aux = ScriptedMockClient("instruct", default=pool[1][0])
    out_aux = solve_with_auxiliary(problem2, vlm_aux, ins_aux, harness)
    aux_branch = vlm_aux.calls == 2 and ins_aux.calls == 1 and out_aux.used_auxiliary
    report(
        "pipeline.alg_call_counts",
        none_branch and aux_branch,
        "None branch: 2 VLM calls; aux branch: 2 VLM + 1 instruct + 1 render",
    )

    # byte-identical rerun
    root2, _, _ = _dry_run(tmp_path / "run2", pool, harness)
    names = ["candidates", "refined_1", "transform_1", "d1", "refined_2", "transform_2", "d2", "instruct"]
    identical = all(
        (root.root / "manifests" / f"{n}.jsonl").read_bytes()
        == (root2.root / "manifests" / f"{n}.jsonl").read_bytes()
        for n in names
    )
    report("pipeline.determinism", identical, f"{len(names)} manifests byte-identical across reruns")

    # kill/resume: crash mid-refine, resume, compare to clean run
    class Crasher:
        def __init__(self, inner, n):
            self.inner, self.n = inner, n

        def render(self, code):
            if self.n <= 0:
                raise KeyboardInterrupt()
            self.n -= 1
            return self.inner.render(code)

    clock = fixed_clock()
    root3 = RunRoot(tmp_path / "run3")
    cands3 = build_candidates_from_pool(
        root3, [img for _, img in pool], snapshot={"tau": 0.8, "seed": 7, "max_fraction": 0.4}, clock=clock
    )
    with pytest.raises(KeyboardInterrupt):
        build_refined_set(
            root3, cands3, _echo_clients(pool), ReferenceEmbedder(),
            Crasher(harness, 20), tau=0.8, iteration=1,
            snapshot={"tau": 0.8, "seed": 7, "max_fraction": 0.4}, clock=clock,
        )
    build_refined_set(
        root3, cands3, _echo_clients(pool), ReferenceEmbedder(), harness,
        tau=0.8, iteration=1, snapshot={"tau": 0.8, "seed": 7, "max_fraction": 0.4}, clock=clock,
    )
    resumed = (root3.root / "manifests" / "refined_1.jsonl").read_bytes()
    clean = (root.root / "manifests" / "refined_1.jsonl").read_bytes()
    report("pipeline.kill_resume", resumed == clean, "mid-run kill + resume reproduces the clean manifest")

    elapsed = time.monotonic() - start
    report("pipeline.runtime", elapsed <= 300, f"{elapsed:.1f}s (budget 300s)")

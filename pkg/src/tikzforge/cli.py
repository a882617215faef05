"""Single entry point: every workflow as a subcommand.

Exit codes: 0 success, 1 workflow failure, 2 usage error, 3 config
error, 4 infrastructure error (missing toolchain or scorer).  ``--json``
switches stdout to machine-readable output; ``--dry-run`` prints the
plan and touches nothing.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (
    ConfigError,
    ProtocolError,
    RenderUnavailable,
    ScorerCrashed,
    ScorerTimeout,
    TikzforgeError,
    ToolchainMissing,
)

EXIT_OK = 0
EXIT_WORKFLOW = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_INFRA = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tikzforge",
        description="TikZ dataset engine: repair, transform, render, augment, score, and pipeline flows.",
    )
    parser.add_argument("--config", help="YAML config file")
    parser.add_argument("--json", action="store_true", help="machine-readable stdout")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--dry-run", action="store_true")
    parser.add_argument(
        "--mock-clients",
        action="store_true",
        help="use scripted mocks for all model roles and the reference embedder",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("repair", help="fix common compilation faults in a TikZ file")
    p.add_argument("file", help="input path or - for stdin")

    p = sub.add_parser("transform", help="statement-deletion variants of a file")
    p.add_argument("file")
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--max-fraction", type=float, default=0.4)

    p = sub.add_parser("render", help="compile and rasterize a TikZ file")
    p.add_argument("file")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("augment", help="randomized image augmentation")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("score", help="similarity metrics for images or image sets")
    p.add_argument("--pair", nargs=2, metavar=("A", "B"))
    p.add_argument("--sets", nargs=2, metavar=("DIR_A", "DIR_B"))

    p = sub.add_parser("refine", help="iterative self-refinement dry run or real run")
    p.add_argument("--out", default=None, help="run root directory")
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--pool-size", type=int, default=50)
    p.add_argument("--candidates", nargs="*", help="directories of candidate PNGs")

    p = sub.add_parser("instruct-build", help="build the instruction dataset")
    p.add_argument("--run-root", required=True)
    p.add_argument("--final", required=True, help="final training manifest (jsonl)")

    p = sub.add_parser("solve", help="reasoning flow over one problem")
    p.add_argument("--text", required=True, help="problem text file")
    p.add_argument("--image", required=True, help="problem image (PNG)")
    p.add_argument("--mode", choices=("vlm", "llm"), default="vlm")
    p.add_argument("--with-aux", action="store_true")
    p.add_argument("--fixture", help="scripted-mock fixture file (JSON)")

    sub.add_parser("validate-config", help="resolve and print the config snapshot")
    return parser


def _resolve(args) -> "PipelineConfig":
    from .config import load_config_file, resolve_config

    flags = {"seed": args.seed, "jobs": args.jobs}
    return resolve_config(load_config_file(args.config), flags=flags)


def _emit(args, payload: dict, human: str = "") -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human or json.dumps(payload, indent=2, sort_keys=True))


def _read_source(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _harness(config):
    from .render import RenderHarness

    return RenderHarness(config.render)


def _embedder(args, config):
    from .scorer import make_embedder

    return make_embedder(
        command=config.scorer_cmd,
        address=config.scorer_addr,
        timeout_s=config.scorer_timeout_s,
        use_reference=args.mock_clients,
    )


def cmd_repair(args, config) -> int:
    from .repair import repair

    text = _read_source(args.file)
    if args.dry_run:
        _emit(args, {"plan": "repair", "input_bytes": len(text)})
        return EXIT_OK
    fixed, report = repair(text)
    sys.stdout.write(fixed)
    if fixed and not fixed.endswith("\n"):
        sys.stdout.write("\n")
    diagnostics = {
        "changed": report.changed,
        "removed_lines": report.removed_lines,
        "appended_ends": report.appended_ends,
        "actions": [
            {"pass": p, "action": a, "line": l} for p, a, l in report.pass_actions
        ],
    }
    print(json.dumps(diagnostics, sort_keys=True), file=sys.stderr)
    return EXIT_OK


def cmd_transform(args, config) -> int:
    from .document import parse_document
    from .transform import generate_variants

    text = _read_source(args.file)
    seed = args.seed if args.seed is not None else config.seed
    if args.dry_run:
        _emit(args, {"plan": "transform", "count": args.count, "seed": seed})
        return EXIT_OK
    harness = _harness(config)
    pairs, stats = generate_variants(
        parse_document(text),
        seed=seed,
        count=args.count,
        renderer=harness,
        max_fraction=args.max_fraction,
    )
    for pair in pairs:
        print(
            json.dumps(
                {
                    "code_sha256": pair.code_sha256,
                    "image_sha256": pair.image_sha256,
                    "render_status": pair.render_status,
                },
                sort_keys=True,
            )
        )
    print(
        json.dumps(
            {
                "requested": stats.requested,
                "produced": stats.produced,
                "dropped_compile": stats.dropped_compile,
                "dropped_blank": stats.dropped_blank,
                "dropped_duplicate": stats.dropped_duplicate,
            },
            sort_keys=True,
        ),
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_render(args, config) -> int:
    text = _read_source(args.file)
    if args.dry_run:
        _emit(args, {"plan": "render", "output": args.output})
        return EXIT_OK
    harness = _harness(config)
    result = harness.render(text)
    if result.ok:
        result.image.save(args.output)
        _emit(
            args,
            {"status": result.status.value, "output": args.output, "engine": result.engine},
            f"{result.status.value} -> {args.output}",
        )
        return EXIT_OK
    print(result.log_excerpt, file=sys.stderr)
    _emit(args, {"status": result.status.value}, result.status.value)
    return EXIT_WORKFLOW


def cmd_augment(args, config) -> int:
    from .augment import augment
    from .images import RasterImage

    if args.dry_run:
        _emit(args, {"plan": "augment", "input": args.input, "output": args.output})
        return EXIT_OK
    seed = args.seed if args.seed is not None else config.seed
    image = RasterImage.from_file(args.input)
    augment(image, seed=seed, config=config.augment).save(args.output)
    _emit(args, {"output": args.output, "seed": seed}, f"augmented -> {args.output}")
    return EXIT_OK


def cmd_score(args, config) -> int:
    from .images import RasterImage
    from .metrics import fid, pair_report

    if bool(args.pair) == bool(args.sets):
        raise ConfigError("score needs exactly one of --pair or --sets")
    if args.dry_run:
        _emit(args, {"plan": "score"})
        return EXIT_OK
    if args.pair:
        a = RasterImage.from_file(args.pair[0])
        b = RasterImage.from_file(args.pair[1])
        report = pair_report(a, b, embedder=_embedder(args, config))
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
        return EXIT_OK
    embedder = _embedder(args, config)
    vectors = []
    for directory in args.sets:
        files = sorted(Path(directory).glob("*.png"))
        if len(files) < 2:
            raise ConfigError(f"need at least 2 PNGs in {directory}")
        vectors.append([embedder.embed(RasterImage.from_file(f)) for f in files])
    print(json.dumps({"fid": fid(vectors[0], vectors[1])}, indent=2, sort_keys=True))
    return EXIT_OK


def _mock_roles(pool):
    from .pipeline.clients import MockJudge, ScriptedMockClient, image_key

    table = {image_key(img): code for code, img in pool}
    return {
        "image_to_tikz": ScriptedMockClient("image_to_tikz", by_image_sha=table, model_name="mock-echo"),
        "instruct": ScriptedMockClient(
            "instruct", by_image_sha=table, model_name="mock-instruct"
        ),
        "annotator": ScriptedMockClient(
            "vlm",
            default="Remove the element nearest to the highlighted region ({image_sha}).",
            model_name="mock-annotator",
        ),
        "judge": MockJudge(),
    }


def _http_roles(config):
    from .pipeline.clients import HttpInferenceClient

    roles = {}
    for role, spec in config.clients.items():
        endpoint = spec.get("endpoint")
        if not endpoint:
            raise ConfigError(f"client role {role!r} has no endpoint")
        roles[role] = HttpInferenceClient(role, endpoint, model_name=spec.get("model", ""))
    return roles


def cmd_refine(args, config) -> int:
    from .pipeline.driver import run_refine_loop
    from .pipeline.manifest import fixed_clock, utc_clock
    from .pipeline.refine import RunRoot, build_candidates_from_pool, ingest_candidates
    from .pipeline.synthetic import build_pool

    seed = args.seed if args.seed is not None else config.seed
    iterations = args.iterations or config.max_iterations
    out = args.out or config.work_dir
    if args.dry_run:
        _emit(
            args,
            {
                "plan": "refine",
                "iterations": iterations,
                "pool_size": args.pool_size,
                "out": out,
                "mock_clients": args.mock_clients,
            },
        )
        return EXIT_OK
    harness = _harness(config)
    root = RunRoot(out)
    snapshot = {**config.snapshot(), "seed": seed}
    clock = fixed_clock() if args.mock_clients else utc_clock
    if args.candidates:
        candidates = ingest_candidates(root, args.candidates, snapshot=snapshot, clock=clock)
        if not args.mock_clients:
            roles = _http_roles(config)
        else:
            raise ConfigError("--mock-clients needs a synthetic pool, not --candidates")
        model = roles["image_to_tikz"]
    else:
        if not args.mock_clients:
            raise ConfigError("real runs need --candidates directories")
        pool = build_pool(seed=seed, size=args.pool_size, renderer=harness)
        candidates = build_candidates_from_pool(
            root, [img for _, img in pool], snapshot=snapshot, clock=clock
        )
        model = _mock_roles(pool)["image_to_tikz"]
    embedder = _embedder(args, config)
    final, summary = run_refine_loop(
        root,
        candidates,
        model,
        embedder,
        harness,
        iterations=iterations,
        tau=config.tau,
        max_iterations=config.max_iterations,
        seed=seed,
        variants_per_sample=config.variants_per_sample,
        max_fraction=config.max_fraction,
        snapshot=snapshot,
        clock=clock,
    )
    payload = {"final_manifest": str(final.path), "final_size": len(final), **summary.to_dict()}
    _emit(args, payload, f"final training set: {len(final)} entries at {final.path}")
    return EXIT_OK


def cmd_instruct_build(args, config) -> int:
    from .pipeline.clients import MockJudge, ScriptedMockClient
    from .pipeline.instruct import build_instruct_dataset
    from .pipeline.manifest import DatasetManifest, fixed_clock, utc_clock
    from .pipeline.refine import RunRoot

    if args.dry_run:
        _emit(args, {"plan": "instruct-build", "final": args.final})
        return EXIT_OK
    root = RunRoot(args.run_root)
    final = DatasetManifest.load(args.final)
    seed = args.seed if args.seed is not None else config.seed
    clock = fixed_clock() if args.mock_clients else utc_clock
    if args.mock_clients:
        annotator = ScriptedMockClient(
            "vlm",
            default="Remove the element nearest to the highlighted region ({image_sha}).",
            model_name="mock-annotator",
        )
        judge = MockJudge()
    else:
        roles = _http_roles(config)
        annotator, judge = roles["annotator"], roles["judge"]
    harness = _harness(config)
    manifest, stats = build_instruct_dataset(
        root,
        final,
        annotator,
        judge,
        harness,
        seed=seed,
        threshold=config.judge_threshold,
        max_fraction=config.max_fraction,
        snapshot=config.snapshot(),
        clock=clock,
    )
    payload = {
        "manifest": str(manifest.path),
        "accepted": stats.accepted,
        "sources": stats.sources,
        "dropped_render": stats.dropped_render,
        "dropped_judge": stats.dropped_judge,
    }
    _emit(args, payload, f"instruct dataset: {stats.accepted} triples at {manifest.path}")
    return EXIT_OK


def cmd_solve(args, config) -> int:
    from .images import RasterImage
    from .pipeline.clients import ScriptedMockClient
    from .pipeline.reasoning import ReasoningContext, solve_with_auxiliary, solve_with_tikz

    if args.dry_run:
        _emit(args, {"plan": "solve", "mode": args.mode, "with_aux": args.with_aux})
        return EXIT_OK
    problem = ReasoningContext(
        problem_text=Path(args.text).read_text(encoding="utf-8"),
        problem_image=RasterImage.from_file(args.image),
    )
    if args.mock_clients or args.fixture:
        if not args.fixture:
            raise ConfigError("solve --mock-clients needs --fixture with scripted replies")
        base = ScriptedMockClient.from_fixture("image_to_tikz", args.fixture)
        vlm = ScriptedMockClient.from_fixture("vlm", args.fixture)
        llm = ScriptedMockClient.from_fixture("llm", args.fixture)
        instruct = ScriptedMockClient.from_fixture("instruct", args.fixture)
    else:
        roles = _http_roles(config)
        base = roles["image_to_tikz"]
        vlm = roles.get("vlm")
        llm = roles.get("llm")
        instruct = roles.get("instruct")
    if args.with_aux:
        outcome = solve_with_auxiliary(
            problem, vlm, instruct, _harness(config), none_pattern=config.none_sentinel
        )
    else:
        reasoner = vlm if args.mode == "vlm" else llm
        outcome = solve_with_tikz(problem, base, reasoner, mode=args.mode)
    payload = {
        "answer": outcome.answer,
        "used_auxiliary": outcome.used_auxiliary,
        "fallback": outcome.fallback,
        "prompt_kinds": [p.kind for p in outcome.prompt_parts],
    }
    _emit(args, payload, outcome.answer)
    return EXIT_OK


def cmd_validate_config(args, config) -> int:
    print(json.dumps(config.snapshot(), indent=2, sort_keys=True))
    return EXIT_OK


_COMMANDS = {
    "repair": cmd_repair,
    "transform": cmd_transform,
    "render": cmd_render,
    "augment": cmd_augment,
    "score": cmd_score,
    "refine": cmd_refine,
    "instruct-build": cmd_instruct_build,
    "solve": cmd_solve,
    "validate-config": cmd_validate_config,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _resolve(args)
        return _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ToolchainMissing, RenderUnavailable, ScorerCrashed, ScorerTimeout, ProtocolError) as exc:
        print(f"infrastructure error: {exc}", file=sys.stderr)
        return EXIT_INFRA
    except TikzforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WORKFLOW
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WORKFLOW


if __name__ == "__main__":
    sys.exit(main())

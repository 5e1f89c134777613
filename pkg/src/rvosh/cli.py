"""Command-line front door.

Subcommands: `synth` writes bundled or custom synthetic datasets, `plan`
prints sampling plans, `run` executes the pipeline over a manifest, `eval`
scores predictions, and `compare` sweeps a grid of configurations.

Exit codes: 0 success, 1 partial failure (some expressions failed),
2 usage error, 3 environment or backend failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from rvosh import backends, dataio, metrics, pipeline, sampling
from rvosh.core import ExpressionTask, MaskTrack, VideoSequence

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2
EXIT_ENVIRONMENT = 3


def _default_workers() -> int:
    value = os.environ.get("RVOSH_WORKERS", "1")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mode", choices=[m.value for m in pipeline.Mode],
                        default=pipeline.Mode.CONSISTENT.value)
    parser.add_argument("--sampling", choices=[s.value for s in sampling.Strategy],
                        default=None, help="default: uniform (consistent) or first (legacy)")
    parser.add_argument("--frames", type=int, default=5, metavar="T")
    parser.add_argument("--prompt-policy", default="all", metavar="all|K",
                        help="use all initial masks or only the first K")
    parser.add_argument("--tolerance", type=int, default=None,
                        help="boundary match tolerance in pixels (default: from image size)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--backend", choices=["toy", "external"], default="toy")
    parser.add_argument("--backend-cmd", default=None,
                        help="worker command line for --backend external")
    parser.add_argument("--workers", type=int, default=None,
                        help="parallel expressions (default: $RVOSH_WORKERS or 1)")
    parser.add_argument("--swap-prob", type=float, default=0.0,
                        help="toy noise: per-frame probability of swapping to a distractor")
    parser.add_argument("--dilation", type=int, default=0,
                        help="toy noise: dilate (>0) or erode (<0) predicted masks")


def _parse_prompt_policy(text: str) -> int | None:
    if text.lower() == "all":
        return None
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"prompt policy must be 'all' or an integer, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rvosh",
                                     description="referring video segmentation harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="write a synthetic dataset")
    p_synth.add_argument("preset", help=f"one of {sorted(dataio.PRESETS)} or a scene spec JSON file")
    p_synth.add_argument("out_dir")

    p_plan = sub.add_parser("plan", help="print a sampling plan")
    p_plan.add_argument("strategy", choices=[s.value for s in sampling.Strategy])
    p_plan.add_argument("total_frames", type=int)
    p_plan.add_argument("requested", type=int)
    p_plan.add_argument("--seed", type=int, default=0)

    p_run = sub.add_parser("run", help="run the pipeline over a manifest")
    p_run.add_argument("manifest")
    p_run.add_argument("out_dir")
    _add_run_flags(p_run)

    p_eval = sub.add_parser("eval", help="score predictions against ground truth")
    p_eval.add_argument("pred_dir")
    p_eval.add_argument("manifest")
    p_eval.add_argument("--tolerance", type=int, default=None)
    p_eval.add_argument("--format", choices=["structured", "csv", "both"], default="structured")
    p_eval.add_argument("--workers", type=int, default=None)

    p_cmp = sub.add_parser("compare", help="run and score a grid of configurations")
    p_cmp.add_argument("manifest")
    p_cmp.add_argument("out_dir")
    p_cmp.add_argument("--modes", default="legacy,consistent")
    p_cmp.add_argument("--samplings", default="first,uniform")
    p_cmp.add_argument("--frames", default="5", help="comma-separated T values")
    p_cmp.add_argument("--prompt-policies", default="all")
    p_cmp.add_argument("--tolerance", type=int, default=None)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--backend", choices=["toy", "external"], default="toy")
    p_cmp.add_argument("--backend-cmd", default=None)
    p_cmp.add_argument("--workers", type=int, default=None)
    p_cmp.add_argument("--swap-prob", type=float, default=0.0)
    p_cmp.add_argument("--dilation", type=int, default=0)
    return parser


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def _scene_bundle_from_file(path: Path) -> dataio.SceneBundle:
    payload = json.loads(path.read_text())
    objects = tuple(
        dataio.SceneObject(
            label=int(o["label"]),
            shape=o["shape"],
            color=tuple(o["color"]),
            size=int(o["size"]),
            centers=tuple((int(r), int(c)) for r, c in o["centers"]),
            visible=tuple(o.get("visible", (0, payload["frame_count"] - 1))),
        )
        for o in payload["objects"]
    )
    spec = dataio.SyntheticSceneSpec(
        video_id=payload["video_id"],
        frame_count=int(payload["frame_count"]),
        height=int(payload["height"]),
        width=int(payload["width"]),
        background=tuple(payload.get("background", (230, 230, 230))),
        objects=objects,
        seed=int(payload.get("seed", 0)),
    )
    expressions = tuple(
        dataio.ExpressionSpec(e["id"], e.get("text", ""), tuple(e["object_ids"]))
        for e in payload["expressions"]
    )
    return dataio.SceneBundle(payload.get("name", spec.video_id), spec, expressions)


def cmd_synth(args) -> int:
    if args.preset in dataio.PRESETS:
        bundle = dataio.PRESETS[args.preset]
    else:
        path = Path(args.preset)
        if not path.exists():
            print(f"error: unknown preset or missing spec file {args.preset!r}",
                  file=sys.stderr)
            return EXIT_USAGE
        try:
            bundle = _scene_bundle_from_file(path)
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            print(f"error: invalid scene spec: {exc}", file=sys.stderr)
            return EXIT_USAGE
    manifest_path = dataio.synthesize_dataset(bundle, Path(args.out_dir))
    print(manifest_path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# plan
# ---------------------------------------------------------------------------

def cmd_plan(args) -> int:
    try:
        plan = sampling.make_plan(args.strategy, args.total_frames, args.requested,
                                  seed=args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(" ".join(str(i) for i in plan.indices))
    return EXIT_OK


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _make_toy_backends(dataset: dataio.LoadedDataset, args):
    noise = backends.ToyNoiseConfig(
        swap_probability=args.swap_prob, dilation_radius=args.dilation, seed=args.seed
    )
    predictor = backends.ToyPredictor(dataset.object_tracks, noise)
    propagator = backends.ToyPropagator()
    return predictor, propagator


def _run_one_expression(
    video: VideoSequence,
    task: ExpressionTask,
    cfg: pipeline.PipelineConfig,
    args,
    dataset: dataio.LoadedDataset,
) -> MaskTrack:
    # External workers are spawned per expression so that requests never
    # interleave across threads; toy backends are pure and shareable.
    if args.backend == "external":
        with backends.WorkerClient(args.backend_cmd) as client:
            predictor = backends.ExternalPredictor(client)
            propagator = backends.ExternalPropagator(client)
            return pipeline.run_pipeline(video, task, cfg, predictor, propagator)
    predictor, propagator = _make_toy_backends(dataset, args)
    return pipeline.run_pipeline(video, task, cfg, predictor, propagator)


def _mask_dir(out_dir: Path, task: ExpressionTask) -> Path:
    safe_expr = task.expression_id.replace("/", "_")
    return out_dir / "masks" / task.video_id / safe_expr


def cmd_run(args) -> int:
    manifest_path = Path(args.manifest)
    out_dir = Path(args.out_dir)
    if manifest_path.parent.resolve() == out_dir.resolve():
        print("error: output directory must differ from the manifest directory",
              file=sys.stderr)
        return EXIT_USAGE
    if args.backend == "external" and not args.backend_cmd:
        print("error: --backend external requires --backend-cmd", file=sys.stderr)
        return EXIT_USAGE
    try:
        dataset = dataio.load_manifest(manifest_path)
    except dataio.ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT

    try:
        cfg = pipeline.PipelineConfig(
            mode=args.mode,
            sampling_strategy=args.sampling,
            frames=args.frames,
            prompt_policy=_parse_prompt_policy(args.prompt_policy),
            boundary_tolerance=args.tolerance,
            seed=args.seed,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.backend == "external":
        # fail fast on unreachable workers before looping over expressions
        try:
            backends.WorkerClient(args.backend_cmd).close()
        except backends.BackendError as exc:
            print(f"error: backend failed to start: {exc}", file=sys.stderr)
            return EXIT_ENVIRONMENT

    workers = args.workers or _default_workers()
    out_dir.mkdir(parents=True, exist_ok=True)
    results: dict[str, dict] = {}

    def execute(task: ExpressionTask) -> tuple[ExpressionTask, MaskTrack | None, str | None, float]:
        start = time.perf_counter()
        try:
            video = dataset.video_for(task)
            track = _run_one_expression(video, task, cfg, args, dataset)
            return task, track, None, time.perf_counter() - start
        except (backends.BackendError, pipeline.BackendContractError, ValueError) as exc:
            return task, None, f"{type(exc).__name__}: {exc}", time.perf_counter() - start

    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(execute, dataset.tasks))

    # single collector writes outputs in manifest order
    failures = 0
    for task, track, error, elapsed in outcomes:
        entry = {"video_id": task.video_id, "expression_id": task.expression_id,
                 "seconds": round(elapsed, 6)}
        if error is None:
            dataio.write_masks(track, _mask_dir(out_dir, task))
            entry["status"] = "ok"
        else:
            failures += 1
            entry["status"] = "failed"
            entry["error"] = error
            print(f"expression {task.expression_id} failed: {error}", file=sys.stderr)
        results[task.expression_id] = entry

    metadata = {
        "manifest": str(manifest_path),
        "config": {
            "mode": cfg.mode.value,
            "sampling": cfg.resolved_strategy().value,
            "frames": cfg.frames,
            "prompt_policy": cfg.prompt_policy if cfg.prompt_policy is not None else "all",
            "tolerance": cfg.boundary_tolerance,
            "seed": cfg.seed,
            "backend": args.backend,
            "backend_cmd": args.backend_cmd,
            "swap_prob": args.swap_prob,
            "dilation": args.dilation,
        },
        "expressions": [results[t.expression_id] for t in dataset.tasks],
    }
    (out_dir / "run.json").write_text(json.dumps(metadata, indent=2) + "\n")

    if failures == len(dataset.tasks) and dataset.tasks:
        return EXIT_ENVIRONMENT
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _score_one(task: ExpressionTask, pred_dir: Path, tolerance) -> metrics.ExpressionScore:
    track = dataio.read_masks(pred_dir, task.video_id)
    if task.ground_truth is None:
        raise ValueError(f"no ground truth for {task.expression_id}")
    return metrics.score_expression(
        track, task.ground_truth, tolerance,
        video_id=task.video_id, expression_id=task.expression_id,
    )


def cmd_eval(args) -> int:
    pred_dir = Path(args.pred_dir)
    try:
        dataset = dataio.load_manifest(Path(args.manifest))
    except dataio.ManifestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ENVIRONMENT

    workers = args.workers or _default_workers()

    def score(task: ExpressionTask):
        try:
            return _score_one(task, _mask_dir(pred_dir, task), args.tolerance), None
        except (ValueError, OSError) as exc:
            return None, f"{task.expression_id}: {type(exc).__name__}: {exc}"

    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(score, dataset.tasks))

    scores = [s for s, _ in outcomes if s is not None]
    errors = [e for _, e in outcomes if e is not None]
    for message in errors:
        print(f"expression {message}", file=sys.stderr)
    if not scores:
        print("error: no expression could be scored", file=sys.stderr)
        return EXIT_ENVIRONMENT

    dataset_score = metrics.score_dataset(scores)
    if args.format in ("structured", "both"):
        dataio.write_report(dataset.manifest.dataset, dataset_score, scores,
                            pred_dir / "report.json", "structured")
    if args.format in ("csv", "both"):
        dataio.write_report(dataset.manifest.dataset, dataset_score, scores,
                            pred_dir / "report.csv", "csv")
    print(dataio.render_table(dataset.manifest.dataset, dataset_score))
    return EXIT_PARTIAL if errors else EXIT_OK


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _split_list(text: str) -> list[str]:
    return [item.strip() for item in text.split(",") if item.strip()]


def cmd_compare(args) -> int:
    modes = _split_list(args.modes)
    samplings = _split_list(args.samplings)
    frame_counts = _split_list(args.frames)
    policies = _split_list(args.prompt_policies)
    if not (modes and samplings and frame_counts and policies):
        print("error: empty configuration grid", file=sys.stderr)
        return EXIT_USAGE
    known_modes = {m.value for m in pipeline.Mode}
    known_samplings = {s.value for s in sampling.Strategy}
    bad = [m for m in modes if m not in known_modes]
    bad += [s for s in samplings if s not in known_samplings]
    if bad:
        print(f"error: unknown grid values {bad}", file=sys.stderr)
        return EXIT_USAGE

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    worst = EXIT_OK
    run_parser = build_parser()
    for mode in modes:
        for strat in samplings:
            for frames in frame_counts:
                for policy in policies:
                    slug = f"{mode}-{strat}-T{frames}-{policy}"
                    run_out = out_dir / slug
                    argv = [
                        "run", args.manifest, str(run_out),
                        "--mode", mode, "--sampling", strat, "--frames", frames,
                        "--prompt-policy", policy, "--seed", str(args.seed),
                        "--backend", args.backend,
                        "--swap-prob", str(args.swap_prob),
                        "--dilation", str(args.dilation),
                    ]
                    if args.tolerance is not None:
                        argv += ["--tolerance", str(args.tolerance)]
                    if args.backend_cmd:
                        argv += ["--backend-cmd", args.backend_cmd]
                    if args.workers:
                        argv += ["--workers", str(args.workers)]
                    code = cmd_run(run_parser.parse_args(argv))
                    worst = max(worst, code)
                    if code == EXIT_ENVIRONMENT:
                        print(f"error: configuration {slug} failed to run", file=sys.stderr)
                        return EXIT_ENVIRONMENT

                    dataset = dataio.load_manifest(Path(args.manifest))
                    scores = []
                    for task in dataset.tasks:
                        try:
                            scores.append(
                                _score_one(task, _mask_dir(run_out, task), args.tolerance)
                            )
                        except (ValueError, OSError):
                            pass
                    if not scores:
                        print(f"error: configuration {slug} produced no scorable output",
                              file=sys.stderr)
                        return EXIT_ENVIRONMENT
                    total = metrics.score_dataset(scores)
                    rows.append((mode, strat, frames, policy, total))

    header = "{:<12}{:<16}{:>4}  {:<8}{:>8}{:>8}{:>8}".format(
        "mode", "sampling", "T", "prompts", "J&F", "J", "F"
    )
    lines = [header]
    for mode, strat, frames, policy, total in rows:
        lines.append(
            "{:<12}{:<16}{:>4}  {:<8}{:>8}{:>8}{:>8}".format(
                mode, strat, frames, policy,
                dataio.format_score(total.jf),
                dataio.format_score(total.j),
                dataio.format_score(total.f),
            )
        )
    table = "\n".join(lines)
    print(table)
    (out_dir / "compare.csv").write_text(
        "mode,sampling,frames,prompts,J&F,J,F\n"
        + "".join(
            f"{mode},{strat},{frames},{policy},"
            f"{dataio.format_score(t.jf)},{dataio.format_score(t.j)},{dataio.format_score(t.f)}\n"
            for mode, strat, frames, policy, t in rows
        )
    )
    return worst


# ---------------------------------------------------------------------------
# entry points
# ---------------------------------------------------------------------------

_COMMANDS = {
    "synth": cmd_synth,
    "plan": cmd_plan,
    "run": cmd_run,
    "eval": cmd_eval,
    "compare": cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

"""Command-line entry points for the exporters.

Exit codes: 0 when every requested output was written, 1 for usage, schema,
or decode failures, 2 for missing inputs.  Manifest batches always run to
completion; failed episodes are listed on stderr and flip the exit code to 1
without stopping the remaining episodes.
"""

import argparse
import sys
from pathlib import Path

from .config import AdapterConfig
from .errors import AdapterError, MissingInput, UsageError
from .exporters import (
    export_mllm_batch,
    export_mllm_outputs,
    export_scene_batch,
    export_scene_embeddings,
    export_semantic_batch,
    export_semantic_embeddings,
)
from .mllm import TEMPLATE_VERSION

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_MISSING = 2


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_SCHEMA, f"{self.prog}: error: {message}\n")


def _parse_size(text: str) -> tuple[int, int]:
    try:
        width, height = (int(v) for v in text.lower().split("x"))
        return width, height
    except ValueError:
        raise UsageError(f"--size must look like 640x480, got {text!r}") from None


def _config(args) -> AdapterConfig:
    return AdapterConfig(
        scene_encoder=getattr(args, "encoder", None) or "grid16",
        text_encoder=getattr(args, "text_encoder", None) or "trigram256",
        video_encoder=getattr(args, "video_encoder", None) or "vstats64",
        frame_stride=args.stride,
        frame_size=_parse_size(args.size),
        frame_rate=args.fps,
        output_dir=Path(args.output_dir) if getattr(args, "output_dir", None) else None,
    )


def _add_common_flags(p):
    p.add_argument("--stride", type=int, default=1, help="keep every n-th frame")
    p.add_argument("--size", default="640x480", help="normalize frames to WIDTHxHEIGHT")
    p.add_argument("--fps", type=float, default=30.0, help="normalize to this frame rate")
    p.add_argument("--output-dir", help="write outputs here instead of next to the video")
    p.add_argument("--manifest", help="process every candidate video in this manifest")
    p.add_argument("--jobs", type=int, default=1, help="parallel candidates in manifest mode")
    p.add_argument("--update-manifest", action="store_true",
                   help="record produced paths (or captions) back into the manifest")


def build_parser() -> _Parser:
    parser = _Parser(prog="ewmadapt", description="Evidence exporters for the evaluation pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scene", help="export per-frame patch embeddings")
    p.add_argument("video", nargs="?", help="video file (.npz) or frame directory")
    p.add_argument("--out", help="output tensor path (single-video mode)")
    p.add_argument("--encoder", default="grid16", help="scene encoder id")
    _add_common_flags(p)

    p = sub.add_parser("semantic", help="export video/step/global caption embeddings")
    p.add_argument("video", nargs="?", help="video file (.npz) or frame directory")
    p.add_argument("--step", action="append", default=[], help="step caption (repeatable)")
    p.add_argument("--steps-file", help="file with one step caption per line")
    p.add_argument("--caption", help="global caption (default: joined steps)")
    p.add_argument("--text-encoder", default="trigram256", help="text encoder id")
    p.add_argument("--video-encoder", default="vstats64", help="global video encoder id")
    _add_common_flags(p)

    p = sub.add_parser("mllm", help="describe videos through an endpoint, write sidecars")
    p.add_argument("video", nargs="?", help="video file (.npz) or frame directory")
    p.add_argument("--endpoint", required=True, help="description endpoint URL")
    p.add_argument("--id", default=None, help="candidate id (single-video mode)")
    p.add_argument("--timeout", type=float, default=10.0)
    p.add_argument("--retries", type=int, default=3, help="attempts per request")
    p.add_argument("--backoff", type=float, default=0.5, help="base retry delay, seconds")
    p.add_argument("--template-version", type=int, default=TEMPLATE_VERSION)
    _add_common_flags(p)

    return parser


def _report_batch(written: dict, failed: dict, skipped=()) -> int:
    for cid in sorted(written):
        paths = written[cid]
        for path in paths if isinstance(paths, tuple) else (paths,):
            print(f"wrote {path}")
    for cid in skipped:
        print(f"skipped {cid}: no video declared")
    for cid in sorted(failed):
        print(f"failed {cid}: {failed[cid]}", file=sys.stderr)
    return EXIT_SCHEMA if failed else EXIT_OK


def _require_video_xor_manifest(args, parser_prog: str):
    if bool(args.video) == bool(args.manifest):
        raise UsageError(f"{parser_prog}: give either a video argument or --manifest, not both")


def _cmd_scene(args) -> int:
    _require_video_xor_manifest(args, "scene")
    cfg = _config(args)
    if args.manifest:
        result = export_scene_batch(
            args.manifest, cfg=cfg, jobs=args.jobs, update_manifest=args.update_manifest
        )
        return _report_batch(result.written, result.failed, result.skipped)
    out = export_scene_embeddings(args.video, out_path=args.out, cfg=cfg)
    print(f"wrote {out}")
    return EXIT_OK


def _read_steps(args) -> list[str]:
    steps = list(args.step)
    if args.steps_file:
        path = Path(args.steps_file)
        if not path.exists():
            raise MissingInput(f"steps file not found: {path}")
        steps.extend(line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip())
    return steps


def _cmd_semantic(args) -> int:
    _require_video_xor_manifest(args, "semantic")
    cfg = _config(args)
    if args.manifest:
        result = export_semantic_batch(
            args.manifest, cfg=cfg, jobs=args.jobs, update_manifest=args.update_manifest
        )
        return _report_batch(result.written, result.failed, result.skipped)
    paths = export_semantic_embeddings(args.video, _read_steps(args), args.caption, cfg=cfg)
    for key in ("global_video", "step_text", "global_text"):
        print(f"wrote {paths[key]}")
    return EXIT_OK


def _cmd_mllm(args) -> int:
    _require_video_xor_manifest(args, "mllm")
    cfg = _config(args)
    if args.manifest:
        batch = export_mllm_batch(
            args.manifest,
            args.endpoint,
            cfg=cfg,
            timeout=args.timeout,
            max_retries=args.retries,
            backoff=args.backoff,
            template_version=args.template_version,
            update_manifest=args.update_manifest,
        )
    else:
        cid = args.id if args.id is not None else Path(args.video).stem
        batch = export_mllm_outputs(
            {cid: args.video},
            args.endpoint,
            out_dir=args.output_dir,
            cfg=cfg,
            timeout=args.timeout,
            max_retries=args.retries,
            backoff=args.backoff,
            template_version=args.template_version,
        )
    return _report_batch(batch.written, batch.failed)


_COMMANDS = {"scene": _cmd_scene, "semantic": _cmd_semantic, "mllm": _cmd_mllm}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (MissingInput, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (AdapterError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points.

Exit codes: 0 when every requested output was written, 1 for schema or
usage errors, 2 for missing evidence (unless ``--allow-partial``).
"""

import argparse
import json
import sys
from pathlib import Path

from .aggregation import (
    HumanRanking,
    perturbation_study,
    perturbation_table_to_csv,
    perturbation_table_to_svg,
    rank_correlation,
    report_from_dict,
    report_to_csv,
    report_to_markdown,
)
from .datamodel import load_trajectory
from .diversity import DEFAULT_VOXEL_SIZE, select_diverse_trajectories
from .errors import EvalError, MissingDimension, MissingEvidence, ParseError
from .pipeline import RunConfig, evaluate
from .trajectory import DEFAULT_EPS, DynConfig

EXIT_OK = 0
EXIT_SCHEMA = 1
EXIT_MISSING = 2


class _Parser(argparse.ArgumentParser):
    """argparse parser whose usage errors exit 1 instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_SCHEMA, f"{self.prog}: error: {message}\n")


def _add_common_metric_flags(p):
    p.add_argument("--alpha", type=float, default=0.007, help="speed term weight")
    p.add_argument("--beta", type=float, default=0.003, help="acceleration term weight")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPS, help="stability epsilon")


def build_parser() -> _Parser:
    parser = _Parser(prog="ewmeval", description="Embodied world model evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score a manifest and write report files")
    p.add_argument("--manifest", required=True, help="evaluation manifest JSON")
    p.add_argument("--out", required=True, help="output directory")
    _add_common_metric_flags(p)
    p.add_argument("--voxel-size", type=float, default=DEFAULT_VOXEL_SIZE)
    p.add_argument("--norm", choices=("clamp", "minmax"), default="clamp")
    p.add_argument("--ceiling", type=float, default=1.0, help="clamp policy ceiling")
    p.add_argument("--jobs", type=int, default=1, help="parallel scoring workers")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--allow-partial", action="store_true",
                   help="score what exists; missing evidence becomes 0.0 with a warning")
    p.add_argument("--diversity-scope", choices=("task", "episode"), default="task")

    p = sub.add_parser("sample-diverse", help="pick k maximally diverse demonstrations")
    p.add_argument("--traj-dir", required=True,
                   help="directory of <id>_left.csv / <id>_right.csv trajectory files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--voxel-size", type=float, default=DEFAULT_VOXEL_SIZE)
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPS)

    p = sub.add_parser("perturb", help="run the metric-direction perturbation study")
    p.add_argument("--traj-dir", required=True, help="directory of trajectory files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--kinds", default="reverse,outlier,repeat",
                   help="comma-separated subset of reverse,outlier,repeat")
    p.add_argument("--count", type=int, default=2, help="outliers inserted per trajectory")
    p.add_argument("--scale", type=float, default=3.0, help="outlier distance in bbox diagonals")
    p.add_argument("--times", type=int, default=2, help="repetition factor")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-check", action="store_true",
                   help="skip the expected-direction signature check")
    _add_common_metric_flags(p)

    p = sub.add_parser("report", help="regenerate CSV/Markdown from a report JSON")
    p.add_argument("--report-json", required=True)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("rank-corr", help="rank correlation between two model rankings")
    p.add_argument("--metric", required=True, help="metric-side ranking file (JSON)")
    p.add_argument("--human", required=True, help="human-side ranking file (JSON)")
    p.add_argument("--out", help="optional output directory for rank_corr.json")

    return parser


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")


def _cmd_evaluate(args) -> int:
    cfg = RunConfig(
        manifest_path=Path(args.manifest),
        output_dir=Path(args.out),
        alpha=args.alpha,
        beta=args.beta,
        epsilon=args.epsilon,
        voxel_size=args.voxel_size,
        norm=args.norm,
        ceiling=args.ceiling,
        jobs=args.jobs,
        seed=args.seed,
        allow_partial=args.allow_partial,
        diversity_scope=args.diversity_scope,
    )
    report = evaluate(cfg)
    for name in ("report.json", "report.csv", "report.md", "episodes.json"):
        print(f"wrote {Path(args.out) / name}")
    print(report_to_markdown(report), end="")
    return EXIT_OK


def _discover_hand_pairs(traj_dir: Path):
    """Collect <id>_left / <id>_right trajectory files (CSV or JSON) by id."""
    by_id: dict[str, dict[str, Path]] = {}
    for path in sorted(traj_dir.iterdir()):
        if path.suffix not in (".csv", ".json"):
            continue
        for hand in ("left", "right"):
            tag = f"_{hand}"
            if path.stem.endswith(tag):
                by_id.setdefault(path.stem[: -len(tag)], {})[hand] = path
    if not by_id:
        raise MissingEvidence(f"no *_left/*_right trajectory files in {traj_dir}")
    ids = sorted(by_id)
    pairs = []
    for tid in ids:
        hands = by_id[tid]
        pairs.append(
            (
                load_trajectory(hands["left"]) if "left" in hands else None,
                load_trajectory(hands["right"]) if "right" in hands else None,
            )
        )
    return ids, pairs


def _cmd_sample_diverse(args) -> int:
    ids, pairs = _discover_hand_pairs(Path(args.traj_dir))
    indices, sim = select_diverse_trajectories(
        pairs, args.k, voxel_size=args.voxel_size, eps=args.epsilon
    )
    out = Path(args.out)
    payload = {
        "k": args.k,
        "voxel_size": args.voxel_size,
        "ids": [ids[i] for i in indices],
        "indices": indices,
    }
    _write(out / "selected.json", json.dumps(payload, indent=2, sort_keys=True) + "\n")
    lines = ["id," + ",".join(ids)]
    for i, tid in enumerate(ids):
        lines.append(tid + "," + ",".join(repr(float(v)) for v in sim.values[i]))
    _write(out / "similarity.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_perturb(args) -> int:
    traj_dir = Path(args.traj_dir)
    files = sorted(p for p in traj_dir.iterdir() if p.suffix in (".csv", ".json"))
    if not files:
        raise MissingEvidence(f"no trajectory files in {traj_dir}")
    trajectories = [load_trajectory(p) for p in files]

    params = {
        "reverse": {},
        "outlier": {"count": args.count, "scale": args.scale},
        "repeat": {"times": args.times},
    }
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    unknown = [k for k in kinds if k not in params]
    if unknown:
        raise ValueError(f"unknown perturbation kinds: {unknown}")

    table = perturbation_study(
        trajectories,
        perturbations=tuple((k, params[k]) for k in kinds),
        cfg=DynConfig(alpha=args.alpha, beta=args.beta, epsilon=args.epsilon),
        seed=args.seed,
        check_signature=not args.no_check,
    )
    out = Path(args.out)
    _write(out / "perturbations.csv", perturbation_table_to_csv(table))
    _write(out / "perturbations.svg", perturbation_table_to_svg(table))
    return EXIT_OK


def _cmd_report(args) -> int:
    try:
        payload = json.loads(Path(args.report_json).read_text(encoding="utf-8"))
    except OSError as exc:
        raise MissingEvidence(f"report JSON not readable: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"report JSON invalid: {exc}") from exc
    try:
        report = report_from_dict(payload)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"report JSON has unexpected shape: {exc}") from exc
    out = Path(args.out)
    _write(out / "report.csv", report_to_csv(report))
    _write(out / "report.md", report_to_markdown(report))
    return EXIT_OK


def _load_ranking(path: Path):
    """Accept an ordering, a score map, human samples, or a full report JSON."""
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise MissingEvidence(f"ranking file not readable: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"ranking file invalid JSON: {exc}") from exc
    if isinstance(payload, list):
        return payload
    if isinstance(payload, dict):
        if "samples" in payload:
            return HumanRanking(samples=tuple(tuple(s) for s in payload["samples"]))
        if "ranking" in payload:
            return payload["ranking"]
        if "scores" in payload:
            return payload["scores"]
        if "rows" in payload:  # a report: rank models by Overall
            return {r["model_id"]: float(r["overall"]) for r in payload["rows"]}
    raise ParseError(f"unrecognized ranking shape in {path}")


def _cmd_rank_corr(args) -> int:
    corr = rank_correlation(_load_ranking(Path(args.metric)), _load_ranking(Path(args.human)))
    print(f"spearman={corr.spearman:.6f} kendall={corr.kendall:.6f}")
    if args.out:
        _write(
            Path(args.out) / "rank_corr.json",
            json.dumps(
                {"spearman": corr.spearman, "kendall": corr.kendall},
                indent=2,
                sort_keys=True,
            )
            + "\n",
        )
    return EXIT_OK


_COMMANDS = {
    "evaluate": _cmd_evaluate,
    "sample-diverse": _cmd_sample_diverse,
    "perturb": _cmd_perturb,
    "report": _cmd_report,
    "rank-corr": _cmd_rank_corr,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (MissingEvidence, MissingDimension) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (EvalError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())

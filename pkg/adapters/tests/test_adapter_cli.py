"""Command-line behavior and exit codes."""

import json

import pytest

from ewmadapters.cli import EXIT_MISSING, EXIT_OK, EXIT_SCHEMA, main
from helpers_adapters import (  # noqa: F401
    build_video_manifest,
    endpoint,
    make_frames,
    make_npz_video,
)


def test_scene_single_video(tmp_path, capsys):
    video = make_npz_video(tmp_path / "clip.npz", make_frames(0, count=2))
    assert main(["scene", str(video)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "wrote" in out and str(tmp_path / "clip_scene.ewmb") in out
    assert (tmp_path / "clip_scene.ewmb").exists()


def test_scene_corrupt_video_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.npz"
    bad.write_bytes(b"garbage")
    assert main(["scene", str(bad)]) == EXIT_SCHEMA
    assert "error:" in capsys.readouterr().err


def test_scene_missing_video_exits_2(tmp_path, capsys):
    assert main(["scene", str(tmp_path / "absent.npz")]) == EXIT_MISSING
    assert "error:" in capsys.readouterr().err


def test_scene_requires_video_xor_manifest(tmp_path, capsys):
    video = make_npz_video(tmp_path / "clip.npz", make_frames(1, count=2))
    manifest = build_video_manifest(tmp_path)
    assert main(["scene"]) == EXIT_SCHEMA
    assert main(["scene", str(video), "--manifest", str(manifest)]) == EXIT_SCHEMA


def test_unknown_encoder_exits_1(tmp_path, capsys):
    video = make_npz_video(tmp_path / "clip.npz", make_frames(2, count=2))
    assert main(["scene", str(video), "--encoder", "resnet-900"]) == EXIT_SCHEMA
    assert "unknown scene encoder" in capsys.readouterr().err


def test_bad_size_flag_exits_1(tmp_path, capsys):
    video = make_npz_video(tmp_path / "clip.npz", make_frames(3, count=2))
    assert main(["scene", str(video), "--size", "huge"]) == EXIT_SCHEMA
    assert "640x480" in capsys.readouterr().err


def test_no_arguments_and_unknown_flags_exit_1(capsys):
    assert main([]) == EXIT_SCHEMA
    assert main(["scene", "--bogus"]) == EXIT_SCHEMA
    capsys.readouterr()


def test_semantic_with_repeated_steps(tmp_path, capsys):
    video = make_npz_video(tmp_path / "clip.npz", make_frames(4, count=2))
    code = main(
        ["semantic", str(video), "--step", "reach", "--step", "grasp", "--step", "lift"]
    )
    assert code == EXIT_OK
    out = capsys.readouterr().out
    for suffix in ("_gvid.ewmb", "_steps.ewmb", "_gtext.ewmb"):
        assert f"clip{suffix}" in out
        assert (tmp_path / f"clip{suffix}").exists()


def test_semantic_steps_file(tmp_path, capsys):
    video = make_npz_video(tmp_path / "clip.npz", make_frames(5, count=2))
    steps = tmp_path / "steps.txt"
    steps.write_text("reach\ngrasp\n\nlift\n", encoding="utf-8")
    assert main(["semantic", str(video), "--steps-file", str(steps)]) == EXIT_OK
    capsys.readouterr()


def test_semantic_without_steps_exits_1(tmp_path, capsys):
    video = make_npz_video(tmp_path / "clip.npz", make_frames(6, count=2))
    assert main(["semantic", str(video)]) == EXIT_SCHEMA
    assert "no step captions" in capsys.readouterr().err


def test_mllm_single_video_writes_sidecar(tmp_path, capsys, endpoint):
    video = make_npz_video(tmp_path / "clip.npz", make_frames(7, count=2))
    server = endpoint()
    code = main(
        ["mllm", str(video), "--endpoint", server.url, "--backoff", "0", "--id", "cand-x"]
    )
    assert code == EXIT_OK
    record = json.loads((tmp_path / "clip_mllm.json").read_text(encoding="utf-8"))
    assert record["candidate_id"] == "cand-x"
    capsys.readouterr()


def test_mllm_batch_partial_failure_exits_1_but_finishes(tmp_path, capsys, endpoint):
    manifest = build_video_manifest(tmp_path)
    (tmp_path / "t0e0_alpha.npz").write_bytes(b"ruined")
    server = endpoint()
    code = main(["mllm", "--manifest", str(manifest), "--endpoint", server.url, "--backoff", "0"])
    assert code == EXIT_SCHEMA
    captured = capsys.readouterr()
    assert "failed slide/ep0/alpha#0" in captured.err
    assert captured.out.count("wrote") == 3  # the other three candidates completed


def test_scene_manifest_batch_with_update(tmp_path, capsys):
    manifest = build_video_manifest(tmp_path)
    assert main(["scene", "--manifest", str(manifest), "--update-manifest"]) == EXIT_OK
    raw = json.loads(manifest.read_text(encoding="utf-8"))
    cand = raw["tasks"][0]["episodes"][0]["candidates"][0]
    assert cand["scene_embeddings"] == "t0e0_alpha_scene.ewmb"
    assert capsys.readouterr().out.count("wrote") == 4


def test_semantic_manifest_batch_reports_skips(tmp_path, capsys):
    manifest = build_video_manifest(tmp_path, models=("alpha",), episodes=1)
    raw = json.loads(manifest.read_text(encoding="utf-8"))
    cand = raw["tasks"][0]["episodes"][0]["candidates"][0]
    cand["step_captions"] = ["reach", "grasp"]
    del cand["video"]
    manifest.write_text(json.dumps(raw), encoding="utf-8")

    assert main(["semantic", "--manifest", str(manifest)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "skipped slide/ep0/alpha#0: no video declared" in out
    assert "slide_ep0_gtsteps.ewmb" in out  # reference captions still embedded

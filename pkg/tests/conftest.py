"""Shared synthetic fixture builders.

Everything here is generated from explicit seeds so tests are repeatable;
no binary fixtures are checked in.
"""

import json

import numpy as np
import pytest

import ewmeval as e


def random_trajectory(rng, n=20, dim=2, scale=1.0):
    """A random-walk trajectory; generic input for metric property tests."""
    steps = rng.normal(scale=scale / max(n, 1), size=(n, dim))
    return e.Trajectory(points=np.cumsum(steps, axis=0))


def arc_trajectory(seed, n=40):
    """A smooth, non-palindromic 3-D arc with varying speed."""
    rng = np.random.default_rng(seed)
    t = np.linspace(0.0, 1.0, n)
    ax, ay, az = rng.uniform(0.5, 1.5, size=3)
    phase = rng.uniform(0.0, 0.5)
    pts = np.stack(
        [
            ax * np.cos(1.5 * np.pi * t + phase),
            ay * np.sin(1.2 * np.pi * t),
            az * t * t,
        ],
        axis=1,
    )
    return e.Trajectory(points=pts)


@pytest.fixture
def arcs50():
    return [arc_trajectory(seed) for seed in range(50)]


def _write_candidate(root, prefix, model_id, gt_pts, gt_steps, instruction, rng,
                     noise=0.0, caption=None, verdict="pass"):
    """Write one candidate's evidence files; noise controls its quality."""
    pts = gt_pts + rng.normal(scale=noise, size=gt_pts.shape) if noise else gt_pts.copy()
    traj_path = root / f"{prefix}.csv"
    e.write_trajectory(traj_path, e.Trajectory(points=pts))

    n_frames, n_patches, dim = 4, 3, 8
    base = rng.normal(size=(n_patches, dim)).astype(np.float32)
    frames = np.stack(
        [base + rng.normal(scale=noise, size=base.shape).astype(np.float32)
         for _ in range(n_frames)]
    )
    scene_path = root / f"{prefix}_scene.ewmb"
    e.write_embedding(
        scene_path, e.EmbeddingTensor(data=frames, kind=e.EmbeddingKind.PATCH_PER_FRAME)
    )

    gvec = rng.normal(size=16).astype(np.float32)
    gvid_path = root / f"{prefix}_gvid.ewmb"
    e.write_embedding(gvid_path, e.EmbeddingTensor(data=gvec, kind=e.EmbeddingKind.GLOBAL_VIDEO))

    steps = gt_steps + rng.normal(scale=noise, size=gt_steps.shape).astype(np.float32)
    steps_path = root / f"{prefix}_steps.ewmb"
    e.write_embedding(
        steps_path,
        e.EmbeddingTensor(data=steps.astype(np.float32), kind=e.EmbeddingKind.STEP_TEXT),
    )

    return {
        "model_id": model_id,
        "trajectory": traj_path.name,
        "scene_embeddings": scene_path.name,
        "global_video_embedding": gvid_path.name,
        "caption": caption if caption is not None else instruction,
        "step_captions": ["reach", "grasp", "move", "place"],
        "step_text_embeddings": steps_path.name,
        "logic": {"verdict": verdict, "tags": []},
    }


def build_manifest(root, seed=0, models=("alpha", "beta"), n_tasks=2, n_episodes=2,
                   n_candidates=3):
    """Write a complete synthetic evaluation manifest under ``root``.

    Model quality degrades with its index (more trajectory/embedding noise,
    worse captions), so reports have a known expected ordering.  Returns the
    manifest path.
    """
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    tasks = []
    for ti in range(n_tasks):
        episodes = []
        for ei in range(n_episodes):
            tag = f"t{ti}e{ei}"
            instruction = f"move the block onto plate {ti} slot {ei}"
            gt_pts = np.cumsum(rng.normal(scale=0.05, size=(25, 2)), axis=0)
            e.write_trajectory(root / f"{tag}_gt.csv", e.Trajectory(points=gt_pts))
            gt_steps = rng.normal(size=(4, 8)).astype(np.float32)
            e.write_embedding(
                root / f"{tag}_gtsteps.ewmb",
                e.EmbeddingTensor(data=gt_steps, kind=e.EmbeddingKind.STEP_TEXT),
            )
            (root / f"{tag}_img.png").write_bytes(b"\x89PNG\r\n\x1a\n")

            candidates = []
            for mi, model in enumerate(models):
                noise = 0.02 * (mi + 1)
                caption = instruction if mi == 0 else " ".join(instruction.split()[:-2])
                verdict = "pass" if (mi == 0 or (ti + ei) % 2 == 0) else "violation"
                for ci in range(n_candidates):
                    candidates.append(
                        _write_candidate(
                            root, f"{tag}_{model}_c{ci}", model, gt_pts, gt_steps,
                            instruction, rng, noise=noise * (1 + 0.5 * ci),
                            caption=caption, verdict=verdict,
                        )
                    )

            episodes.append({
                "episode_id": f"ep{ei}",
                "instruction": instruction,
                "initial_images": [f"{tag}_img.png"],
                "gt_trajectory": f"{tag}_gt.csv",
                "gt_step_captions": ["reach", "grasp", "move", "place"],
                "gt_step_embeddings": f"{tag}_gtsteps.ewmb",
                "candidates": candidates,
            })
        tasks.append({"task_id": f"task{ti}", "episodes": episodes})

    manifest = {"schema_version": 1, "models": list(models), "tasks": tasks}
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path


def build_perfect_manifest(root, seed=0):
    """Single model / task / episode where the candidate equals ground truth."""
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    gt_pts = np.cumsum(rng.normal(scale=0.05, size=(20, 2)), axis=0)
    e.write_trajectory(root / "gt.csv", e.Trajectory(points=gt_pts))
    gt_steps = rng.normal(size=(4, 8)).astype(np.float32)
    e.write_embedding(
        root / "gtsteps.ewmb",
        e.EmbeddingTensor(data=gt_steps, kind=e.EmbeddingKind.STEP_TEXT),
    )
    (root / "img.png").write_bytes(b"\x89PNG\r\n\x1a\n")
    instruction = "stack the red cube on the green cube"
    cand = _write_candidate(
        root, "cand", "solo", gt_pts, gt_steps, instruction, rng, noise=0.0
    )
    manifest = {
        "schema_version": 1,
        "models": ["solo"],
        "tasks": [{
            "task_id": "stack",
            "episodes": [{
                "episode_id": "ep0",
                "instruction": instruction,
                "initial_images": ["img.png"],
                "gt_trajectory": "gt.csv",
                "gt_step_captions": ["reach", "grasp", "move", "place"],
                "gt_step_embeddings": "gtsteps.ewmb",
                "candidates": [cand],
            }],
        }],
    }
    path = root / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path

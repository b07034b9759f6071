"""Report assembly, normalization, perturbation analysis, rank correlation."""

import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import ewmeval as e
from ewmeval import DynConfig, EpisodeScores, HumanRanking, Trajectory
from ewmeval.errors import (
    DegenerateRange,
    InsufficientData,
    MissingDimension,
    ModelSetMismatch,
    SignatureMismatch,
    TooShort,
)

from conftest import arc_trajectory


def episode(model, task="t0", ep="e0", **metrics) -> EpisodeScores:
    return EpisodeScores(model_id=model, task_id=task, episode_id=ep, **metrics)


FULL = dict(
    scene_c=0.9, hsd=0.5, dyn=0.4, ndtw=0.6, diversity=0.1, bleu=0.2, clip=0.8, logics=1.0
)


# ---------------------------------------------------------------------------
# aggregate / build_report


def test_aggregate_means_per_model():
    rows = [
        episode("m", ep="e0", **FULL),
        episode("m", ep="e1", **{k: v / 2 for k, v in FULL.items()}),
    ]
    report = e.aggregate(rows)
    row = report.row("m")
    for metric, val in FULL.items():
        assert getattr(row, metric) == pytest.approx(0.75 * val, rel=1e-12)


def test_aggregate_skips_missing_values():
    rows = [
        episode("m", ep="e0", **FULL),
        episode("m", ep="e1", **{**FULL, "dyn": None}),
    ]
    row = e.aggregate(rows).row("m")
    assert row.dyn == FULL["dyn"]
    assert row.scene_c == FULL["scene_c"]


def test_aggregate_missing_dimension():
    rows = [episode("m", **{**FULL, "clip": None})]
    with pytest.raises(MissingDimension):
        e.aggregate(rows)


def test_aggregate_rows_sorted_and_row_lookup():
    rows = [episode("zed", **FULL), episode("abel", **FULL)]
    report = e.aggregate(rows)
    assert [r.model_id for r in report.rows] == ["abel", "zed"]
    with pytest.raises(KeyError):
        report.row("ghost")


def test_build_report_sums():
    means = {
        "one": dict(
            scene_c=0.9427, hsd=0.5356, dyn=0.5363, ndtw=0.5957,
            diversity=0.0691, bleu=0.1800, clip=0.8638, logics=0.9778,
        ),
        "two": dict(
            scene_c=0.8888, hsd=0.3231, dyn=0.3047, ndtw=0.3162,
            diversity=0.0493, bleu=0.1675, clip=0.8535, logics=0.9667,
        ),
    }
    report = e.build_report(means)
    one, two = report.row("one"), report.row("two")
    assert one.motion_sum == pytest.approx(1.6676, abs=1e-12)
    assert one.semantics_sum == pytest.approx(2.0907, abs=1e-12)
    assert one.overall == pytest.approx(4.7010, abs=1e-12)
    assert two.motion_sum == pytest.approx(0.9440, abs=1e-12)
    assert two.overall == pytest.approx(3.8698, abs=1e-12)
    for row in (one, two):
        assert row.overall == pytest.approx(
            row.scene_c + row.motion_sum + row.semantics_sum, rel=1e-15
        )


def test_aggregate_all_zero_scores():
    zeros = {k: 0.0 for k in FULL}
    row = e.aggregate([episode("m", **zeros)]).row("m")
    assert row.overall == 0.0
    assert row.motion_sum == 0.0


# ---------------------------------------------------------------------------
# normalize_scores


def test_normalize_clamp():
    assert e.normalize_scores([0.5, 2.0], "clamp") == [0.5, 1.0]
    assert e.normalize_scores([0.5, 2.0], "clamp", ceiling=2.0) == [0.25, 1.0]
    with pytest.raises(ValueError):
        e.normalize_scores([1.0], "clamp", ceiling=0.0)


def test_normalize_minmax():
    assert e.normalize_scores([2.0, 4.0, 6.0], "minmax") == [0.0, 0.5, 1.0]


def test_normalize_minmax_preserves_order():
    rng = np.random.default_rng(5)
    vals = list(rng.uniform(0.0, 10.0, size=9))
    normed = e.normalize_scores(vals, "minmax")
    assert list(np.argsort(vals)) == list(np.argsort(normed))
    assert min(normed) == 0.0 and max(normed) == 1.0


def test_normalize_degenerate_range_warns():
    with pytest.warns(DegenerateRange):
        out = e.normalize_scores([3.0, 3.0, 3.0], "minmax")
    assert out == [1.0, 1.0, 1.0]


def test_normalize_unknown_policy():
    with pytest.raises(ValueError):
        e.normalize_scores([1.0], "zscore")


# ---------------------------------------------------------------------------
# perturb


def traj(points) -> Trajectory:
    return Trajectory(points=np.asarray(points, dtype=np.float64))


def test_perturb_reverse_is_involution():
    t = arc_trajectory(1)
    once = e.perturb(t, "reverse")
    twice = e.perturb(once, "reverse")
    assert np.array_equal(twice.points, t.points)
    assert np.array_equal(once.points, t.points[::-1])


def test_perturb_repeat():
    t = traj([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    doubled = e.perturb(t, "repeat", times=2)
    assert len(doubled) == 6
    assert np.array_equal(doubled.points[::2], t.points)
    assert np.array_equal(doubled.points[1::2], t.points)
    identity = e.perturb(t, "repeat", times=1)
    assert np.array_equal(identity.points, t.points)
    with pytest.raises(ValueError):
        e.perturb(t, "repeat", times=0)


def test_perturb_outlier_inserts_at_scaled_distance():
    t = arc_trajectory(2)
    centroid = t.points.mean(axis=0)
    diag = float(np.linalg.norm(t.points.max(axis=0) - t.points.min(axis=0)))
    out = e.perturb(t, "outlier", count=3, scale=3.0, seed=11)
    assert len(out) == len(t) + 3
    dists = np.linalg.norm(out.points - centroid, axis=1)
    far = np.abs(dists - 3.0 * diag) < 1e-9
    assert far.sum() == 3


def test_perturb_outlier_seeded_replay():
    t = arc_trajectory(3)
    a = e.perturb(t, "outlier", seed=7)
    b = e.perturb(t, "outlier", seed=7)
    c = e.perturb(t, "outlier", seed=8)
    assert np.array_equal(a.points, b.points)
    assert not np.array_equal(a.points, c.points)


def test_perturb_preserves_metadata_and_validates():
    t = arc_trajectory(4)
    out = e.perturb(t, "reverse")
    assert out.frame_rate == t.frame_rate
    assert out.hand == t.hand
    with pytest.raises(TooShort):
        e.perturb(traj([[0.0, 0.0], [1.0, 1.0]]), "reverse")
    with pytest.raises(ValueError):
        e.perturb(t, "shuffle")


# ---------------------------------------------------------------------------
# perturbation_study


def test_perturbation_study_signature(arcs50):
    table = e.perturbation_study(arcs50)
    assert [r.kind for r in table.rows] == ["reverse", "outlier", "repeat"]
    reverse = table.row("reverse")
    assert reverse.raw_hausdorff_max_abs_delta == 0.0
    assert reverse.ndtw_rel_change < -0.3
    outlier = table.row("outlier")
    assert outlier.hsd_rel_change < -0.5
    assert outlier.dyn_rel_change < -0.2
    repeat = table.row("repeat")
    assert repeat.dyn_rel_change < -0.2
    assert repeat.ndtw_rel_change == 0.0


def test_perturbation_study_is_deterministic(arcs50):
    assert e.perturbation_study(arcs50, seed=1) == e.perturbation_study(arcs50, seed=1)


def test_perturbation_study_insufficient_data():
    with pytest.raises(InsufficientData):
        e.perturbation_study([arc_trajectory(i) for i in range(9)])


def test_perturbation_study_identity_parameterization(arcs50):
    identity = (("repeat", {"times": 1}),)
    with pytest.raises(SignatureMismatch):
        e.perturbation_study(arcs50, perturbations=identity)
    table = e.perturbation_study(arcs50, perturbations=identity, check_signature=False)
    row = table.row("repeat")
    assert row.hsd_rel_change == 0.0
    assert row.ndtw_rel_change == 0.0
    assert row.dyn_rel_change == 0.0
    assert row.raw_hausdorff_max_abs_delta == 0.0


def test_perturbation_study_checks_only_requested_kinds(arcs50):
    table = e.perturbation_study(arcs50, perturbations=(("reverse", {}),))
    assert [r.kind for r in table.rows] == ["reverse"]
    with pytest.raises(KeyError):
        table.row("outlier")


def test_check_signature_rejects_contradiction():
    good = e.PerturbationRow(
        kind="reverse", hsd_rel_change=0.0, ndtw_rel_change=-0.9,
        dyn_rel_change=0.0, raw_hausdorff_max_abs_delta=0.0,
    )
    bad = e.PerturbationRow(
        kind="reverse", hsd_rel_change=0.0, ndtw_rel_change=-0.9,
        dyn_rel_change=0.0, raw_hausdorff_max_abs_delta=0.5,
    )
    e.PerturbationTable(rows=(good,)).check_signature()
    with pytest.raises(SignatureMismatch):
        e.PerturbationTable(rows=(bad,)).check_signature()


# ---------------------------------------------------------------------------
# human ranking and rank correlation


def test_human_ranking_points_linear():
    ranking = HumanRanking(samples=(("a", "b", "c", "d"), ("b", "a", "c", "d")))
    assert ranking.points() == {"a": 5.0, "b": 5.0, "c": 2.0, "d": 0.0}


def test_human_ranking_scheme_override():
    ranking = HumanRanking(samples=(("a", "b", "c", "d"),))
    assert ranking.points(scheme=(3, 2, 1, 0)) == ranking.points()
    custom = ranking.points(scheme=(5, 3, 1, 0))
    assert custom == {"a": 5.0, "b": 3.0, "c": 1.0, "d": 0.0}


def test_rank_correlation_perfect_and_inverted():
    order = ["a", "b", "c", "d"]
    perfect = e.rank_correlation(order, order)
    assert perfect.spearman == pytest.approx(1.0)
    assert perfect.kendall == pytest.approx(1.0)
    inverted = e.rank_correlation(order, order[::-1])
    assert inverted.spearman == pytest.approx(-1.0)
    assert inverted.kendall == pytest.approx(-1.0)


def test_rank_correlation_single_swap():
    got = e.rank_correlation(["a", "b", "c", "d"], ["a", "c", "b", "d"])
    assert got.spearman == pytest.approx(0.8, rel=1e-12)
    assert got.kendall == pytest.approx(2.0 / 3.0, rel=1e-12)


def test_rank_correlation_input_forms_agree():
    metric_scores = {"a": 4.7, "b": 3.9, "c": 3.4, "d": 3.1}
    human = HumanRanking(samples=(("a", "c", "b", "d"),))
    from_scores = e.rank_correlation(metric_scores, human)
    from_order = e.rank_correlation(["a", "b", "c", "d"], ["a", "c", "b", "d"])
    assert from_scores == from_order


def test_rank_correlation_symmetry_and_mismatch():
    a, b = ["a", "b", "c", "d"], ["b", "a", "d", "c"]
    fwd, rev = e.rank_correlation(a, b), e.rank_correlation(b, a)
    assert fwd.spearman == pytest.approx(rev.spearman)
    assert fwd.kendall == pytest.approx(rev.kendall)
    with pytest.raises(ModelSetMismatch):
        e.rank_correlation(["a", "b"], ["a", "c"])


# ---------------------------------------------------------------------------
# serialization


def sample_report() -> e.MetricReport:
    means = {
        "one": dict(
            scene_c=0.9427, hsd=0.5356, dyn=0.5363, ndtw=0.5957,
            diversity=0.0691, bleu=0.18, clip=0.8638, logics=44.0 / 45.0,
        ),
        "two": dict(
            scene_c=1.0 / 3.0, hsd=0.1, dyn=0.2, ndtw=0.3,
            diversity=0.4, bleu=0.5, clip=0.6, logics=0.7,
        ),
    }
    return e.build_report(means)


def test_report_dict_round_trip():
    report = sample_report()
    payload = e.report_to_dict(report)
    assert payload["columns"] == list(e.REPORT_HEADER)
    assert e.report_from_dict(payload) == report
    via_json = e.report_from_dict(json.loads(json.dumps(payload)))
    assert via_json == report


def test_report_csv_is_lossless():
    report = sample_report()
    lines = e.report_to_csv(report).strip().split("\n")
    assert lines[0] == ",".join(e.REPORT_HEADER)
    for line, row in zip(lines[1:], report.rows):
        cells = line.split(",")
        assert cells[0] == row.model_id
        assert float(cells[5]) == row.motion_sum
        assert float(cells[-1]) == row.overall


def test_report_markdown_shape():
    md = e.report_to_markdown(sample_report())
    lines = md.strip().split("\n")
    assert len(lines) == 2 + 2
    assert lines[0].startswith("| Model |")
    assert f"{1.0 / 3.0:.4f}" in lines[3]


def test_perturbation_csv_is_lossless(arcs50):
    table = e.perturbation_study(arcs50)
    lines = e.perturbation_table_to_csv(table).strip().split("\n")
    assert len(lines) == 4
    for line, row in zip(lines[1:], table.rows):
        cells = line.split(",")
        assert cells[0] == row.kind
        assert float(cells[1]) == row.hsd_rel_change
        assert float(cells[2]) == row.ndtw_rel_change
        assert float(cells[3]) == row.dyn_rel_change


def test_perturbation_svg_is_valid_xml(arcs50):
    table = e.perturbation_study(arcs50)
    svg = e.perturbation_table_to_svg(table)
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    rects = [el for el in root.iter() if el.tag.endswith("rect")]
    assert len(rects) >= 3 * len(table.rows)
    texts = " ".join(el.text or "" for el in root.iter())
    for row in table.rows:
        assert row.kind in texts

"""BLEU, step alignment, logic pass rate, and semantic diversity."""

import math

import numpy as np
import pytest

import ewmeval as e
from ewmeval import EmbeddingKind, EmbeddingTensor, LogicVerdict
from ewmeval.errors import (
    DimMismatch,
    EmptyReference,
    EmptySteps,
    EmptyVerdicts,
    TooFewVideos,
)


def steps(rows) -> EmbeddingTensor:
    return EmbeddingTensor(data=np.asarray(rows, dtype=np.float32), kind=EmbeddingKind.STEP_TEXT)


# ---------------------------------------------------------------------------
# tokenize


def test_tokenize_lowercases_and_strips_punctuation():
    assert e.tokenize("The robot picks the cup.") == ["the", "robot", "picks", "the", "cup"]
    assert e.tokenize("Hello , WORLD !!") == ["hello", "world"]
    assert e.tokenize("don't stop") == ["don't", "stop"]
    assert e.tokenize("") == []
    assert e.tokenize("...") == []


# ---------------------------------------------------------------------------
# bleu


def test_bleu_identity_is_one():
    s = "pick up the red block and place it on the plate"
    assert e.bleu(s, s) == 1.0


def test_bleu_zero_overlap_is_zero():
    assert e.bleu("alpha beta gamma delta", "one two three four") == 0.0


def test_bleu_hand_example():
    got = e.bleu("The robot picks the cup.", "the robot picks up the cup")
    # orders: p1 = 5/5, p2 = 3/4, p3 = 1/3, p4 smoothed to 1/(2+1);
    # candidate is one token short of the reference, so bp = exp(1 - 6/5)
    expected = math.exp(1.0 - 6.0 / 5.0) * (1.0 * (3.0 / 4.0) * (1.0 / 3.0) * (1.0 / 3.0)) ** 0.25
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.43989172475842203, rel=1e-12)
    assert got == pytest.approx(0.4399, abs=5e-5)


def test_bleu_short_candidate_drops_unused_orders():
    assert e.bleu("a b", "a b") == 1.0
    assert e.bleu("a", "a") == 1.0


def test_bleu_no_brevity_penalty_when_candidate_longer():
    got = e.bleu("the cat sat down", "the cat sat")
    expected = ((3.0 / 4.0) * (2.0 / 3.0) * (1.0 / 2.0) * (1.0 / 2.0)) ** 0.25
    assert got == pytest.approx(expected, rel=1e-12)


def test_bleu_accepts_pretokenized_sequences():
    as_string = e.bleu("The robot picks the cup.", "the robot picks up the cup")
    as_tokens = e.bleu(
        ["the", "robot", "picks", "the", "cup"],
        ["the", "robot", "picks", "up", "the", "cup"],
    )
    assert as_string == as_tokens


def test_bleu_empty_inputs():
    with pytest.raises(EmptyReference):
        e.bleu("anything", "")
    with pytest.raises(EmptyReference):
        e.bleu("anything", "!!!")
    assert e.bleu("", "the reference") == 0.0
    assert e.bleu("...", "the reference") == 0.0


def test_bleu_stays_in_unit_interval():
    rng = np.random.default_rng(13)
    vocab = [f"w{i}" for i in range(12)]
    for _ in range(60):
        cand = list(rng.choice(vocab, size=rng.integers(1, 15)))
        ref = list(rng.choice(vocab, size=rng.integers(1, 15)))
        assert 0.0 <= e.bleu(cand, ref) <= 1.0


def test_bleu_mean_degrades_with_deletions():
    # Deleting tokens can occasionally merge n-gram gaps and raise a single
    # score, so the guarantee is statistical: the mean over many seeds is
    # non-increasing in the number of deletions.
    rng = np.random.default_rng(37)
    vocab = [f"w{i}" for i in range(20)]
    means = []
    for n_del in range(5):
        scores = []
        for _ in range(50):
            ref = list(rng.choice(vocab, size=12))
            cand = list(ref)
            for _ in range(n_del):
                cand.pop(int(rng.integers(0, len(cand))))
            scores.append(e.bleu(cand, ref))
        means.append(float(np.mean(scores)))
    assert means[0] == 1.0
    assert all(a >= b for a, b in zip(means, means[1:]))
    assert means[4] < 0.7


# ---------------------------------------------------------------------------
# step_alignment


def test_step_alignment_identical_steps():
    rows = [[3.0, 4.0, 0.0], [0.0, 6.0, 8.0]]
    assert e.step_alignment(steps(rows), steps(rows)) == 1.0


def test_step_alignment_orthogonal_steps():
    a = steps([[1.0, 0.0], [0.0, 1.0]])
    b = steps([[0.0, 1.0], [1.0, 0.0]])
    assert e.step_alignment(a, b) == 0.5


def test_step_alignment_coverage_penalty():
    gt = steps([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
    gen = steps([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    assert e.step_alignment(gen, gt) == 0.75
    assert e.step_alignment(gt, gen) == 0.75


def test_step_alignment_symmetric():
    rng = np.random.default_rng(19)
    for matching in ("index", "greedy"):
        a = steps(rng.standard_normal((4, 8)))
        b = steps(rng.standard_normal((6, 8)))
        assert e.step_alignment(a, b, matching=matching) == pytest.approx(
            e.step_alignment(b, a, matching=matching), rel=1e-12
        )


def test_step_alignment_greedy_recovers_scrambled_order():
    eye = np.eye(5, dtype=np.float32)
    gt = steps(eye)
    scrambled = steps(eye[[3, 0, 4, 1, 2]])
    assert e.step_alignment(scrambled, gt, matching="index") == 0.5
    assert e.step_alignment(scrambled, gt, matching="greedy") == 1.0


def test_step_alignment_greedy_never_below_index_on_permutations():
    rng = np.random.default_rng(43)
    for _ in range(20):
        base = rng.standard_normal((5, 6))
        gt = steps(base)
        gen = steps(base[rng.permutation(5)])
        greedy = e.step_alignment(gen, gt, matching="greedy")
        index = e.step_alignment(gen, gt, matching="index")
        assert greedy >= index - 1e-12
        assert greedy == pytest.approx(1.0, abs=1e-6)


def test_step_alignment_single_vector_tensor():
    one = EmbeddingTensor(data=np.array([3.0, 4.0], dtype=np.float32), kind=EmbeddingKind.STEP_TEXT)
    two = steps([[3.0, 4.0], [4.0, 3.0]])
    assert e.step_alignment(one, one) == 1.0
    assert e.step_alignment(one, two) == pytest.approx(0.5 * ((1.0 + 1.0) / 2.0))


def test_step_alignment_errors():
    a = steps([[1.0, 0.0]])
    with pytest.raises(DimMismatch):
        e.step_alignment(a, steps([[1.0, 0.0, 0.0]]))
    with pytest.raises(EmptySteps):
        e.step_alignment(a, steps([[0.0, 0.0]]))
    with pytest.raises(ValueError):
        e.step_alignment(a, a, matching="hungarian")


# ---------------------------------------------------------------------------
# logic_score


def test_logic_score_endpoints():
    assert e.logic_score([LogicVerdict.PASS] * 5) == 1.0
    assert e.logic_score([LogicVerdict.VIOLATION] * 5) == 0.0


def test_logic_score_forty_four_of_forty_five():
    verdicts = [LogicVerdict.PASS] * 44 + [LogicVerdict.VIOLATION]
    score = e.logic_score(verdicts)
    assert score == 44.0 / 45.0
    assert round(score, 4) == 0.9778


def test_logic_score_counts_are_integral():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(1, 40))
        verdicts = [LogicVerdict.PASS if rng.random() < 0.6 else LogicVerdict.VIOLATION for _ in range(n)]
        score = e.logic_score(verdicts)
        assert (score * n) == pytest.approx(round(score * n), abs=1e-9)


def test_logic_score_accepts_strings_and_enums():
    assert e.logic_score([LogicVerdict.PASS, "pass", LogicVerdict.VIOLATION]) == pytest.approx(2.0 / 3.0)
    assert e.logic_score(["violation", "violation"]) == 0.0


def test_logic_score_empty():
    with pytest.raises(EmptyVerdicts):
        e.logic_score([])


# ---------------------------------------------------------------------------
# semantic_diversity


def glob(vec) -> EmbeddingTensor:
    return EmbeddingTensor(data=np.asarray(vec, dtype=np.float32), kind=EmbeddingKind.GLOBAL_VIDEO)


def test_semantic_diversity_identical_is_zero():
    v = glob([1.0, 2.0, 3.0])
    assert e.semantic_diversity([v, v, v]) == 0.0


def test_semantic_diversity_orthogonal_is_one():
    assert e.semantic_diversity([glob([1.0, 0.0]), glob([0.0, 1.0])]) == 1.0


def test_semantic_diversity_opposed_clamps_to_one():
    assert e.semantic_diversity([glob([1.0, 0.0]), glob([-1.0, 0.0])]) == 1.0


def test_semantic_diversity_hand_value():
    vecs = [glob([1.0, 0.0]), glob([0.0, 1.0]), glob([1.0, 1.0])]
    expected = 1.0 - (0.0 + math.sqrt(2.0) / 2.0 + math.sqrt(2.0) / 2.0) / 3.0
    assert e.semantic_diversity(vecs) == pytest.approx(expected, rel=1e-7)


def test_semantic_diversity_rotation_and_permutation_invariant():
    rng = np.random.default_rng(61)
    vecs = rng.standard_normal((5, 12))
    base = e.semantic_diversity(list(vecs))
    q, _ = np.linalg.qr(rng.standard_normal((12, 12)))
    assert e.semantic_diversity(list(vecs @ q.T)) == pytest.approx(base, abs=1e-12)
    order = rng.permutation(5)
    assert e.semantic_diversity([vecs[i] for i in order]) == pytest.approx(base, abs=1e-12)


def test_semantic_diversity_accepts_raw_arrays_and_tensors():
    mixed = [glob([1.0, 0.0]), np.array([0.0, 1.0])]
    assert e.semantic_diversity(mixed) == 1.0


def test_semantic_diversity_bounds():
    rng = np.random.default_rng(3)
    for _ in range(25):
        vecs = [rng.standard_normal(6) for _ in range(int(rng.integers(2, 7)))]
        assert 0.0 <= e.semantic_diversity(vecs) <= 1.0


def test_semantic_diversity_errors():
    with pytest.raises(TooFewVideos):
        e.semantic_diversity([glob([1.0, 0.0])])
    with pytest.raises(DimMismatch):
        e.semantic_diversity([glob([1.0, 0.0]), glob([1.0, 0.0, 0.0])])
    with pytest.raises(EmptySteps):
        e.semantic_diversity([glob([1.0, 0.0]), np.zeros(2)])


# ---------------------------------------------------------------------------
# SemanticScores


def test_semantic_scores_validation():
    ok = e.SemanticScores(bleu=0.5, step_clip=1.0, logic=0.0, diversity=0.25)
    assert ok.step_clip == 1.0
    for field, bad in (("bleu", -0.1), ("step_clip", 1.5), ("logic", 2.0), ("diversity", -1.0)):
        kwargs = {"bleu": 0.5, "step_clip": 0.5, "logic": 0.5, "diversity": 0.5, field: bad}
        with pytest.raises(ValueError):
            e.SemanticScores(**kwargs)

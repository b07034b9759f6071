"""Semantic alignment and diversity scores.

Covers the three caption-based signals (global BLEU, step-level embedding
similarity, logic-violation rate) plus within-group video diversity.  Text
arrives as UTF-8 strings; embeddings arrive as pre-extracted tensors; no
model inference happens here.
"""

import math
import string
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .datamodel import EmbeddingTensor, LogicVerdict
from .errors import (
    DimMismatch,
    EmptyReference,
    EmptySteps,
    EmptyVerdicts,
    TooFewVideos,
)


@dataclass(frozen=True)
class SemanticScores:
    """The four semantic signals for one scored unit, each in [0, 1]."""

    bleu: float
    step_clip: float
    logic: float
    diversity: float

    def __post_init__(self):
        for name in ("bleu", "step_clip", "logic", "diversity"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {val}")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip leading/trailing punctuation."""
    tokens = []
    for tok in text.lower().split():
        tok = tok.strip(string.punctuation)
        if tok:
            tokens.append(tok)
    return tokens


def _ngrams(tokens, n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate, reference, max_n: int = 4) -> float:
    """Sentence BLEU with brevity penalty and add-one smoothing.

    Inputs may be raw strings (tokenized here) or pre-tokenized sequences.
    Unigram precision is left unsmoothed so zero lexical overlap scores 0 and
    only an exact match scores 1; higher orders with zero clipped counts get
    add-one smoothing ((0+1)/(total+1)).  Orders the candidate is too short
    to form are dropped and the geometric mean runs over the rest.
    """
    cand = tokenize(candidate) if isinstance(candidate, str) else list(candidate)
    ref = tokenize(reference) if isinstance(reference, str) else list(reference)
    if not ref:
        raise EmptyReference("reference tokenizes to nothing")
    if not cand:
        return 0.0

    log_sum, orders = 0.0, 0
    for n in range(1, max_n + 1):
        cand_ngrams = _ngrams(cand, n)
        total = sum(cand_ngrams.values())
        if total == 0:
            continue
        ref_ngrams = _ngrams(ref, n)
        clipped = sum(min(c, ref_ngrams[g]) for g, c in cand_ngrams.items())
        if clipped == 0:
            if n == 1:
                return 0.0
            p = 1.0 / (total + 1)
        else:
            p = clipped / total
        log_sum += math.log(p)
        orders += 1
    if orders == 0:
        return 0.0
    c, r = len(cand), len(ref)
    bp = 1.0 if c > r else math.exp(1.0 - r / c)
    return bp * math.exp(log_sum / orders)


def _step_matrix(tensor: EmbeddingTensor) -> np.ndarray:
    arr = np.asarray(tensor.data, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise DimMismatch(f"step tensor must be (steps, dim), got shape {arr.shape}")
    if arr.shape[0] == 0:
        raise EmptySteps("no steps in tensor")
    return arr


def _cosine_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    na = np.linalg.norm(a, axis=1)
    nb = np.linalg.norm(b, axis=1)
    if (na == 0).any() or (nb == 0).any():
        raise EmptySteps("zero-norm step embedding; cosine undefined")
    return np.clip((a @ b.T) / np.outer(na, nb), -1.0, 1.0)


def step_alignment(
    gen_steps: EmbeddingTensor, gt_steps: EmbeddingTensor, matching: str = "index"
) -> float:
    """Mean cosine between matched step embeddings, coverage-penalized.

    With ``matching="index"`` (default) pairs match by position up to the
    shorter list.  ``matching="greedy"`` instead repeatedly pairs the
    highest-cosine unmatched rows, for decompositions whose step order is
    not trustworthy.  Either way the mean cosine is mapped to [0,1] and
    scaled by min_len/max_len so dropped or invented steps cost
    proportionally.  Symmetric in its arguments.
    """
    gen = _step_matrix(gen_steps)
    gt = _step_matrix(gt_steps)
    if gen.shape[1] != gt.shape[1]:
        raise DimMismatch(f"embedding dims differ: {gen.shape[1]} vs {gt.shape[1]}")
    m = min(gen.shape[0], gt.shape[0])
    if matching == "index":
        cos = np.diag(_cosine_matrix(gen[:m], gt[:m]))
    elif matching == "greedy":
        sim = _cosine_matrix(gen, gt)
        picked = []
        free_rows = set(range(sim.shape[0]))
        free_cols = set(range(sim.shape[1]))
        while len(picked) < m:
            best = max(
                ((sim[i, j], -i, -j) for i in free_rows for j in free_cols)
            )
            val, i, j = best[0], -best[1], -best[2]
            picked.append(val)
            free_rows.remove(i)
            free_cols.remove(j)
        cos = np.array(picked)
    else:
        raise ValueError(f"unknown matching {matching!r}")
    coverage = m / max(gen.shape[0], gt.shape[0])
    return (float(cos.mean()) + 1.0) / 2.0 * coverage


def logic_score(verdicts) -> float:
    """Fraction of pass verdicts; n * score is always an integer count."""
    verdicts = list(verdicts)
    if not verdicts:
        raise EmptyVerdicts("no verdicts to score")
    passes = sum(1 for v in verdicts if v is LogicVerdict.PASS or v == "pass")
    return passes / len(verdicts)


def semantic_diversity(global_embeddings) -> float:
    """1 - mean pairwise cosine within a task/model group, clamped to [0,1]."""
    vecs = []
    for emb in global_embeddings:
        arr = np.asarray(emb.data if isinstance(emb, EmbeddingTensor) else emb, dtype=np.float64)
        vecs.append(arr.ravel())
    if len(vecs) < 2:
        raise TooFewVideos(f"diversity needs >= 2 videos, got {len(vecs)}")
    dims = {v.shape[0] for v in vecs}
    if len(dims) != 1:
        raise DimMismatch(f"global embedding dims differ: {sorted(dims)}")
    mat = np.vstack(vecs)
    norms = np.linalg.norm(mat, axis=1)
    if (norms == 0).any():
        raise EmptySteps("zero-norm global embedding; cosine undefined")
    unit = mat / norms[:, None]
    cos = unit @ unit.T
    n = len(vecs)
    iu = np.triu_indices(n, k=1)
    mean_sim = float(np.clip(cos[iu], -1.0, 1.0).mean())
    return float(np.clip(1.0 - mean_sim, 0.0, 1.0))

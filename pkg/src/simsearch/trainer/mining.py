"""Online semi-hard negative mining and the triplet hinge loss.

For every ordered anchor-positive pair (i, j) the mined negative is the
closest negative strictly farther from the anchor than the positive; when
no such negative exists the farthest negative is used instead and the pair
is flagged as not semi-hard. Distances are squared Euclidean throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.vectorops import squared_distances
from ..exceptions import NoNegativesError, NoValidPairsError
from ..validation import as_matrix, check_labels


@dataclass
class TripletBatchState:
    """Mined minibatch: pairwise distances plus per-pair negative choices.

    neg_index[i, j] is the chosen negative for anchor-positive pair (i, j),
    -1 where (i, j) is not a valid pair. semi_hard[i, j] marks pairs whose
    negative satisfied the distance constraint (False = fallback branch).
    """

    embeddings: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    pdist2: np.ndarray = field(repr=False)
    pos_mask: np.ndarray = field(repr=False)
    neg_index: np.ndarray = field(repr=False)
    semi_hard: np.ndarray = field(repr=False)
    margin: float = 1.0

    @property
    def n_pairs(self) -> int:
        return int(self.pos_mask.sum())


def mine_semi_hard(embeddings, labels, margin: float = 1.0) -> TripletBatchState:
    """Mine one negative per ordered anchor-positive pair."""
    emb = as_matrix(embeddings, "embeddings")
    n = emb.shape[0]
    lab = check_labels(labels, n)
    if n < 2:
        raise NoValidPairsError("need at least 2 samples")

    same = lab[:, None] == lab[None, :]
    pos_mask = same & ~np.eye(n, dtype=bool)
    if not pos_mask.any():
        raise NoValidPairsError("no anchor-positive pair in batch")
    neg_mask = ~same
    if not neg_mask.any():
        raise NoNegativesError("batch holds a single class; no negatives exist")

    d2 = squared_distances(emb)

    # candidates[i, j, m]: m is a negative of i with d2(i, m) > d2(i, j).
    farther = d2[:, None, :] > d2[:, :, None]
    candidates = farther & neg_mask[:, None, :]

    d_neg = np.broadcast_to(d2[:, None, :], (n, n, n))
    masked_min = np.where(candidates, d_neg, np.inf)
    semi_hard_choice = np.argmin(masked_min, axis=2)
    has_semi_hard = candidates.any(axis=2)

    masked_max = np.where(neg_mask[:, None, :], d_neg, -np.inf)
    fallback_choice = np.argmax(masked_max, axis=2)

    neg_index = np.where(has_semi_hard, semi_hard_choice, fallback_choice)
    neg_index = np.where(pos_mask, neg_index, -1)
    semi_hard = has_semi_hard & pos_mask

    return TripletBatchState(
        embeddings=emb,
        labels=lab,
        pdist2=d2,
        pos_mask=pos_mask,
        neg_index=neg_index,
        semi_hard=semi_hard,
        margin=float(margin),
    )


def pair_terms(state: TripletBatchState, margin: float | None = None) -> np.ndarray:
    """Hinge term per ordered pair, zeros outside the pair mask."""
    m = state.margin if margin is None else float(margin)
    anchors, positives = np.nonzero(state.pos_mask)
    negatives = state.neg_index[anchors, positives]
    raw = state.pdist2[anchors, positives] - state.pdist2[anchors, negatives] + m
    terms = np.zeros_like(state.pdist2)
    terms[anchors, positives] = np.maximum(raw, 0.0)
    return terms


def triplet_semi_hard_loss(state: TripletBatchState, margin: float | None = None) -> float:
    """Mean hinge over all ordered anchor-positive pairs."""
    terms = pair_terms(state, margin)
    return float(terms.sum() / state.n_pairs)

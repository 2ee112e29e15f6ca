"""Analytic gradient of the mined triplet loss through the embedding head.

Mining is treated as fixed during differentiation (standard subgradient
through the argmin/argmax selection); the hinge subgradient at exactly
zero is taken as zero.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import NonFiniteError
from .mining import mine_semi_hard, triplet_semi_hard_loss
from .model import EmbeddingModel, backprop, forward_cached


def loss_embedding_grad(state) -> np.ndarray:
    """dLoss/dEmbeddings for a mined batch (graph-Laplacian form)."""
    n = state.embeddings.shape[0]
    anchors, positives = np.nonzero(state.pos_mask)
    negatives = state.neg_index[anchors, positives]
    raw = state.pdist2[anchors, positives] - state.pdist2[anchors, negatives] + state.margin
    active = raw > 0.0

    weight = 1.0 / state.n_pairs
    g = np.zeros((n, n))
    np.add.at(g, (anchors[active], positives[active]), weight)
    np.add.at(g, (anchors[active], negatives[active]), -weight)

    h = g + g.T
    return 2.0 * (h.sum(axis=1)[:, None] * state.embeddings - h @ state.embeddings)


def loss_gradient(
    model: EmbeddingModel, features, labels, margin: float = 1.0
) -> tuple[float, list[np.ndarray]]:
    """Loss value and exact gradients w.r.t. model.params()."""
    y, cache = forward_cached(model, features)
    state = mine_semi_hard(y, labels, margin)
    loss = triplet_semi_hard_loss(state)
    grads = backprop(model, cache, loss_embedding_grad(state))
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("gradient contains NaN/Inf")
    return loss, grads

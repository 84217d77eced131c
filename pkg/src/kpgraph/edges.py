"""Edge sets of the two factor graphs and of their Kronecker product graph.

Node ``j * p + i`` of the ``pq``-node graph is cell ``(i, j)`` of ``Z``
(column-stacking ``vec``). Cells ``(i, j)`` and ``(k, l)`` are adjacent iff

* ``i != k`` and ``j != l``: both ``{i, k}`` in the p-graph and ``{j, l}`` in
  the q-graph;
* ``i != k`` and ``j == l``: ``{i, k}`` in the p-graph;
* ``i == k`` and ``j != l``: ``{j, l}`` in the q-graph.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SCOPES = ("omega", "gamma", "combined")


def _clean_adjacency(A):
    A = np.asarray(A, dtype=bool)
    A = A | A.T
    A = A.copy()
    np.fill_diagonal(A, False)
    return A


def kpg_edges(S_p, S_q, p=None, q=None):
    """Adjacency of the ``pq``-node graph from the two factor adjacencies.

    ``S_p`` / ``S_q`` may be boolean matrices or iterables of index pairs.
    """
    Ap = _as_adjacency(S_p, p)
    Aq = _as_adjacency(S_q, q)
    A = np.kron(Aq | np.eye(Aq.shape[0], dtype=bool), Ap | np.eye(Ap.shape[0], dtype=bool))
    np.fill_diagonal(A, False)
    return A


def _as_adjacency(S, d):
    if isinstance(S, np.ndarray) and S.ndim == 2:
        return _clean_adjacency(S)
    if d is None:
        raise ValueError("dimension required when edges are given as pairs")
    A = np.zeros((d, d), dtype=bool)
    for i, j in S:
        if i != j:
            A[i, j] = A[j, i] = True
    return A


def edge_list(A):
    """Sorted ``(i, j)`` pairs with ``i < j`` from an adjacency matrix."""
    iu, ju = np.nonzero(np.triu(np.asarray(A, dtype=bool), 1))
    return list(zip(iu.tolist(), ju.tolist()))


@dataclass
class EdgeReport:
    """Estimated (or true) edge sets with nonnegative weights."""

    omega_adj: np.ndarray
    gamma_adj: np.ndarray
    omega_weights: np.ndarray
    gamma_weights: np.ndarray

    def __post_init__(self):
        self.omega_adj = _clean_adjacency(self.omega_adj)
        self.gamma_adj = _clean_adjacency(self.gamma_adj)

    @property
    def p(self):
        return self.omega_adj.shape[0]

    @property
    def q(self):
        return self.gamma_adj.shape[0]

    @property
    def combined_adj(self):
        return kpg_edges(self.omega_adj, self.gamma_adj)

    def adjacency(self, scope):
        if scope == "omega":
            return self.omega_adj
        if scope == "gamma":
            return self.gamma_adj
        if scope == "combined":
            return self.combined_adj
        raise ValueError(f"unknown scope {scope!r}; expected one of {SCOPES}")

    def edges(self, scope):
        return edge_list(self.adjacency(scope))

    def normalized_weights(self, scope):
        """Edge weights scaled so the largest off-diagonal weight is 1."""
        if scope == "omega":
            W, A = self.omega_weights, self.omega_adj
        elif scope == "gamma":
            W, A = self.gamma_weights, self.gamma_adj
        else:
            raise ValueError("weights exist only for the factor graphs")
        W = np.where(A, W, 0.0)
        top = W.max() if W.size else 0.0
        return W / top if top > 0 else W

    def combined_weights(self):
        """Weights on the ``pq``-node graph, max 1.

        A pair differing in both indices gets the product of the two factor
        weights; a pair sharing one index gets the other factor's weight.
        """
        Wp = self.normalized_weights("omega") + np.eye(self.p)
        Wq = self.normalized_weights("gamma") + np.eye(self.q)
        W = np.where(self.combined_adj, np.kron(Wq, Wp), 0.0)
        top = W.max() if W.size else 0.0
        return W / top if top > 0 else W

    @classmethod
    def from_supports(cls, S_p, S_q):
        Ap = _clean_adjacency(S_p)
        Aq = _clean_adjacency(S_q)
        return cls(Ap, Aq, Ap.astype(float), Aq.astype(float))

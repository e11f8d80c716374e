"""Optimal dependence-tree approximation of the phase model.

Pairwise von Mises fits on wrapped phase differences give closed-form
mutual-information edge weights; the maximum spanning tree over those
weights is the best tree-structured approximation. Node marginals are
uniform on the circle, so the tree likelihood needs only the per-edge
conditionals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circular import LOG_TWO_PI, kappa_from_resultant, log_bessel_i0, mi_from_kappa, wrap
from .model import GraphModel, GraphStructure, PhaseDataset


@dataclass(frozen=True)
class PairwiseTable:
    """All-pairs fitted couplings and mutual-information weights.

    ``mu[a, b]`` is the fitted location of the difference y_b - y_a, so the
    table is antisymmetric in mu and symmetric in kappa and mi.
    """

    kappa: np.ndarray
    mu: np.ndarray
    mi: np.ndarray
    degenerate: np.ndarray

    @property
    def p(self) -> int:
        return self.kappa.shape[0]


def fit_pairwise(d: PhaseDataset) -> PairwiseTable:
    """Fit a von Mises distribution to every pairwise wrapped difference.

    The per-pair mean resultant comes from the cosine/sine Gram matrices
    (O(n p^2) total), and each concentration inverts the Bessel ratio
    through the same root-finder as :func:`phasefield.circular.vm_mle`.
    """
    if d.n < 2:
        raise ValueError("pairwise fitting needs at least 2 samples")
    p = d.p
    c = np.cos(d.values)
    s = np.sin(d.values)
    mean_cos = (c.T @ c + s.T @ s) / d.n
    mean_sin = (c.T @ s - s.T @ c) / d.n

    kappa = np.zeros((p, p))
    mu = np.zeros((p, p))
    mi = np.zeros((p, p))
    degenerate = np.zeros((p, p), dtype=bool)
    for i in range(p):
        for j in range(i + 1, p):
            rbar = math.hypot(mean_cos[i, j], mean_sin[i, j])
            k_hat, degen = kappa_from_resultant(rbar)
            m_hat = math.atan2(mean_sin[i, j], mean_cos[i, j])
            kappa[i, j] = kappa[j, i] = k_hat
            mu[i, j] = m_hat
            mu[j, i] = wrap(-m_hat)
            mi[i, j] = mi[j, i] = mi_from_kappa(k_hat)
            degenerate[i, j] = degenerate[j, i] = degen
    return PairwiseTable(kappa=kappa, mu=mu, mi=mi, degenerate=degenerate)


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def max_spanning_tree(weights) -> list[tuple[int, int]]:
    """Maximum-weight spanning tree by Kruskal over a dense weight matrix.

    Ties break lexicographically by edge (i, j), so the result is
    deterministic. Returns the p-1 edges in canonical sorted order.
    """
    w = np.asarray(weights, dtype=float)
    p = w.shape[0]
    if w.shape != (p, p) or p < 2:
        raise ValueError("weights must be a square matrix with p >= 2")
    if not np.all(np.isfinite(w[np.triu_indices(p, k=1)])):
        raise ValueError("weights must be finite")
    ranked = sorted(
        ((i, j) for i in range(p) for j in range(i + 1, p)),
        key=lambda e: (-w[e[0], e[1]], e[0], e[1]),
    )
    dsu = _DisjointSet(p)
    chosen = [e for e in ranked if dsu.union(*e)]
    return sorted(chosen)


@dataclass(frozen=True)
class TreeModel:
    """Rooted spanning tree with per-edge von Mises conditionals.

    Arrays are indexed by child node: ``mu[c]`` locates the difference
    y_c - y_parent(c). Root entries are unused. The root marginal is
    uniform on the circle.
    """

    root: int
    parent: np.ndarray
    kappa: np.ndarray
    mu: np.ndarray
    degenerate: np.ndarray

    @property
    def p(self) -> int:
        return self.parent.size

    @property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """Directed (parent, child) pairs in child order."""
        return tuple(
            (int(self.parent[c]), c) for c in range(self.p) if c != self.root
        )

    def undirected_edges(self) -> tuple[tuple[int, int], ...]:
        return tuple(sorted((min(q, c), max(q, c)) for q, c in self.edges))

    def to_graph_model(self) -> GraphModel:
        """Equivalent joint-density model on the tree's undirected edges."""
        structure = GraphStructure(self.p, self.undirected_edges())
        kappa = np.zeros(structure.n_edges)
        mu = np.zeros(structure.n_edges)
        index = {e: k for k, e in enumerate(structure.edges)}
        for q, c in self.edges:
            k = index[(min(q, c), max(q, c))]
            kappa[k] = self.kappa[c]
            mu[k] = self.mu[c] if q < c else wrap(-self.mu[c])
        return GraphModel(structure, kappa, mu)

    def to_dict(self) -> dict:
        return {
            "root": int(self.root),
            "edges": [
                {
                    "parent": int(q),
                    "child": int(c),
                    "kappa": float(self.kappa[c]),
                    "mu": float(self.mu[c]),
                }
                for q, c in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TreeModel":
        edges = data["edges"]
        p = len(edges) + 1
        parent = np.full(p, -1, dtype=int)
        kappa = np.zeros(p)
        mu = np.zeros(p)
        for e in edges:
            c = int(e["child"])
            parent[c] = int(e["parent"])
            kappa[c] = float(e["kappa"])
            mu[c] = wrap(float(e["mu"]))
        return cls(
            root=int(data["root"]),
            parent=parent,
            kappa=kappa,
            mu=mu,
            degenerate=np.zeros(p, dtype=bool),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "TreeModel":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def _validate(self) -> None:
        p = self.p
        if not (0 <= self.root < p) or self.parent[self.root] != -1:
            raise ValueError("root must have no parent")
        # every non-root must reach the root without cycles
        for c in range(p):
            seen = set()
            node = c
            while node != self.root:
                if node in seen or not (0 <= node < p):
                    raise ValueError("parent map does not encode a rooted tree")
                seen.add(node)
                node = int(self.parent[node])

    def __post_init__(self):
        self._validate()


def fit_chow_liu(d: PhaseDataset, root: int = 0) -> TreeModel:
    """Fit the maximum-likelihood dependence tree to phase data.

    Pairwise fits supply the mutual-information weights, Kruskal picks the
    spanning tree, and the per-edge conditionals are the fitted pairwise
    parameters oriented parent-to-child from ``root``.
    """
    if not (0 <= root < d.p):
        raise ValueError(f"root {root} out of range")
    table = fit_pairwise(d)
    edges = max_spanning_tree(table.mi)
    adjacency: dict[int, list[int]] = {u: [] for u in range(d.p)}
    for i, j in edges:
        adjacency[i].append(j)
        adjacency[j].append(i)
    parent = np.full(d.p, -1, dtype=int)
    kappa = np.zeros(d.p)
    mu = np.zeros(d.p)
    degenerate = np.zeros(d.p, dtype=bool)
    frontier = [root]
    visited = {root}
    while frontier:
        q = frontier.pop()
        for c in sorted(adjacency[q]):
            if c in visited:
                continue
            visited.add(c)
            parent[c] = q
            kappa[c] = table.kappa[q, c]
            mu[c] = table.mu[q, c]
            degenerate[c] = table.degenerate[q, c]
            frontier.append(c)
    return TreeModel(root=root, parent=parent, kappa=kappa, mu=mu, degenerate=degenerate)


def tree_log_likelihood(y, t: TreeModel) -> float:
    """Exact log density of one sample under the tree model."""
    y = np.asarray(y, dtype=float)
    if y.shape != (t.p,):
        raise ValueError(f"sample length {y.shape} does not match p={t.p}")
    return float(tree_log_likelihood_batch(y[None, :], t)[0])


def tree_log_likelihood_batch(values, t: TreeModel) -> np.ndarray:
    """Vectorized :func:`tree_log_likelihood` over rows of ``values``."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != t.p:
        raise ValueError(f"values must be (n, {t.p})")
    children = np.array([c for c in range(t.p) if c != t.root], dtype=int)
    out = np.full(values.shape[0], -LOG_TWO_PI)
    if children.size == 0:
        return out
    parents = t.parent[children]
    kappas = t.kappa[children]
    mus = t.mu[children]
    log_norms = np.array([LOG_TWO_PI + log_bessel_i0(k) for k in kappas])
    diffs = values[:, children] - values[:, parents]
    out += (kappas * np.cos(diffs - mus) - log_norms).sum(axis=1)
    return out

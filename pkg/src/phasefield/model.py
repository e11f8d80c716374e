"""The pairwise phase-coupling graphical model.

Joint density over p phases: proportional to
``exp(sum over edges (i,j) of kappa_ij * cos(y_j - y_i - mu_ij))``.
Edges are stored unordered with the i < j orientation fixed; reversing an
edge negates mu (cos(y_j - y_i - mu) = cos(y_i - y_j + mu)), so one
canonical direction removes any sign ambiguity downstream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circular import LOG_TWO_PI, VonMisesParams, wrap


@dataclass(frozen=True)
class GraphStructure:
    """Undirected graph on ``p`` nodes; edges canonicalized to i < j."""

    p: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.p < 1:
            raise ValueError("node count must be >= 1")
        canon = []
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if i > j:
                i, j = j, i
            if not (0 <= i < j < self.p):
                raise ValueError(f"edge ({i}, {j}) out of range for p={self.p}")
            canon.append((i, j))
        if len(set(canon)) != len(canon):
            raise ValueError("duplicate edges")
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int) -> list[int]:
        out = []
        for i, j in self.edges:
            if i == u:
                out.append(j)
            elif j == u:
                out.append(i)
        return sorted(out)


@dataclass(frozen=True)
class EdgeCoupling:
    """Coupling strength ``kappa`` >= 0 and preferred phase offset ``mu``."""

    kappa: float
    mu: float

    def __post_init__(self):
        if not math.isfinite(self.kappa) or self.kappa < 0.0:
            raise ValueError(f"kappa must be finite and >= 0, got {self.kappa}")
        object.__setattr__(self, "kappa", float(self.kappa))
        object.__setattr__(self, "mu", wrap(float(self.mu)))


@dataclass(frozen=True)
class NaturalEdgeParams:
    """Cartesian form (kappa*cos(mu), kappa*sin(mu)) of an edge coupling."""

    theta_c: float
    theta_s: float

    def __post_init__(self):
        if not (math.isfinite(self.theta_c) and math.isfinite(self.theta_s)):
            raise ValueError("natural parameters must be finite")


def to_natural(e: EdgeCoupling) -> NaturalEdgeParams:
    return NaturalEdgeParams(e.kappa * math.cos(e.mu), e.kappa * math.sin(e.mu))


def from_natural(n: NaturalEdgeParams) -> EdgeCoupling:
    kappa = math.hypot(n.theta_c, n.theta_s)
    # mu is unidentifiable at kappa = 0; fix the representative at 0.
    mu = math.atan2(n.theta_s, n.theta_c) if kappa > 0.0 else 0.0
    return EdgeCoupling(kappa=kappa, mu=mu)


class GraphModel:
    """A :class:`GraphStructure` with per-edge couplings, aligned to
    ``structure.edges`` order."""

    def __init__(self, structure: GraphStructure, kappa, mu):
        kappa = np.asarray(kappa, dtype=float)
        mu = np.asarray(mu, dtype=float)
        if kappa.shape != (structure.n_edges,) or mu.shape != (structure.n_edges,):
            raise ValueError("kappa/mu must have one entry per edge")
        if not np.all(np.isfinite(kappa)) or np.any(kappa < 0.0):
            raise ValueError("kappa must be finite and >= 0")
        self.structure = structure
        self.kappa = kappa.copy()
        self.mu = np.asarray(wrap(mu), dtype=float).reshape(mu.shape).copy()
        self.kappa.flags.writeable = False
        self.mu.flags.writeable = False
        self._edge_index = {e: idx for idx, e in enumerate(structure.edges)}

    @classmethod
    def from_couplings(cls, structure: GraphStructure, couplings: dict) -> "GraphModel":
        """Build from a mapping of (i, j) -> :class:`EdgeCoupling`."""
        keys = {(min(i, j), max(i, j)) for i, j in couplings}
        if keys != set(structure.edges):
            raise ValueError("couplings must be keyed exactly by structure.edges")
        kappa = np.empty(structure.n_edges)
        mu = np.empty(structure.n_edges)
        for idx, e in enumerate(structure.edges):
            c = couplings.get(e) or couplings.get((e[1], e[0]))
            kappa[idx] = c.kappa
            mu[idx] = c.mu
        return cls(structure, kappa, mu)

    @property
    def p(self) -> int:
        return self.structure.p

    def coupling(self, i: int, j: int) -> EdgeCoupling:
        idx = self._edge_index[(min(i, j), max(i, j))]
        return EdgeCoupling(self.kappa[idx], self.mu[idx])

    def natural_vector(self) -> np.ndarray:
        """Full natural-parameter vector, (theta_c, theta_s) per edge in
        ``structure.edges`` order."""
        out = np.empty(2 * self.structure.n_edges)
        out[0::2] = self.kappa * np.cos(self.mu)
        out[1::2] = self.kappa * np.sin(self.mu)
        return out

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "edges": [
                {"i": int(i), "j": int(j), "kappa": float(k), "mu": float(m)}
                for (i, j), k, m in zip(self.structure.edges, self.kappa, self.mu)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GraphModel":
        edges = tuple((int(e["i"]), int(e["j"])) for e in data["edges"])
        structure = GraphStructure(int(data["p"]), edges)
        coup = {
            (int(e["i"]), int(e["j"])): EdgeCoupling(float(e["kappa"]), float(e["mu"]))
            for e in data["edges"]
        }
        return cls.from_couplings(structure, coup)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path) -> "GraphModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


class PhaseDataset:
    """n samples x p nodes of angles in [-pi, pi)."""

    def __init__(self, values):
        values = wrap(np.atleast_2d(np.asarray(values, dtype=float)))
        self.values = values
        self.values.flags.writeable = False

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def to_csv(self, path) -> None:
        np.savetxt(path, self.values, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path) -> "PhaseDataset":
        values = np.loadtxt(path, delimiter=",", ndmin=2)
        if not np.all(np.isfinite(values)):
            raise ValueError(f"non-finite phase values in {path}")
        return cls(values)


@dataclass(frozen=True)
class SufficientStats:
    """Per-edge (cos, sin) of wrapped differences y_j - y_i for one sample."""

    edges: tuple[tuple[int, int], ...]
    pairs: np.ndarray  # (n_edges, 2)

    @property
    def phi(self) -> np.ndarray:
        """Flat vector view, (cos, sin) interleaved per edge."""
        return self.pairs.reshape(-1)


def suff_stats(y, g: GraphStructure) -> SufficientStats:
    """Sufficient statistics of one sample under structure ``g``."""
    y = np.asarray(y, dtype=float)
    if y.shape != (g.p,):
        raise ValueError(f"sample length {y.shape} does not match p={g.p}")
    pairs = np.empty((g.n_edges, 2))
    for idx, (i, j) in enumerate(g.edges):
        d = y[j] - y[i]
        pairs[idx, 0] = math.cos(d)
        pairs[idx, 1] = math.sin(d)
    return SufficientStats(edges=g.edges, pairs=pairs)


def _edge_arrays(structure: GraphStructure) -> tuple[np.ndarray, np.ndarray]:
    if structure.n_edges == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    e = np.asarray(structure.edges, dtype=int)
    return e[:, 0], e[:, 1]


def unnorm_log_density(y, m: GraphModel) -> float:
    """Log of the unnormalized joint density at one sample."""
    y = np.asarray(y, dtype=float)
    if y.shape != (m.p,):
        raise ValueError(f"sample length {y.shape} does not match p={m.p}")
    return float(unnorm_log_density_batch(y[None, :], m)[0])


def unnorm_log_density_batch(values, m: GraphModel) -> np.ndarray:
    """Vectorized :func:`unnorm_log_density` over rows of ``values`` (n, p)."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != m.p:
        raise ValueError(f"values must be (n, {m.p})")
    if m.structure.n_edges == 0:
        return np.zeros(values.shape[0])
    ei, ej = _edge_arrays(m.structure)
    diffs = values[:, ej] - values[:, ei]
    return np.cos(diffs - m.mu) @ m.kappa


def conditional_params(u: int, y, m: GraphModel) -> VonMisesParams:
    """Von Mises parameters of Y_u given the other coordinates of ``y``.

    ``y`` is a full-length sample; entry ``u`` is ignored. The resultant of
    the neighbor phasors sets both the concentration and the location; an
    isolated node (or exact destructive interference) yields the uniform
    conditional. Stored edges are oriented i < j, so mu enters with a minus
    sign when u is the smaller endpoint and a plus sign when it is the
    larger one.
    """
    y = np.asarray(y, dtype=float)
    if not (0 <= u < m.p):
        raise ValueError(f"node {u} out of range")
    if y.shape != (m.p,):
        raise ValueError(f"sample length {y.shape} does not match p={m.p}")
    s = 0j
    for idx, (i, j) in enumerate(m.structure.edges):
        if i == u:
            s += m.kappa[idx] * np.exp(1j * (y[j] - m.mu[idx]))
        elif j == u:
            s += m.kappa[idx] * np.exp(1j * (y[i] + m.mu[idx]))
    a = abs(s)
    if a == 0.0:
        return VonMisesParams(0.0, 0.0)
    return VonMisesParams(math.atan2(s.imag, s.real), a)


@dataclass(frozen=True)
class McLogPartition:
    """Monte Carlo log-partition estimate with its jackknife standard error."""

    log_z: float
    std_error: float
    n_draws: int


def mc_log_partition(m: GraphModel, n_mc: int, rng: np.random.Generator) -> McLogPartition:
    """Estimate log Z by uniform-proposal importance sampling.

    log Z = p*log(2 pi) + log(mean of exp(unnormalized log density) over
    uniform draws), stabilized by a shared max-exponent shift. The reported
    standard error is the delete-one jackknife of the log estimate.
    """
    if n_mc < 1000:
        raise ValueError("n_mc must be >= 1000")
    draws = rng.uniform(-np.pi, np.pi, size=(n_mc, m.p))
    w = unnorm_log_density_batch(draws, m)
    shift = w.max()
    e = np.exp(w - shift)
    total = e.sum()
    log_z = m.p * LOG_TWO_PI + shift + math.log(total / n_mc)
    # Delete-one jackknife over the shifted weights; constants cancel.
    loo = np.log((total - e) / (n_mc - 1))
    se = math.sqrt((n_mc - 1) / n_mc * np.sum((loo - loo.mean()) ** 2))
    return McLogPartition(log_z=log_z, std_error=se, n_draws=n_mc)


def random_tree_structure(p: int, rng: np.random.Generator) -> GraphStructure:
    """Uniform random labeled tree on ``p`` nodes (Pruefer decoding)."""
    if p < 2:
        raise ValueError("a tree needs at least 2 nodes")
    if p == 2:
        return GraphStructure(2, ((0, 1),))
    seq = rng.integers(0, p, size=p - 2)
    degree = np.ones(p, dtype=int)
    for a in seq:
        degree[a] += 1
    edges = []
    for a in seq:
        leaf = int(np.nonzero(degree == 1)[0][0])
        edges.append((leaf, int(a)))
        degree[leaf] -= 1
        degree[a] -= 1
    u, v = np.nonzero(degree == 1)[0]
    edges.append((int(u), int(v)))
    return GraphStructure(p, tuple(edges))


def grid4_structure(rows: int, cols: int) -> GraphStructure:
    """Four-connected toroidal grid: each node couples to its lattice
    neighbors with wraparound."""
    if rows < 2 or cols < 2:
        raise ValueError("grid needs at least 2 rows and 2 columns")
    edges = set()
    for r in range(rows):
        for c in range(cols):
            u = r * cols + c
            right = r * cols + (c + 1) % cols
            down = ((r + 1) % rows) * cols + c
            for v in (right, down):
                if u != v:
                    edges.add((min(u, v), max(u, v)))
    return GraphStructure(rows * cols, tuple(sorted(edges)))


def uniform_coupling_model(structure: GraphStructure, kappa: float = 1.0, mu: float = 0.0) -> GraphModel:
    """Model with identical (kappa, mu) on every edge of ``structure``."""
    n = structure.n_edges
    return GraphModel(structure, np.full(n, float(kappa)), np.full(n, float(mu)))

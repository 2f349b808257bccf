"""Exact finite-n quantities by brute-force enumeration.

Homomorphism counts here are deliberately naive: they are the ground truth
the asymptotic formulas and the sampler are checked against.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, ResourceError
from .model import BetaLike, as_beta

__all__ = [
    "SubgraphSpec",
    "GraphState",
    "HOM_BUDGET",
    "MAX_EXACT_N",
    "hom_count",
    "hom_density",
    "default_subgraph",
    "graph_densities",
    "exact_psi_n",
    "exact_expectation",
]

HOM_BUDGET = 10**8
MAX_EXACT_N = 6


@dataclass(frozen=True)
class SubgraphSpec:
    """A small pattern graph H given by its vertex count and edge list.

    Text form is ``"n_vertices; i-j,i-j,..."``, e.g. ``"3; 0-1,1-2,0-2"``.
    """

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(int(v) for v in e) for e in self.edges))
        if self.n_vertices < 1:
            raise DomainError("a subgraph needs at least one vertex")
        seen = set()
        for a, b in self.edges:
            if a == b:
                raise DomainError(f"loop at vertex {a}")
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
                raise DomainError(f"edge {a}-{b} out of range for {self.n_vertices} vertices")
            key = frozenset((a, b))
            if key in seen:
                raise DomainError(f"duplicate edge {a}-{b}")
            seen.add(key)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __str__(self):
        return f"{self.n_vertices}; " + ",".join(f"{a}-{b}" for a, b in self.edges)

    @classmethod
    def parse(cls, text: str) -> "SubgraphSpec":
        try:
            head, _, tail = text.partition(";")
            edges = [tuple(int(v) for v in tok.split("-")) for tok in tail.split(",") if tok.strip()]
            return cls(int(head), tuple(edges))
        except ValueError as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"cannot parse subgraph {text!r}: {exc}") from exc

    @classmethod
    def edge(cls) -> "SubgraphSpec":
        return cls(2, ((0, 1),))

    @classmethod
    def path(cls, k: int) -> "SubgraphSpec":
        """Path with k edges."""
        return cls(k + 1, tuple((i, i + 1) for i in range(k)))

    @classmethod
    def cycle(cls, k: int) -> "SubgraphSpec":
        return cls(k, tuple((i, (i + 1) % k) for i in range(k)))

    @classmethod
    def triangle(cls) -> "SubgraphSpec":
        return cls(3, ((0, 1), (1, 2), (0, 2)))


def default_subgraph(k: int) -> SubgraphSpec:
    """Pattern with k edges: single edge, 2-star, or the k-cycle."""
    if k == 1:
        return SubgraphSpec.edge()
    if k == 2:
        return SubgraphSpec.path(2)
    if k == 3:
        return SubgraphSpec.triangle()
    return SubgraphSpec.cycle(k)


@dataclass(frozen=True, eq=False)
class GraphState:
    n: int
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=bool)
        if a.shape != (self.n, self.n):
            raise DomainError(f"adjacency shape {a.shape} does not match n={self.n}")
        if a.diagonal().any():
            raise DomainError("adjacency must have a zero diagonal")
        if not (a == a.T).all():
            raise DomainError("adjacency must be symmetric")
        object.__setattr__(self, "adjacency", a)

    @classmethod
    def empty(cls, n: int) -> "GraphState":
        return cls(n, np.zeros((n, n), dtype=bool))

    @classmethod
    def complete(cls, n: int) -> "GraphState":
        return cls(n, ~np.eye(n, dtype=bool))

    @classmethod
    def from_edges(cls, n: int, edges) -> "GraphState":
        a = np.zeros((n, n), dtype=bool)
        for i, j in edges:
            a[i, j] = a[j, i] = True
        return cls(n, a)

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.sum()) // 2

    def __eq__(self, other):
        return (isinstance(other, GraphState) and self.n == other.n
                and bool((self.adjacency == other.adjacency).all()))


def _check_budget(n: int, h: SubgraphSpec, budget: int):
    if n ** h.n_vertices > budget:
        raise ResourceError(
            f"{n}^{h.n_vertices} vertex maps exceed the budget of {budget}"
        )


def hom_count(h: SubgraphSpec, g: GraphState, budget: int = HOM_BUDGET) -> int:
    """Number of maps V(H) -> V(G) sending every edge of H onto an edge of G.

    Plain depth-first enumeration over vertex maps in vertex order, pruning
    as soon as an edge between assigned vertices is violated.
    """
    if g.n < 1:
        raise DomainError("graph must have at least one vertex")
    _check_budget(g.n, h, budget)
    adj = g.adjacency
    k = h.n_vertices
    back = [[] for _ in range(k)]
    for a, b in h.edges:
        back[max(a, b)].append(min(a, b))
    phi = [0] * k

    def extend(v):
        if v == k:
            return 1
        total = 0
        for c in range(g.n):
            if all(adj[c, phi[w]] for w in back[v]):
                phi[v] = c
                total += extend(v + 1)
        return total

    return extend(0)


def hom_density(h: SubgraphSpec, g: GraphState, budget: int = HOM_BUDGET) -> float:
    return hom_count(h, g, budget) / g.n ** h.n_vertices


# ---------------------------------------------------------------------------
# exhaustive enumeration over G_n


def _pairs(n: int) -> list[tuple[int, int]]:
    return list(combinations(range(n), 2))


def _all_adjacencies(n: int) -> np.ndarray:
    """Adjacency of every graph on n labelled vertices, indexed by edge bitmask.

    Bit k of the index is pair k in lexicographic (i, j), i < j order.
    """
    pairs = _pairs(n)
    codes = np.arange(2 ** len(pairs), dtype=np.int64)
    bits = (codes[:, None] >> np.arange(len(pairs))) & 1
    adj = np.zeros((codes.size, n, n))
    for k, (i, j) in enumerate(pairs):
        adj[:, i, j] = adj[:, j, i] = bits[:, k]
    return adj


def _batch_hom_counts(adj: np.ndarray, h: SubgraphSpec) -> np.ndarray:
    """hom(H, G) for a stack of adjacency matrices, via one tensor contraction."""
    n = adj.shape[1]
    letters = string.ascii_letters
    used = {v for e in h.edges for v in e}
    isolated = h.n_vertices - len(used)
    if not h.edges:
        return np.full(adj.shape[0], float(n) ** isolated)
    terms = ["Z" + letters[a] + letters[b] for a, b in h.edges]
    counts = np.einsum(",".join(terms) + "->Z", *([adj] * len(terms)), optimize=True)
    return counts * float(n) ** isolated


@lru_cache(maxsize=32)
def graph_densities(n: int, h: SubgraphSpec) -> np.ndarray:
    """t(H, G) for every graph G on n vertices, in edge-bitmask order."""
    _check_n(n)
    _check_budget(n, h, HOM_BUDGET)
    counts = _batch_hom_counts(_all_adjacencies(n), h)
    out = counts / float(n) ** h.n_vertices
    out.setflags(write=False)
    return out


def _check_n(n: int):
    if n > MAX_EXACT_N:
        raise ResourceError(
            f"exact enumeration is limited to n <= {MAX_EXACT_N} "
            f"(n={n} means 2^{n * (n - 1) // 2} graphs)"
        )
    if n < 2:
        raise DomainError(f"need n >= 2, got {n}")


def _energies(n: int, beta: BetaLike, h2: SubgraphSpec, h3: SubgraphSpec) -> np.ndarray:
    b1, b2, b3 = as_beta(beta)
    t1 = graph_densities(n, SubgraphSpec.edge())
    t2 = graph_densities(n, h2)
    t3 = graph_densities(n, h3)
    return n * n * (b1 * t1 + b2 * t2 + b3 * t3)


def exact_psi_n(n: int, beta: BetaLike, h2: SubgraphSpec, h3: SubgraphSpec) -> float:
    """Finite-n free energy density (1/n^2) log Z by summing over all graphs."""
    _check_n(n)
    return float(logsumexp(_energies(n, beta, h2, h3))) / (n * n)


def exact_expectation(n: int, beta: BetaLike, h_target: SubgraphSpec,
                      h2: SubgraphSpec, h3: SubgraphSpec) -> float:
    """Gibbs mean of t(h_target, G) under the finite-n model."""
    _check_n(n)
    e = _energies(n, beta, h2, h3)
    w = np.exp(e - logsumexp(e))
    return float(w @ graph_densities(n, h_target))


"""Heat-bath Gibbs sampler for the finite-n model.

Each update resamples one edge from its exact conditional law
``P(edge) = sigmoid(dH)``, where ``dH`` is the change in
``n^2 (b1 t1 + b2 t2 + b3 t3)`` from adding the edge. The homomorphism
changes are counted exactly by enumerating only the maps that put some edge
of H onto the flipped pair; adjacency rows are 64-bit masks, so n <= 62.

Randomness: ``numpy.random.Generator(PCG64(seed))``. Each sweep draws N
doubles as sort keys (visit order = stable argsort) and then N doubles for
the heat-bath tests, N = n(n-1)/2. ``init="random"`` draws N more doubles
before the first sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numba
import numpy as np

from ._version import __version__
from .errors import DomainError, ResourceError
from .finite import GraphState, SubgraphSpec
from .io import format_csv
from .model import BetaPoint, as_beta

__all__ = [
    "RNG_ALGORITHM",
    "ChainConfig",
    "ChainTrace",
    "hom_delta",
    "gibbs_sweep",
    "run_chain",
]

RNG_ALGORITHM = "numpy.random.PCG64"
SWEEP_ORDER = "stable-argsort-of-uniform-keys"
MAX_N = 62
TRACE_COLUMNS = ("sweep", "t_edge", "t_h2", "t_h3")


# ---------------------------------------------------------------------------
# enumeration plans


@dataclass(frozen=True)
class _Plan:
    """Vertex orders and edge checks for counting homomorphisms of one H.

    Row k < m seeds the enumeration with edge k mapped onto the flipped
    pair; row m is a plain full count. Within a row, position ``pos`` lists
    the edges (index, earlier endpoint) to check when placing ``order[pos]``.
    """

    hv: int
    m: int
    orders: np.ndarray
    chk_n: np.ndarray
    chk_l: np.ndarray
    chk_w: np.ndarray


def _bfs_order(h: SubgraphSpec, seed: list[int]) -> list[int]:
    adj = [[] for _ in range(h.n_vertices)]
    for a, b in h.edges:
        adj[a].append(b)
        adj[b].append(a)
    order, seen = list(seed), set(seed)
    k = 0
    while len(order) < h.n_vertices:
        if k == len(order):
            nxt = min(v for v in range(h.n_vertices) if v not in seen)
            order.append(nxt)
            seen.add(nxt)
        for w in adj[order[k]]:
            if w not in seen:
                order.append(w)
                seen.add(w)
        k += 1
    return order


def _make_plan(h: SubgraphSpec) -> _Plan:
    hv, m = h.n_vertices, h.n_edges
    rows = m + 1
    maxd = max(1, hv)
    orders = np.zeros((rows, hv), dtype=np.int64)
    chk_n = np.zeros((rows, hv), dtype=np.int64)
    chk_l = np.zeros((rows, hv, maxd), dtype=np.int64)
    chk_w = np.zeros((rows, hv, maxd), dtype=np.int64)
    seeds = [list(e) for e in h.edges] + [[0]]
    for r, seed in enumerate(seeds):
        order = _bfs_order(h, seed)
        pos_of = {v: k for k, v in enumerate(order)}
        orders[r] = order
        for l, (a, b) in enumerate(h.edges):
            if r < m and l == r:
                continue
            late, early = (a, b) if pos_of[a] > pos_of[b] else (b, a)
            pos = pos_of[late]
            chk_l[r, pos, chk_n[r, pos]] = l
            chk_w[r, pos, chk_n[r, pos]] = early
            chk_n[r, pos] += 1
    return _Plan(hv, m, orders, chk_n, chk_l, chk_w)


# ---------------------------------------------------------------------------
# numba kernels


@numba.njit(cache=True)
def _popcount(x):
    # SWAR bit count; masks only use the low 62 bits so x is non-negative
    x = x - ((x >> 1) & 0x5555555555555555)
    x = (x & 0x3333333333333333) + ((x >> 2) & 0x3333333333333333)
    x = (x + (x >> 4)) & 0x0F0F0F0F0F0F0F0F
    return (x * 0x0101010101010101) >> 56


@numba.njit(cache=True)
def _allowed(nb, n, i, j, kk, chk_n, chk_l, chk_w, pos, phi):
    mask = (np.int64(1) << n) - 1
    for d in range(chk_n[pos]):
        l = chk_l[pos, d]
        pw = phi[chk_w[pos, d]]
        mk = nb[pw]
        if pw == i:
            mk |= np.int64(1) << j
            if l < kk:
                mk &= ~(np.int64(1) << j)
        elif pw == j:
            mk |= np.int64(1) << i
            if l < kk:
                mk &= ~(np.int64(1) << i)
        mask &= mk
    return mask


@numba.njit(cache=True)
def _extend(nb, n, i, j, kk, order, chk_n, chk_l, chk_w, start, hv, phi, masks):
    """Count completions of the partial map ``phi`` over positions start..hv-1."""
    if start == hv:
        return 1
    if start == hv - 1:
        return _popcount(_allowed(nb, n, i, j, kk, chk_n, chk_l, chk_w, start, phi))
    masks[0] = _allowed(nb, n, i, j, kk, chk_n, chk_l, chk_w, start, phi)
    total = 0
    lev = 0
    last = hv - 2 - start
    while lev >= 0:
        m = masks[lev]
        pos = start + lev
        if m == 0:
            phi[order[pos]] = -1
            lev -= 1
            continue
        low = m & -m
        masks[lev] = m ^ low
        phi[order[pos]] = _popcount(low - 1)
        mk = _allowed(nb, n, i, j, kk, chk_n, chk_l, chk_w, pos + 1, phi)
        if lev == last:
            total += _popcount(mk)
        elif mk != 0:
            lev += 1
            masks[lev] = mk
    return total


@numba.njit(cache=True)
def _delta(nb, n, i, j, edges, orders, chk_n, chk_l, chk_w, hv, phi, masks):
    """hom(H, G + ij) - hom(H, G - ij), by the first edge of H landing on ij."""
    total = 0
    for k in range(edges.shape[0]):
        a0 = edges[k, 0]
        b0 = edges[k, 1]
        for orient in range(2):
            phi[:] = -1
            if orient == 0:
                phi[a0] = i
                phi[b0] = j
            else:
                phi[a0] = j
                phi[b0] = i
            total += _extend(nb, n, i, j, k, orders[k], chk_n[k], chk_l[k], chk_w[k], 2, hv, phi, masks)
    return total


@numba.njit(cache=True)
def _full_count(nb, n, orders, chk_n, chk_l, chk_w, hv, phi, masks):
    r = orders.shape[0] - 1
    phi[:] = -1
    return _extend(nb, n, -1, -1, -1, orders[r], chk_n[r], chk_l[r], chk_w[r], 0, hv, phi, masks)


@numba.njit(cache=True)
def _run_block(nb, n, pairs, perm, unif, coef, counts, rec,
               e2, o2, n2, l2, w2, hv2, e3, o3, n3, l3, w3, hv3):
    phi2 = np.full(hv2, -1, dtype=np.int64)
    phi3 = np.full(hv3, -1, dtype=np.int64)
    work2 = np.zeros(hv2, dtype=np.int64)
    work3 = np.zeros(hv3, dtype=np.int64)
    flips = 0
    for s in range(perm.shape[0]):
        for t in range(perm.shape[1]):
            pr = perm[s, t]
            i = pairs[pr, 0]
            j = pairs[pr, 1]
            d2 = _delta(nb, n, i, j, e2, o2, n2, l2, w2, hv2, phi2, work2)
            d3 = _delta(nb, n, i, j, e3, o3, n3, l3, w3, hv3, phi3, work3)
            dh = 2.0 * coef[0] + coef[1] * d2 + coef[2] * d3
            if dh >= 0:
                prob = 1.0 / (1.0 + math.exp(-dh))
            else:
                e = math.exp(dh)
                prob = e / (1.0 + e)
            want = unif[s, t] < prob
            has = (nb[i] >> j) & 1
            if want and not has:
                nb[i] |= np.int64(1) << j
                nb[j] |= np.int64(1) << i
                counts[0] += 2
                counts[1] += d2
                counts[2] += d3
                flips += 1
            elif has and not want:
                nb[i] &= ~(np.int64(1) << j)
                nb[j] &= ~(np.int64(1) << i)
                counts[0] -= 2
                counts[1] -= d2
                counts[2] -= d3
                flips += 1
        rec[s, 0] = counts[0]
        rec[s, 1] = counts[1]
        rec[s, 2] = counts[2]
    return flips


# ---------------------------------------------------------------------------
# state conversion


def _to_masks(g: GraphState) -> np.ndarray:
    if g.n > MAX_N:
        raise ResourceError(f"the sampler supports n <= {MAX_N}, got {g.n}")
    weights = np.int64(1) << np.arange(g.n, dtype=np.int64)
    return (g.adjacency.astype(np.int64) * weights).sum(axis=1).astype(np.int64)


def _from_masks(nb: np.ndarray, n: int) -> GraphState:
    bits = (nb[:, None] >> np.arange(n, dtype=np.int64)) & 1
    return GraphState(n, bits.astype(bool))


def _plan_args(plan: _Plan, h: SubgraphSpec):
    edges = np.asarray(h.edges, dtype=np.int64).reshape(-1, 2)
    return edges, plan.orders, plan.chk_n, plan.chk_l, plan.chk_w, plan.hv


def hom_delta(h: SubgraphSpec, g: GraphState, i: int, j: int) -> int:
    """|hom(H, G with ij)| - |hom(H, G without ij)|."""
    if i == j:
        raise DomainError("i and j must differ")
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise DomainError(f"vertices {i}, {j} out of range for n={g.n}")
    edges, orders, cn, cl, cw, hv = _plan_args(_make_plan(h), h)
    phi = np.full(hv, -1, dtype=np.int64)
    work = np.zeros(hv, dtype=np.int64)
    return int(_delta(_to_masks(g), g.n, i, j, edges, orders, cn, cl, cw, hv, phi, work))


def _hom_count_masks(h: SubgraphSpec, nb: np.ndarray, n: int) -> int:
    edges, orders, cn, cl, cw, hv = _plan_args(_make_plan(h), h)
    phi = np.full(hv, -1, dtype=np.int64)
    work = np.zeros(hv, dtype=np.int64)
    return int(_full_count(nb, n, orders, cn, cl, cw, hv, phi, work))


# ---------------------------------------------------------------------------
# public chain API


@dataclass(frozen=True)
class ChainConfig:
    n: int
    beta: BetaPoint
    h2: SubgraphSpec
    h3: SubgraphSpec
    sweeps: int
    burn_in: int = 0
    thin: int = 1
    seed: int = 0
    init: str = "empty"

    def __post_init__(self):
        object.__setattr__(self, "beta", as_beta(self.beta))
        if self.n < 2:
            raise DomainError(f"need n >= 2, got {self.n}")
        if self.n > MAX_N:
            raise ResourceError(f"the sampler supports n <= {MAX_N}, got {self.n}")
        if not self.sweeps > self.burn_in >= 0:
            raise DomainError(f"need sweeps > burn_in >= 0, got {self.sweeps}, {self.burn_in}")
        if self.thin < 1:
            raise DomainError(f"thin must be >= 1, got {self.thin}")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.init not in ("empty", "full", "random"):
            raise DomainError(f"init must be empty, full or random, got {self.init!r}")

    def manifest(self) -> dict:
        return {
            "n": self.n,
            "beta": ",".join(repr(float(b)) for b in self.beta),
            "h2": str(self.h2),
            "h3": str(self.h3),
            "sweeps": self.sweeps,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "seed": self.seed,
            "init": self.init,
            "rng": RNG_ALGORITHM,
            "sweep_order": SWEEP_ORDER,
            "version": __version__,
        }


@dataclass
class ChainTrace:
    config: ChainConfig
    sweep_index: np.ndarray
    samples: np.ndarray
    flips: int
    updates: int
    final_state: GraphState
    final_counts: tuple[int, int, int] = field(default=(0, 0, 0))

    @property
    def flip_rate(self) -> float:
        """Fraction of heat-bath updates that changed the edge."""
        return self.flips / self.updates if self.updates else 0.0

    def edge_fraction(self) -> np.ndarray:
        """Share of the n(n-1)/2 pairs present, per recorded sweep."""
        n = self.config.n
        return self.samples[:, 0] * n / (n - 1)

    def to_csv(self) -> str:
        rows = [(int(s), *map(float, row)) for s, row in zip(self.sweep_index, self.samples)]
        return format_csv(TRACE_COLUMNS, rows, self.config.manifest())


def _initial_masks(config: ChainConfig, rng: np.random.Generator, pairs: np.ndarray) -> np.ndarray:
    n = config.n
    nb = np.zeros(n, dtype=np.int64)
    if config.init == "empty":
        return nb
    present = (np.ones(len(pairs), dtype=bool) if config.init == "full"
               else rng.random(len(pairs)) < 0.5)
    for (i, j), on in zip(pairs, present):
        if on:
            nb[i] |= np.int64(1) << j
            nb[j] |= np.int64(1) << i
    return nb


class _Chain:
    def __init__(self, config: ChainConfig, nb: np.ndarray, rng: np.random.Generator):
        self.config = config
        n = config.n
        self.n = n
        self.pairs = np.array(list(combinations(range(n), 2)), dtype=np.int64)
        self.nb = nb
        self.rng = rng
        b1, b2, b3 = config.beta
        self.coef = np.array([
            b1,
            b2 * n * n / float(n) ** config.h2.n_vertices,
            b3 * n * n / float(n) ** config.h3.n_vertices,
        ])
        self.args2 = _plan_args(_make_plan(config.h2), config.h2)
        self.args3 = _plan_args(_make_plan(config.h3), config.h3)
        self.counts = np.array([
            sum(int(x).bit_count() for x in nb),
            _hom_count_masks(config.h2, nb, n),
            _hom_count_masks(config.h3, nb, n),
        ], dtype=np.int64)
        self.flips = 0

    def run(self, n_sweeps: int) -> np.ndarray:
        P = len(self.pairs)
        rec = np.zeros((n_sweeps, 3), dtype=np.int64)
        block = max(1, (1 << 20) // P)
        for s0 in range(0, n_sweeps, block):
            b = min(block, n_sweeps - s0)
            draws = self.rng.random((b, 2, P))
            perm = np.argsort(draws[:, 0, :], axis=1, kind="stable").astype(np.int64)
            unif = np.ascontiguousarray(draws[:, 1, :])
            self.flips += _run_block(
                self.nb, self.n, self.pairs, perm, unif, self.coef, self.counts,
                rec[s0:s0 + b], *self.args2, *self.args3,
            )
        return rec

    def densities(self, counts: np.ndarray) -> np.ndarray:
        n, c = self.n, self.config
        scale = np.array([float(n) ** 2, float(n) ** c.h2.n_vertices, float(n) ** c.h3.n_vertices])
        return counts / scale


def gibbs_sweep(state: GraphState, config: ChainConfig,
                rng: np.random.Generator | None = None) -> GraphState:
    """One heat-bath sweep over all pairs of ``state``; returns the new state.

    Uses ``rng`` if given (advancing it), otherwise a fresh generator seeded
    from ``config.seed``.
    """
    if state.n != config.n:
        raise DomainError(f"state has n={state.n}, config has n={config.n}")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(config.seed))
    chain = _Chain(config, _to_masks(state), rng)
    chain.run(1)
    return _from_masks(chain.nb, config.n)


def run_chain(config: ChainConfig) -> ChainTrace:
    """Run the chain, keeping every ``thin``-th sweep after ``burn_in``."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    pairs = np.array(list(combinations(range(config.n), 2)), dtype=np.int64)
    chain = _Chain(config, _initial_masks(config, rng, pairs), rng)
    rec = chain.run(config.sweeps)
    sweep = np.arange(1, config.sweeps + 1)
    keep = (sweep > config.burn_in) & ((sweep - config.burn_in) % config.thin == 0)
    return ChainTrace(
        config=config,
        sweep_index=sweep[keep],
        samples=chain.densities(rec[keep]),
        flips=chain.flips,
        updates=config.sweeps * len(pairs),
        final_state=_from_masks(chain.nb, config.n),
        final_counts=tuple(int(c) for c in chain.counts),
    )


def bin_modes(values: np.ndarray, bins: int = 40) -> list[float]:
    """Centres of histogram bins that beat both neighbours (local modes)."""
    hist, edges = np.histogram(values, bins=bins, range=(0.0, 1.0))
    centres = 0.5 * (edges[:-1] + edges[1:])
    padded = np.concatenate([[-1], hist, [-1]])
    return [float(centres[k]) for k in range(bins)
            if hist[k] > 0 and hist[k] > padded[k] and hist[k] >= padded[k + 2]]

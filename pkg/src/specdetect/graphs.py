"""Microcanonical two-block random graphs with prescribed degree structure.

Samplers for degree sequences (regular / bimodal / truncated Poisson),
a stub-matching generator that places exactly ``round(gamma * n)`` edges
between the two modules, and the asymptotic ensemble count of such graphs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import gammaln, logsumexp
from scipy.stats import poisson as poisson_dist

from .errors import (
    InvalidRegion,
    InvalidSpec,
    ParityUnrepairable,
    RepairFailed,
    StubImbalance,
)

__all__ = [
    "Regular",
    "Bimodal",
    "Poisson",
    "BlockParams",
    "PlantedGraph",
    "EnsembleCount",
    "sample_degree_sequence",
    "generate_two_block_graph",
    "sample_graph",
    "log_count_graphs",
    "save_edge_list",
    "save_labels",
]

_POISSON_TAIL = 1e-8


def _round(x: float) -> int:
    """round-half-up; python's round() is banker's and would break determinism
    guarantees across grids that hit .5 exactly."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class Regular:
    """All vertices have degree ``c``."""

    c: int

    def __post_init__(self):
        if self.c < 3:
            raise InvalidSpec(f"regular degree must be >= 3, got {self.c}")

    def degree_classes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([self.c]), np.array([1.0])


@dataclass(frozen=True)
class Bimodal:
    """Two degree classes c1 (population b1) and c2 (population 1 - b1)."""

    c1: int
    c2: int
    b1: float

    def __post_init__(self):
        if self.c1 == self.c2 and not (0 < self.b1 < 1):
            pass
        if self.c1 < 1 or self.c2 < 1:
            raise InvalidSpec("bimodal degrees must be >= 1")
        if not 0 < self.b1 < 1:
            raise InvalidSpec("b1 must lie strictly in (0, 1)")
        if self.c1 == self.c2:
            raise InvalidSpec("bimodal requires c1 != c2")

    def degree_classes(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array([self.c1, self.c2]), np.array([self.b1, 1.0 - self.b1])


@dataclass(frozen=True)
class Poisson:
    """Poisson(cbar) truncated below at min_degree and above at cmax.

    cmax defaults to the smallest cutoff whose discarded upper tail mass
    is below 1e-8.
    """

    cbar: float
    min_degree: int = 1
    cmax: int | None = None

    def __post_init__(self):
        if self.cbar <= 0:
            raise InvalidSpec("cbar must be positive")
        if self.min_degree < 1:
            raise InvalidSpec("min_degree must be >= 1")
        if self.cmax is None:
            cmax = int(poisson_dist.isf(_POISSON_TAIL, self.cbar)) + 1
            object.__setattr__(self, "cmax", cmax)
        if poisson_dist.sf(self.cmax, self.cbar) >= _POISSON_TAIL:
            raise InvalidSpec("cmax leaves truncated tail mass >= 1e-8")
        if self.cmax <= self.min_degree:
            raise InvalidSpec("cmax must exceed min_degree")

    def degree_classes(self) -> tuple[np.ndarray, np.ndarray]:
        ks = np.arange(self.min_degree, self.cmax + 1)
        w = poisson_dist.pmf(ks, self.cbar)
        return ks, w / w.sum()


DegreeSpec = Regular | Bimodal | Poisson


def spec_moment(spec: DegreeSpec, n: int = 1) -> float:
    """n-th moment of the degree distribution, sum_t b_t c_t^n."""
    cs, bs = spec.degree_classes()
    return float(np.sum(bs * cs.astype(float) ** n))


def mean_degree(spec: DegreeSpec) -> float:
    return spec_moment(spec, 1)


@dataclass(frozen=True)
class BlockParams:
    n: int
    p1: float
    gamma: float

    def __post_init__(self):
        if self.n < 2:
            raise InvalidSpec("need at least two vertices")
        if not 0 < self.p1 < 1:
            raise InvalidSpec("p1 must lie strictly in (0, 1)")
        if self.gamma < 0:
            raise InvalidSpec("gamma must be nonnegative")

    @property
    def p2(self) -> float:
        return 1.0 - self.p1

    @property
    def n1(self) -> int:
        return _round(self.p1 * self.n)

    @property
    def n2(self) -> int:
        return self.n - self.n1

    @property
    def cross_edges(self) -> int:
        return _round(self.gamma * self.n)

    def validate_against(self, spec: DegreeSpec) -> None:
        cbar = mean_degree(spec)
        if self.gamma > cbar * min(self.p1, self.p2) + 1e-12:
            raise InvalidSpec(
                "gamma exceeds the stub budget of the smaller module "
                f"(gamma={self.gamma}, cbar*min(p)={cbar * min(self.p1, self.p2)})"
            )


@dataclass
class PlantedGraph:
    """Sampled graph plus the ground truth used for overlap measurement."""

    adjacency: sp.csr_matrix
    labels: np.ndarray  # 1 or 2 per vertex
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def cross_edge_count(self) -> int:
        coo = sp.triu(self.adjacency, k=1).tocoo()
        return int(np.sum(self.labels[coo.row] != self.labels[coo.col]))


@dataclass(frozen=True)
class EnsembleCount:
    log_count: float
    q1: float
    q2: float
    eta: float


def _largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    """Integer counts summing to `total`, proportional to `weights`."""
    raw = weights * total
    counts = np.floor(raw).astype(int)
    short = total - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:short]] += 1
    return counts


def sample_degree_sequence(
    spec: DegreeSpec, params: BlockParams, seed: int
) -> np.ndarray:
    """Per-vertex degrees; vertices [0, n1) are module 1, the rest module 2.

    Regular/bimodal class counts are fixed by largest-remainder rounding;
    Poisson counts are multinomial draws from the truncated pmf.  Each
    module's non-cross stub count must be even; bimodal sequences are
    repaired by flipping one vertex between the classes, Poisson ones by
    redrawing (at most 100 attempts).
    """
    params.validate_against(spec)
    rng = np.random.default_rng(seed)
    m_cross = params.cross_edges
    cs, bs = spec.degree_classes()

    def module_counts(n_r: int) -> np.ndarray:
        if isinstance(spec, Poisson):
            return rng.multinomial(n_r, bs)
        return _largest_remainder(n_r, bs)

    out = []
    for n_r in (params.n1, params.n2):
        for attempt in range(100):
            counts = module_counts(n_r)
            k_r = int(np.sum(counts * cs))
            if (k_r - m_cross) % 2 == 0:
                break
            if isinstance(spec, Regular):
                raise ParityUnrepairable(
                    "regular sequence has odd non-cross stub count and no "
                    "degree class to flip"
                )
            if isinstance(spec, Bimodal):
                step = abs(spec.c2 - spec.c1)
                if step % 2 == 0:
                    raise ParityUnrepairable(
                        "bimodal degree gap is even; parity cannot be repaired"
                    )
                # flip one vertex from the larger class
                src = int(np.argmax(counts))
                counts[src] -= 1
                counts[1 - src] += 1
                if counts.min() < 0:
                    raise ParityUnrepairable("no vertex available to flip")
                break
            # Poisson: redraw
        else:
            raise ParityUnrepairable("parity not repaired within 100 attempts")
        degs = np.repeat(cs, counts)
        out.append(rng.permutation(degs))
    return np.concatenate(out)


def _repair_to_simple(
    cross: np.ndarray,
    w1: np.ndarray,
    w2: np.ndarray,
    n: int,
    rng: np.random.Generator,
    max_sweeps: int = 1000,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Remove self-loops/multi-edges by double-edge swaps.

    Swaps preserve the degree sequence and the cross-edge count: two edges
    of the same class rewire in place, and a within-module edge may trade
    an endpoint with a cross edge (one cross edge in, one out).  The mixed
    move matters because stub matching can park both cross stubs on one
    vertex, leaving a residual within-module sequence that is not
    graphical on its own.
    """
    from collections import Counter

    classes = [cross.copy(), w1.copy(), w2.copy()]
    for cls in (1, 2):
        if len(classes[cls]):
            classes[cls].sort(axis=1)

    def key(u, v):
        return min(u, v) * n + max(u, v)

    count = Counter()
    for e in classes:
        for u, v in e.tolist():
            count[key(u, v)] += 1

    def bad_list():
        bad = []
        seen = set()
        for ci, e in enumerate(classes):
            for i, (u, v) in enumerate(e.tolist()):
                k = key(u, v)
                if u == v or k in seen:
                    bad.append((ci, i))
                else:
                    seen.add(k)
        return bad

    sizes = [len(e) for e in classes]
    total = sum(sizes)
    offsets = np.cumsum([0] + sizes)

    def propose(ci, i, cj, j):
        u1, v1 = map(int, classes[ci][i])
        u2, v2 = map(int, classes[cj][j])
        if ci == cj == 0:
            # cross-cross keeps the module-1/module-2 orientation
            yield (u1, v2), (u2, v1), ci, cj
        elif ci == cj:
            pair = [((u1, u2), (v1, v2)), ((u1, v2), (v1, u2))]
            order = pair if rng.integers(2) else pair[::-1]
            for a, b in order:
                yield a, b, ci, cj
        elif 0 in (ci, cj):
            # within edge (u,v) trades an endpoint with cross edge (a,b);
            # only valid when the within edge lives in the cross edge's
            # module-side, which holds by construction of the classes
            (wi, wcls) = ((ci, i), ci) if ci != 0 else ((cj, j), cj)
            (xi,) = [(c, k) for c, k in [(ci, i), (cj, j)] if c == 0]
            u, v = map(int, classes[wi[0]][wi[1]])
            a, b = map(int, classes[0][xi[1]])
            side = 0 if wcls == 1 else 1  # index of the cross endpoint in V_r
            other = b if side == 0 else a
            for keep, move in (((u, v)), ((v, u))) if rng.integers(2) else ((v, u), (u, v)):
                # new cross edge: (move, other-side endpoint); new within: (a_r, keep)
                same = a if side == 0 else b
                new_cross = (move, other) if side == 0 else (other, move)
                new_within = (same, keep)
                yield new_cross, new_within, 0, wcls
        # w1-w2 pairs admit no count-preserving swap

    for _ in range(max_sweeps):
        bad = bad_list()
        if not bad:
            return classes[0], classes[1], classes[2]
        for ci, i in bad:
            flat = int(rng.integers(total))
            cj = int(np.searchsorted(offsets, flat, side="right")) - 1
            j = flat - offsets[cj]
            if (cj, j) == (ci, i):
                continue
            u1, v1 = map(int, classes[ci][i])
            u2, v2 = map(int, classes[cj][j])
            ko1, ko2 = key(u1, v1), key(u2, v2)
            for e1, e2, c1, c2 in propose(ci, i, cj, j):
                if e1[0] == e1[1] or e2[0] == e2[1]:
                    continue
                k1, k2 = key(*e1), key(*e2)
                count[ko1] -= 1
                count[ko2] -= 1
                if k1 != k2 and count[k1] == 0 and count[k2] == 0:
                    count[k1] += 1
                    count[k2] += 1
                    if c1 != 0:
                        e1 = (min(e1), max(e1))
                    if c2 != 0:
                        e2 = (min(e2), max(e2))
                    if (c1, c2) == (ci, cj):
                        classes[ci][i] = e1
                        classes[cj][j] = e2
                    else:
                        # mixed move: write cross result into the cross
                        # slot, within result into the within slot
                        ti = i if ci == 0 else j
                        tw = j if ci == 0 else i
                        classes[0][ti] = e1
                        classes[c2][tw] = e2
                    break
                count[ko1] += 1
                count[ko2] += 1
    raise RepairFailed("could not simplify multigraph within the sweep bound")


def _mix_class(
    edges: np.ndarray,
    n: int,
    is_cross: bool,
    rng: np.random.Generator,
    sweeps: int,
) -> np.ndarray:
    """Uniformizing double-edge-swap MCMC within one edge class.

    Batched proposals; a proposal is dropped if it would create a
    self-loop or multi-edge, or if it conflicts with another proposal in
    the same batch.
    """
    m = len(edges)
    if m < 2 or sweeps <= 0:
        return edges
    edges = edges.copy()
    target = sweeps * m
    batch = max(4, m // 2)
    done = 0
    while done < target:
        k = min(batch, target - done)
        done += k
        i = rng.integers(m, size=k)
        j = rng.integers(m, size=k)
        e1, e2 = edges[i], edges[j]
        if is_cross:
            new1 = np.column_stack([e1[:, 0], e2[:, 1]])
            new2 = np.column_stack([e2[:, 0], e1[:, 1]])
        else:
            flip = rng.integers(2, size=k).astype(bool)
            b1 = np.where(flip, e2[:, 1], e2[:, 0])
            b2 = np.where(flip, e2[:, 0], e2[:, 1])
            new1 = np.column_stack([e1[:, 0], b1])
            new2 = np.column_stack([e1[:, 1], b2])
            new1.sort(axis=1)
            new2.sort(axis=1)
        k1 = new1[:, 0].astype(np.int64) * n + new1[:, 1]
        k2 = new2[:, 0].astype(np.int64) * n + new2[:, 1]
        present = np.sort(edges[:, 0].astype(np.int64) * n + edges[:, 1])
        ok = (
            (i != j)
            & (new1[:, 0] != new1[:, 1])
            & (new2[:, 0] != new2[:, 1])
            & (k1 != k2)
            & ~np.isin(k1, present)
            & ~np.isin(k2, present)
        )
        # drop intra-batch conflicts: every edge index and new key must be unique
        idx_counts = np.bincount(np.concatenate([i, j]), minlength=m)
        ok &= (idx_counts[i] == 1) & (idx_counts[j] == 1)
        allk = np.concatenate([k1, k2])
        _, inv, cnt = np.unique(allk, return_inverse=True, return_counts=True)
        kc = cnt[inv]
        ok &= (kc[: len(k1)] == 1) & (kc[len(k1):] == 1)
        sel = np.flatnonzero(ok)
        edges[i[sel]] = new1[sel]
        edges[j[sel]] = new2[sel]
    return edges


def generate_two_block_graph(
    degrees: np.ndarray,
    labels: np.ndarray,
    gamma: float,
    seed: int,
    mix_sweeps: int = 10,
) -> PlantedGraph:
    """Stub matching with exactly round(gamma * n) cross edges.

    Self-loops and multi-edges are repaired by class-preserving
    double-edge swaps; extra randomizing swap sweeps then wash out the
    residual bias of the repair step.
    """
    degrees = np.asarray(degrees, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    n = len(degrees)
    rng = np.random.default_rng(seed)
    m_cross = _round(gamma * n)

    verts1 = np.flatnonzero(labels == 1)
    verts2 = np.flatnonzero(labels == 2)
    stubs1 = rng.permutation(np.repeat(verts1, degrees[verts1]))
    stubs2 = rng.permutation(np.repeat(verts2, degrees[verts2]))
    if m_cross > min(len(stubs1), len(stubs2)):
        raise StubImbalance("cross-edge request exceeds a module's stubs")
    if (len(stubs1) - m_cross) % 2 or (len(stubs2) - m_cross) % 2:
        raise StubImbalance("non-cross stub count is odd; parity precondition violated")

    cross = np.column_stack([stubs1[:m_cross], stubs2[:m_cross]])
    within = []
    for stubs in (stubs1[m_cross:], stubs2[m_cross:]):
        within.append(stubs.reshape(-1, 2))

    cross, within[0], within[1] = _repair_to_simple(
        cross, within[0], within[1], n, rng
    )
    cross = _mix_class(cross, n, True, rng, mix_sweeps)
    within = [_mix_class(w, n, False, rng, mix_sweeps) for w in within]

    all_edges = np.vstack([cross] + within)
    row = np.concatenate([all_edges[:, 0], all_edges[:, 1]])
    col = np.concatenate([all_edges[:, 1], all_edges[:, 0]])
    adj = sp.csr_matrix(
        (np.ones(len(row)), (row, col)), shape=(n, n), dtype=np.float64
    )
    adj.sum_duplicates()

    if adj.data.max(initial=1.0) > 1.0 or adj.diagonal().any():
        raise RepairFailed("graph not simple after repair")
    got = np.asarray(adj.sum(axis=1)).ravel().astype(np.int64)
    if not np.array_equal(got, degrees):
        raise RepairFailed("degree sequence corrupted during repair")
    graph = PlantedGraph(adjacency=adj, labels=labels, degrees=degrees)
    if graph.cross_edge_count() != m_cross:
        raise RepairFailed("cross-edge count corrupted during repair")
    return graph


def sample_graph(
    spec: DegreeSpec, params: BlockParams, seed: int, mix_sweeps: int = 10
) -> PlantedGraph:
    """Degree sequence + stub matching in one call (single seed stream)."""
    degrees = sample_degree_sequence(spec, params, seed)
    labels = np.concatenate(
        [np.ones(params.n1, dtype=np.int64), np.full(params.n2, 2, dtype=np.int64)]
    )
    return generate_two_block_graph(
        degrees, labels, params.gamma, seed + 1, mix_sweeps=mix_sweeps
    )


def _log_factorial_moment(spec: DegreeSpec) -> float:
    """ln sum_t b_t c_t!  (the ensemble formula's factorial term)."""
    cs, bs = spec.degree_classes()
    return float(logsumexp(np.log(bs) + gammaln(cs.astype(float) + 1.0)))


def log_count_graphs(spec: DegreeSpec, params: BlockParams) -> EnsembleCount:
    """Asymptotic ln(number of graphs) plus the saddle-point order parameters."""
    cbar = mean_degree(spec)
    n, p1, p2, g = params.n, params.p1, params.p2, params.gamma
    for p_r in (p1, p2):
        if cbar * p_r - g <= 0:
            raise InvalidRegion("requires cbar * p_r > gamma for both modules")

    def xlogx(x):
        return 0.0 if x == 0 else x * math.log(x)

    per_n = (
        cbar / 2.0 * (math.log(n) - 1.0)
        - _log_factorial_moment(spec)
        - xlogx(g)
        + xlogx(cbar * p1)
        + xlogx(cbar * p2)
        - 0.5 * xlogx(cbar * p1 - g)
        - 0.5 * xlogx(cbar * p2 - g)
    )
    q1 = math.sqrt((cbar * p1 - g) / (n * p1 * p1))
    q2 = math.sqrt((cbar * p2 - g) / (n * p2 * p2))
    if g == 0:
        eta = math.inf
    else:
        eta = math.log(math.sqrt((cbar * p1 - g) * (cbar * p2 - g)) / g)
    return EnsembleCount(log_count=n * per_n, q1=q1, q2=q2, eta=eta)


def save_edge_list(graph: PlantedGraph, path, p1: float, gamma: float, seed: int):
    coo = sp.triu(graph.adjacency, k=1).tocoo()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# n={graph.n} p1={p1} gamma={gamma} seed={seed}\n")
        for u, v in zip(coo.row, coo.col):
            fh.write(f"{u} {v}\n")


def save_labels(graph: PlantedGraph, path):
    with open(path, "w", encoding="utf-8") as fh:
        for lab in graph.labels:
            fh.write(f"{lab}\n")

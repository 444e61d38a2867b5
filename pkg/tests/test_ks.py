import io

import numpy as np
import pytest

from kslab.graphs import MultiGraph, SimpleGraph, gen_gnm, gen_multigraph
from kslab.ks import (
    HAVE_COMPILED_KERNELS,
    KsState,
    StopRule,
    degree_histogram,
    ks_step,
    run_ks,
)
from kslab.matching import max_matching
from kslab.rank import adjacency_rank
from kslab.rng import RngStream

from oracle_utils import cycle_graph, path_graph, star_graph


def test_single_edge_one_step_empties_graph():
    g = SimpleGraph(2, [(0, 1)])
    trace = run_ks(g, StopRule.no_leaves(), RngStream(0))
    assert trace.num_steps == 1
    assert trace.core.n == 0 and trace.core.num_edges == 0
    assert trace.stop_reason == "no-leaves"


def test_star_one_step_removes_centre():
    trace = run_ks(star_graph(3), StopRule.no_leaves(), RngStream(1))
    assert trace.num_steps == 1
    assert trace.core.num_edges == 0 and trace.core.n == 0
    # the removed neighbour is the centre
    assert trace.steps[0][1] == 0


def test_cycle_cannot_step():
    state = KsState(cycle_graph(5))
    with pytest.raises(ValueError):
        ks_step(state, RngStream(2))
    trace = run_ks(cycle_graph(5), StopRule.no_leaves(), RngStream(2))
    assert trace.num_steps == 0 and trace.core.n == 5 and trace.core.num_edges == 5


def test_path3_leaves_empty_core():
    trace = run_ks(path_graph(3), StopRule.no_leaves(), RngStream(3))
    assert trace.num_steps == 1
    assert trace.core.num_edges == 0
    assert max_matching(path_graph(3)).size == 1  # nu contribution of the step


def test_cycle_plus_pendant_edge_leaves_cycle_core():
    g = SimpleGraph(6, [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5)])
    trace = run_ks(g, StopRule.no_leaves(), RngStream(4))
    assert trace.num_steps == 1
    core = trace.core
    assert core.n == 4 and core.num_edges == 4
    assert sorted(core.degrees().tolist()) == [2, 2, 2, 2]


def test_isolated_vertices_never_counted():
    g = MultiGraph(5, [(0, 1)])  # vertices 2, 3, 4 isolated
    trace = run_ks(g, StopRule.no_leaves(), RngStream(5))
    assert trace.snapshots[0].tolist() == [2, 0, 1, 0]


def test_loop_endpoint_is_not_a_leaf():
    g = MultiGraph(2, [(0, 0)])
    trace = run_ks(g, StopRule.no_leaves(), RngStream(6))
    assert trace.num_steps == 0
    assert trace.snapshots[0].tolist() == [0, 1, 1, 0]


def test_parallel_edges_count_in_degree():
    g = MultiGraph(2, [(0, 1), (0, 1)])
    assert degree_histogram(g) == {2: 2}
    trace = run_ks(g, StopRule.no_leaves(), RngStream(7))
    assert trace.num_steps == 0  # both endpoints have degree 2


def test_degree_histogram_cases():
    assert degree_histogram(MultiGraph(4)) == {}
    assert degree_histogram(cycle_graph(4)) == {2: 4}


def test_snapshot_invariants_and_degree_sum():
    g = gen_gnm(300, 330, RngStream(8, (0,)))
    trace = run_ks(g, StopRule.no_leaves(), RngStream(8, (1,)))
    snaps = trace.snapshots
    assert np.all(np.diff(snaps[:, 3]) == 1)  # X4 increments by exactly 1
    assert np.all(np.diff(snaps[:, 2]) < 0)  # X3 strictly decreases
    # stepping interface: 2 X3 = total live degree throughout
    state = KsState(g)
    rng = RngStream(8, (2,))
    while state.has_leaves():
        hist = degree_histogram(state)
        assert sum(d * k for d, k in hist.items()) == 2 * state.x3
        assert state.x1 == hist.get(1, 0)
        assert state.x2 == sum(k for d, k in hist.items() if d >= 2)
        ks_step(state, rng)


def test_trace_matches_stepping_interface():
    g = gen_multigraph(60, 70, RngStream(9, (0,)))
    trace = run_ks(g, StopRule.no_leaves(), RngStream(9, (1,)), engine="python")
    state = KsState(g)
    rng = RngStream(9, (1,))
    rows = [state.stats()]
    while state.has_leaves():
        ks_step(state, rng)
        rows.append(state.stats())
    assert np.array_equal(trace.snapshots, np.array(rows))
    assert trace.steps.tolist() == [list(p) for p in state.removed]


@pytest.mark.skipif(not HAVE_COMPILED_KERNELS, reason="compiled kernels unavailable")
def test_engines_produce_identical_traces():
    for trial in range(8):
        rng = RngStream(10, (trial,))
        if trial % 2:
            g = gen_multigraph(800, 900, rng.child(0))
        else:
            g = gen_gnm(800, 900, rng.child(0))
        kw = dict(checkpoint_delta=0.2) if trial % 3 == 0 else {}
        fast = run_ks(g, StopRule.no_leaves(), rng.child(1), engine="compiled", **kw)
        slow = run_ks(g, StopRule.no_leaves(), rng.child(1), engine="python", **kw)
        assert np.array_equal(fast.snapshots, slow.snapshots)
        assert np.array_equal(fast.steps, slow.steps)
        assert fast.core == slow.core
        assert fast.stop_reason == slow.stop_reason
        if fast.checkpoint is not None or slow.checkpoint is not None:
            assert fast.checkpoint.step == slow.checkpoint.step
            assert np.array_equal(fast.checkpoint.degree_histogram,
                                  slow.checkpoint.degree_histogram)


def test_reproducibility_same_stream_same_trace():
    g = gen_gnm(500, 520, RngStream(11, (0,)))
    t1 = run_ks(g, StopRule.no_leaves(), RngStream(11, (1,)))
    t2 = run_ks(g, StopRule.no_leaves(), RngStream(11, (1,)))
    assert np.array_equal(t1.snapshots, t2.snapshots)
    assert np.array_equal(t1.steps, t2.steps)


def test_edge_threshold_semantics():
    n = 2000
    g = gen_gnm(n, n, RngStream(12, (0,)))
    delta = 0.05
    trace = run_ks(g, StopRule.edges_at_most(delta), RngStream(12, (1,)))
    assert trace.stop_reason == "edge-threshold"
    snaps = trace.snapshots
    assert snaps[-1, 2] <= delta * n
    assert np.all(snaps[:-1, 2] > delta * n)  # "first time" semantics


def test_edge_threshold_can_fire_at_step_zero():
    g = SimpleGraph(100, [(0, 1)])
    trace = run_ks(g, StopRule.edges_at_most(0.5), RngStream(13))
    assert trace.stop_reason == "edge-threshold" and trace.num_steps == 0


def test_edge_threshold_unreachable_reports_no_leaves():
    # a cycle with a pendant path: leaves run out before edges fall below
    g = SimpleGraph(7, [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6)])
    trace = run_ks(g, StopRule.edges_at_most(1e-9), RngStream(14))
    assert trace.stop_reason == "no-leaves"
    assert trace.checkpoint is None or trace.checkpoint.step >= 0


def test_step_limit_rule():
    g = gen_gnm(200, 220, RngStream(15, (0,)))
    trace = run_ks(g, StopRule.step_limit(5), RngStream(15, (1,)))
    assert trace.stop_reason == "step-limit" and trace.num_steps == 5
    zero = run_ks(g, StopRule.step_limit(0), RngStream(15, (2,)))
    assert zero.num_steps == 0


def test_checkpoint_is_on_the_same_realisation():
    n = 3000
    g = gen_gnm(n, n, RngStream(16, (0,)))
    full = run_ks(g, StopRule.no_leaves(), RngStream(16, (1,)), checkpoint_delta=0.05)
    stopped = run_ks(g, StopRule.edges_at_most(0.05), RngStream(16, (1,)))
    assert full.checkpoint is not None
    assert full.checkpoint.step == stopped.num_steps
    assert full.checkpoint.step <= full.num_steps
    assert full.checkpoint.stats == stopped.final_stats
    hist = stopped.core.degrees()
    hist = np.bincount(hist[hist > 0])
    assert np.array_equal(full.checkpoint.degree_histogram, hist)


def test_matching_and_rank_identities_small():
    for i in range(60):
        rng = RngStream(17, (i,))
        gen = rng.generator()
        n = int(gen.integers(2, 61))
        m = int(gen.integers(0, min(2 * n, n * (n - 1) // 2) + 1))
        g = gen_gnm(n, m, rng.child(0))
        trace = run_ks(g, StopRule.no_leaves(), rng.child(1))
        steps = trace.num_steps
        assert max_matching(g).size == steps + max_matching(trace.core).size
        assert adjacency_rank(g).rank == 2 * steps + adjacency_rank(trace.core).rank


def test_stop_rule_validation():
    with pytest.raises(ValueError):
        StopRule("bogus")
    with pytest.raises(ValueError):
        StopRule.edges_at_most(0.0)
    with pytest.raises(ValueError):
        StopRule.step_limit(-1)


def test_trace_csv_export():
    trace = run_ks(path_graph(4), StopRule.no_leaves(), RngStream(18))
    buf = io.StringIO()
    trace.write_csv(buf)
    lines = buf.getvalue().strip().splitlines()
    assert lines[0] == "step,X1,X2,X3,X4"
    assert lines[1].startswith("0,")
    assert len(lines) == trace.num_steps + 2

import random

import pytest

from emergelab.algonet import (AlgoNet, aggregate, curve_csv, default_rounds, eac, eeoe_curve,
                               eeoe_trial, fitness_key, gen_topology, macro_fddds,
                               max_fitness_by_round, rows_csv, run_isolated, run_networked,
                               sample_population)
from emergelab.dynsys import trajectory
from emergelab.errors import DomainError, TopologyError
from emergelab.perturb import SimpleGraph
from emergelab.refmachine import copy_program, state_writer_program


def test_topologies():
    rng = random.Random(0)
    assert len(gen_topology("complete", 6, rng).edges) == 15
    assert len(gen_topology("ring", 6, rng).edges) == 6
    assert len(gen_topology("edgeless", 6, rng).edges) == 0
    ba = gen_topology("ba", 10, rng, m=2)
    assert len(ba.edges) == 2 * 8
    with pytest.raises(DomainError):
        gen_topology("torus", 4, rng)
    with pytest.raises(DomainError):
        gen_topology("ba", 3, rng, m=3)


def test_connected_draw_failure():
    with pytest.raises(TopologyError):
        gen_topology("er", 20, random.Random(1), p=0.0, connected=True, max_tries=3)


def test_topology_deterministic():
    a = gen_topology("er", 12, random.Random(5))
    b = gen_topology("er", 12, random.Random(5))
    assert a == b


def test_default_rounds():
    assert default_rounds(1) == 2
    assert default_rounds(8) == 5
    assert default_rounds(9) == 6


def test_fitness_order():
    assert fitness_key("11") > fitness_key("011") > fitness_key("10")


def test_edgeless_network_equals_isolated():
    pop = sample_population(6, random.Random(3))
    c = default_rounds(6)
    iso = run_isolated(pop, c)
    net = run_networked(AlgoNet(SimpleGraph(6), pop, c))
    assert net == iso
    assert all(eac(a, b) == 0 for a, b in zip(net, iso))


def test_diffusion_spreads_best_payload():
    best = state_writer_program("1111")
    pop = (copy_program(), best, copy_program())
    net = run_networked(AlgoNet(SimpleGraph.complete(3), pop, 3))
    assert all(t.final == "1111" or fitness_key(t.final) >= fitness_key("1111") for t in net)
    assert max_fitness_by_round(net)[0] == "1111"


def test_population_size_checked():
    with pytest.raises(DomainError):
        AlgoNet(SimpleGraph(3), (copy_program(),), 2)
    with pytest.raises(DomainError):
        AlgoNet(SimpleGraph(1), (copy_program(),), 2, protocol="gossip")


def test_sis_protocol_deterministic():
    pop = sample_population(8, random.Random(4))
    g = gen_topology("complete", 8, random.Random(4))
    a = run_networked(AlgoNet(g, pop, 4, protocol="sis", seed=11))
    b = run_networked(AlgoNet(g, pop, 4, protocol="sis", seed=11))
    assert a == b


def test_trial_deterministic_and_edgeless_zero():
    a = eeoe_trial(8, "ba", 0, 42)
    assert a == eeoe_trial(8, "ba", 0, 42)
    assert all(r.eac_bits == 0 for r in eeoe_trial(8, "edgeless", 0, 42))


def test_curve_and_csv():
    points, rows = eeoe_curve([4, 8], "complete", 3, 1)
    assert [p.n for p in points] == [4, 8]
    assert all(p.trials == 3 for p in points)
    assert aggregate(rows) == points
    assert rows_csv(rows).splitlines()[0] == "N,trial,node,eac_bits"
    assert curve_csv(points).splitlines()[0] == "N,mean,ci"


def test_macro_fddds_replays():
    pop = sample_population(4, random.Random(6))
    traces = run_networked(AlgoNet(SimpleGraph.complete(4), pop, 3))
    sys_, traj = macro_fddds(traces)
    assert trajectory(sys_, traj.states[0], None, 0, len(traj.states) - 1).states == traj.states
    assert len(set(len(s) for s in traj.states)) == 1

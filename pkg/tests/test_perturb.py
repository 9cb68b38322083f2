import math
import random

import pytest

from conftest import load_calibration, single_edge_case
from emergelab import algonet
from emergelab.complexity import C_COPY, replay_cond
from emergelab.dynsys import eca, trajectory
from emergelab.errors import DomainError, PerturbationFailed
from emergelab.perturb import (AlgorithmicPerturbation, SimpleGraph, apply_ap, apply_edge_program,
                               calibrate_c_hat, edge_ap_bound, edge_perturb, edge_program,
                               mean_abs_delta, min_ap_upper, profile_csv, realized_edge_cond,
                               reprogrammability_profile)
from emergelab.refmachine import Program, TmSpec, flip_second_bit_program


def test_identity_perturbation_is_noop():
    sys_ = eca(110, 6)
    prefix = trajectory(sys_, "010011", None, 0, 8)
    ap = AlgorithmicPerturbation.replace_state(3, sys_.step(prefix.at(3)))
    assert apply_ap(sys_, prefix, ap).states == prefix.states


def test_flip_second_bit_example():
    sys_ = eca(204, 3)
    prefix = trajectory(sys_, "001", None, 0, 2)
    ap = AlgorithmicPerturbation.from_program(0, flip_second_bit_program())
    out = apply_ap(sys_, prefix, ap)
    assert out.at(1) == "011" and out.at(2) == "011"


def test_delta_and_program_forms_agree():
    sys_ = eca(30, 8)
    prefix = trajectory(sys_, "00010000", None, 0, 10)
    target = "10110001"
    delta = AlgorithmicPerturbation.replace_state(4, target)
    prog = AlgorithmicPerturbation.from_program(4, delta.canonical_program())
    assert apply_ap(sys_, prefix, delta).states == apply_ap(sys_, prefix, prog).states


def test_perturbation_changes_only_one_transition():
    sys_ = eca(90, 8)
    prefix = trajectory(sys_, "00011000", None, 0, 12)
    out = apply_ap(sys_, prefix, AlgorithmicPerturbation.replace_state(5, "11111111"))
    assert out.states[:6] == prefix.states[:6]
    for t in range(6, 12):
        assert out.at(t + 1) == sys_.step(out.at(t))


def test_composability():
    sys_ = eca(110, 8)
    prefix = trajectory(sys_, "00010011", None, 0, 12)
    a1 = AlgorithmicPerturbation.replace_state(2, "11110000")
    a2 = AlgorithmicPerturbation.replace_state(7, "00001111")
    first = apply_ap(sys_, prefix, a1)
    both = apply_ap(sys_, first, a2)
    assert both.at(8) == "00001111"
    assert both.states[:8] == first.states[:8]
    assert both.provenance["perturbations"] == [2, 7]


def test_perturbation_failures():
    sys_ = eca(110, 3)
    prefix = trajectory(sys_, "001", None, 0, 3)
    loop = Program(TmSpec(1, ((0, 1, 1), (0, 1, 1))))
    with pytest.raises(PerturbationFailed):
        apply_ap(sys_, prefix, AlgorithmicPerturbation.from_program(1, loop))
    with pytest.raises(DomainError):
        apply_ap(sys_, prefix, AlgorithmicPerturbation.replace_state(1, "0101"))
    with pytest.raises(DomainError):
        AlgorithmicPerturbation(1)


def test_min_ap_identity_within_copy():
    a = "10110011"
    assert min_ap_upper(a, eca(204, 8).step(a)).upper <= C_COPY


def test_min_ap_flip_cheaper_than_rewrite():
    rng = random.Random(4)
    for _ in range(4):
        a = format(rng.getrandbits(8), "08b")
        bit = rng.randrange(8)
        flipped = a[:bit] + ("1" if a[bit] == "0" else "0") + a[bit + 1:]
        rewrite = format(rng.getrandbits(8), "08b")
        flip = min_ap_upper(a, flipped, "exact", len_cap=20)
        full = min_ap_upper(a, rewrite, "exact", len_cap=20)
        assert flip.upper <= full.upper


def test_min_ap_random_target_not_found():
    rng = random.Random(9)
    src = format(rng.getrandbits(32), "032b")
    dst = format(rng.getrandbits(32), "032b")
    est = min_ap_upper(src, dst, "exact", len_cap=16)
    assert est.lower == 17


def test_min_ap_upper_replays():
    est = min_ap_upper("0011", "1100")
    assert replay_cond(est, "0011") == "1100"


def test_edge_perturb_examples():
    k4 = SimpleGraph.complete(4)
    assert edge_perturb(k4, []) == k4
    assert len(edge_perturb(k4, [(0, 1)]).edges) == 5
    assert edge_perturb(edge_perturb(k4, [(2, 3)]), [(3, 2)], "insert") == k4
    with pytest.raises(DomainError):
        edge_perturb(k4, [(0, 1)], "insert")
    with pytest.raises(DomainError):
        SimpleGraph(3, frozenset({(1, 1)}))


def test_edge_bound_values():
    assert edge_ap_bound(1, 10).leading == pytest.approx(6.643856, abs=1e-6)
    assert edge_ap_bound(0, 10).leading == 0
    assert edge_ap_bound(2, 16).leading == 16
    with pytest.raises(DomainError):
        edge_ap_bound(1, 1)


def test_edge_program_replays():
    rng = random.Random(5)
    for n in (8, 16, 32):
        g, F, mode = single_edge_case(n, rng)
        g2 = edge_perturb(g, F, mode)
        prog = edge_program(F, n, mode)
        assert len(prog) == edge_ap_bound(1, n).realized
        assert apply_edge_program(g.encode(), prog) == g2.encode()


def test_realized_bound_certificate():
    g = SimpleGraph.complete(8)
    F = [(0, 7)]
    bits, method, cert = realized_edge_cond(g, edge_perturb(g, F), F)
    assert method == "edge-program" and bits == len(cert)


def test_frozen_calibration_reproduces():
    from emergelab.labctl.runio import trial_rng
    cal = load_calibration()
    cases = [single_edge_case(n, trial_rng(f"calibration-{n}", i))
             for n in cal["corpus"]["ns"] for i in range(cal["corpus"]["per_n"])]
    assert calibrate_c_hat(cases) == cal["c_hat"]


def test_graph_codecs(tmp_path):
    g = algonet.gen_topology("er", 9, random.Random(1))
    assert SimpleGraph.decode(g.encode()) == g
    assert SimpleGraph.from_edgelist(g.to_edgelist()) == g
    assert SimpleGraph.load(g.save(tmp_path / "g.txt")) == g


def test_single_slot_sensitivity():
    g = SimpleGraph.complete(12)
    g2 = edge_perturb(g, [(3, 7)])
    diff = sum(a != b for a, b in zip(g.encode(), g2.encode()))
    assert diff == 1


@pytest.mark.parametrize("n", [8, 16, 32])
def test_compress_delta_is_logarithmic(n):
    rng = random.Random(n)
    for g in (SimpleGraph.complete(n), algonet.gen_topology("er", n, rng)):
        rows = reprogrammability_profile(g, 15, rng)
        assert max(abs(r.delta_bits) for r in rows) <= 12 + 2 * math.log2(n)


def test_profile_deterministic_and_csv():
    g = SimpleGraph.complete(10)
    a = reprogrammability_profile(g, 8, random.Random(3))
    b = reprogrammability_profile(g, 8, random.Random(3))
    assert a == b
    assert profile_csv(a).splitlines()[0] == "trial,edge,delta_bits"
    assert mean_abs_delta(a) >= 0


def test_profile_rejects_edgeless():
    with pytest.raises(DomainError):
        reprogrammability_profile(SimpleGraph(5), 3, random.Random(0))


def test_delete_then_reinsert_zero_delta():
    from emergelab.complexity import k_compress
    g = SimpleGraph.complete(10)
    back = edge_perturb(edge_perturb(g, [(1, 2)]), [(1, 2)], "insert")
    assert k_compress(back.encode()) - k_compress(g.encode()) == 0

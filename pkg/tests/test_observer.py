import json
import random

import pytest

from emergelab import ctxmachine as cm
from emergelab.dynsys import RecordedSystem, eca, gen_incompressible_trajectory
from emergelab.errors import BoundaryError, CapError, ChannelError, DomainError
from emergelab.observer import (DECODERS, BitFlipProbe, CoarseChannel, Fat,
                                MaskChannel, ObserverSystem, SystemSimulator, _cycle,
                                bedau_verdict, check_observation_principle,
                                check_perfect_observation, context, cycle_outputs,
                                extend_fat, future_trajectory, inject_input, observe,
                                observer_trajectory, ode_target, ode_verdict,
                                replay_certificate)
from emergelab.refmachine import copy_program, flip_second_bit_program, pair_encode, run

TINY = dict(c_I=4, c_O=4, c_e=4)


def random_system(seed, width=8, length=12):
    traj = gen_incompressible_trajectory(width, length, random.Random(seed))
    return RecordedSystem(traj.states), traj.states[0]


def test_fat_roundtrip():
    fat = Fat((("k", "0110"), ("", "1")))
    assert Fat.decode(fat.bits) == fat
    assert fat.extend("11").payloads() == ["0110", "1", "11"]


def test_identity_observation_is_perfect():
    sys_, s0 = random_system(3)
    rec = observe(ObserverSystem(), sys_, s0, 5, 3)
    assert rec.w == rec.target
    assert check_perfect_observation(rec)
    assert DECODERS["quote-input"] == "011"


def test_observation_principle_identity_and_mask():
    sys_, s0 = random_system(3)
    obs = ObserverSystem()
    rec = observe(obs, sys_, s0, 5, 3)
    v = check_observation_principle(rec, 16)
    assert v.outcome == "Satisfied"
    assert cm.execute(v.witness, context(rec)) == rec.target
    masked = observe(obs, sys_, s0, 5, 3, channel=MaskChannel(tuple(range(32, 40))))
    assert rec.s_prime_next != "00000000"
    assert check_observation_principle(masked, 4).outcome == "Violated"
    assert not check_perfect_observation(masked)


def test_upper_mode_never_claims_violation():
    sys_, s0 = random_system(4)
    rec = observe(ObserverSystem(), sys_, s0, 5, 3, channel=MaskChannel(tuple(range(32, 40))))
    assert check_observation_principle(rec, 4, mode="upper").outcome in ("Satisfied", "Inconclusive")


def test_coarse_channel_and_capacity():
    sys_, s0 = random_system(5)
    rec = observe(ObserverSystem(), sys_, s0, 4, 1, channel=CoarseChannel((0, 1)))
    assert rec.channel == {"kind": "coarse", "cells": [0, 1]}
    with pytest.raises(ChannelError):
        observe(ObserverSystem(capacity=10), sys_, s0, 5, 3)
    with pytest.raises(ChannelError):
        observe(ObserverSystem(), sys_, s0, 5, 3, channel=MaskChannel((999,)))


def test_bitflip_probe():
    sys_ = eca(204, 4)
    rec = observe(ObserverSystem(), sys_, "0101", 2, 1, probe=BitFlipProbe(0))
    assert rec.s_prime_next == "1101"


def test_observe_domain():
    sys_, s0 = random_system(1)
    with pytest.raises(DomainError):
        observe(ObserverSystem(), sys_, s0, 2, 3)


def test_injection_reproduces_interpreter():
    for prog in (copy_program(), flip_second_bit_program()):
        obs = ObserverSystem(prog, Fat((("", "10"),)), capacity=32)
        fos = obs.compiled()
        w1, w2 = "0110", "101"
        t = 3 * len(_cycle(fos, w1)) - 1
        traj = inject_input(obs, t, w2, t + 3 * len(_cycle(fos, w2)), w0=w1)
        e1 = run(prog, pair_encode(w1, obs.fat.bits), 16).output
        e2 = run(prog, pair_encode(w2, obs.fat.bits), 16).output
        outs = cycle_outputs(obs, traj)
        assert {o for tt, o in outs if tt <= t} == {e1}
        assert {o for tt, o in outs if tt > t} == {e2}


def test_injection_mid_cycle_is_boundary_error():
    obs = ObserverSystem(flip_second_bit_program(), capacity=16)
    n = len(_cycle(obs.compiled(), ""))
    with pytest.raises(BoundaryError):
        inject_input(obs, n, "11", n + 4)


def test_aligned_observer_ends_on_boundary():
    obs = ObserverSystem()
    for t in range(6):
        traj = observer_trajectory(obs, t)
        assert obs.compiled().is_cycle_end(traj.at(t))


def ode_fixture(seed):
    sys_, s0 = random_system(seed)
    rec = observe(ObserverSystem(**TINY), sys_, s0, 5, 3)
    return rec, future_trajectory(rec, 11)


def test_ode_emergent_then_fat_extension_flips():
    rec, fut = ode_fixture(3)
    v = ode_verdict(rec, fut, 2)
    assert v.outcome == "Emergent" and v.search_caps["exhaustive"]
    assert v.search_caps["programs_bound"] <= 2 ** 13
    obs2 = extend_fat(rec.observer, ode_target(rec, fut))
    v2 = ode_verdict(rec, fut, 2, observer=obs2)
    assert v2.outcome == "NotEmergent"
    assert replay_certificate(v2, context(rec, obs2, 2)) == ode_target(rec, fut)


def test_ode_predictable_system_not_emergent():
    sys_ = eca(204, 8)
    rec = observe(ObserverSystem(**TINY), sys_, "10110100", 4, 2)
    v = ode_verdict(rec, future_trajectory(rec, 10), 2)
    assert v.outcome == "NotEmergent"
    assert replay_certificate(v, context(rec, m=2)) == ode_target(rec, future_trajectory(rec, 10))


def test_ode_cap_and_upper_mode():
    rec, fut = ode_fixture(3)
    with pytest.raises(CapError):
        ode_verdict(rec, fut, 2, observer=ObserverSystem(c_I=10, c_O=10, c_e=10))
    v = ode_verdict(rec, fut, 2, mode="upper")
    assert v.outcome in ("NotEmergent", "Inconclusive")


def test_ode_future_validation():
    rec, fut = ode_fixture(3)
    with pytest.raises(DomainError):
        ode_verdict(rec, fut, 0)
    with pytest.raises(DomainError):
        ode_verdict(rec, fut, 20)


def test_verdict_json_fields():
    rec, fut = ode_fixture(3)
    d = json.loads(ode_verdict(rec, fut, 2, seeds={"fixture": 3}).to_json())
    for key in ("mode", "threshold_bits", "outcome", "search_caps", "budgets", "seeds"):
        assert key in d
    assert d["seeds"] == {"fixture": 3}


def test_bedau_variant():
    rec, fut = ode_fixture(3)
    sim = SystemSimulator(rec.system, rec.window.at(rec.t - rec.k), rec.t - rec.k, (rec.p_o_to_s,))
    bv = bedau_verdict(rec, fut, 2, {"system": sim})
    assert bv.outcome == "WeaklyEmergent" and bv.simulator == "system"
    wrong = SystemSimulator(eca(0, 8), "00000000", rec.t - rec.k)
    bv2 = bedau_verdict(rec, fut, 2, {"wrong": wrong})
    assert bv2.outcome == "NotWeaklyEmergent" and "a" in bv2.failed

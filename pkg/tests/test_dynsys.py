import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import eca_oracle, visited_set_recurrence
from emergelab.complexity import compress_upper
from emergelab.dynsys import (CompiledTm, Eca, EcaSpec, RecordedSystem, Trajectory,
                              compile_tm_to_fddds, cycle_outputs, decode_trajectory,
                              eca, eca_apply, encode_trajectory, gen_incompressible_trajectory,
                              header_bits, read_trajectory_csv, recurrence_time,
                              sequence_recurrence, trajectory, write_trajectory_csv)
from emergelab.errors import DomainError, EncodingError
from emergelab.refmachine import Program, TmSpec, copy_program, run, sample_program


def test_rule_zero_and_identity():
    assert eca(0, 6).step("101101") == "000000"
    assert eca(204, 6).step("101101") == "101101"


def test_rule_110_by_hand():
    # neighbourhoods (periodic) of 0001: 100,000,001,010 -> bits 0,0,1,1
    assert eca(110, 4).step("0001") == "0011"


def test_fixed_and_environment_boundaries():
    # rule 110 maps 100 -> 0 and 001 -> 1
    assert Eca(EcaSpec(110, 3, "fixed", (1, 1))).step("000") == "001"
    env_sys = Eca(EcaSpec(110, 3, "environment"))
    assert env_sys.step("000", "10") == "000"
    assert env_sys.step("000", "01") == "001"
    with pytest.raises(DomainError):
        env_sys.step("000", None)


def test_state_outside_space():
    with pytest.raises(DomainError):
        eca(30, 4).step("01")


def test_trajectory_single_state_and_collapse():
    assert trajectory(eca(30, 3), "010", None, 4, 4).states == ("010",)
    assert trajectory(eca(0, 3), "111", None, 0, 3).states == ("111", "000", "000", "000")
    with pytest.raises(DomainError):
        trajectory(eca(0, 3), "111", None, 3, 2)


def test_trajectory_matches_independent_eca():
    traj = trajectory(eca(110, 5), "00101", None, 0, 10)
    s = "00101"
    for got in traj.states[1:]:
        s = eca_oracle(110, s)
        assert got == s


@given(st.integers(0, 255), st.text(alphabet="01", min_size=1, max_size=12))
def test_eca_apply_matches_oracle(rule, state):
    assert eca_apply(rule, state) == eca_oracle(rule, state)


def test_env_sequence_too_short():
    sys_ = Eca(EcaSpec(30, 3, "environment"))
    with pytest.raises(DomainError):
        trajectory(sys_, "010", ["00"], 0, 3)


def test_recurrence_examples():
    for s in ["000", "101", "111"]:
        assert recurrence_time(eca(204, 3), s) == (0, 1)
    assert recurrence_time(eca(0, 3), "111") == (1, 1)


@pytest.mark.parametrize("width", [1, 2, 3, 4])
def test_recurrence_against_visited_set(width):
    for rule in range(256):
        sys_ = eca(rule, width)
        for i in range(2 ** width):
            s0 = format(i, f"0{width}b")
            assert recurrence_time(sys_, s0) == visited_set_recurrence(sys_.step, s0)


def test_sequence_recurrence_minimises():
    seq = ["a", "b", "c", "b", "c", "b", "c", "b", "c"]
    assert sequence_recurrence(seq, 1, 4) == (1, 2)


traj_strategy = st.builds(
    lambda w, n, t0, seed: gen_incompressible_trajectory(w, n, random.Random(seed), t0),
    st.integers(0, 8), st.integers(0, 8), st.integers(0, 20), st.integers(0, 10 ** 6))


@given(traj_strategy)
@settings(max_examples=1000)
def test_trajectory_encoding_roundtrip(traj):
    assert decode_trajectory(encode_trajectory(traj)) == traj


def test_encoding_injective_on_one_state_change():
    a = Trajectory(0, ("0101", "1111"), 4)
    b = Trajectory(0, ("0101", "1110"), 4)
    assert encode_trajectory(a) != encode_trajectory(b)


def test_header_only_encoding():
    empty = Trajectory(0, (), 8)
    assert len(encode_trajectory(empty)) == header_bits(8, 0, 0)
    assert len(encode_trajectory(gen_incompressible_trajectory(8, 0, random.Random(1)))) == \
        header_bits(8, 0, 0)


def test_trailing_bits_rejected():
    with pytest.raises(EncodingError):
        decode_trajectory(encode_trajectory(Trajectory(0, ("01",), 2)) + "1")


def test_csv_roundtrip(tmp_path):
    traj = gen_incompressible_trajectory(6, 5, random.Random(2), t0=3)
    path = tmp_path / "traj.csv"
    write_trajectory_csv(traj, path, seed=2)
    back, seed = read_trajectory_csv(path)
    assert back == traj and seed == 2


def test_incompressible_fixture():
    traj = gen_incompressible_trajectory(8, 32, random.Random(7))
    assert compress_upper(encode_trajectory(traj)).upper >= 256 - 8
    other = gen_incompressible_trajectory(8, 32, random.Random(8))
    assert other != traj


def test_recorded_system_replays_then_holds():
    sys_ = RecordedSystem(["00", "01", "11"])
    assert trajectory(sys_, "00", None, 0, 4).states == ("00", "01", "11", "11", "11")


def test_compiled_copy_period():
    sys_, init = compile_tm_to_fddds(copy_program(), "101", 10)
    # one interpreter step to halt, one reset step back to the start
    assert recurrence_time(sys_, init) == (0, 2)


def test_compiled_non_halting_emits_no_boundary():
    loop = Program(TmSpec(1, ((0, 1, 1), (0, 1, 1))))
    sys_, init = compile_tm_to_fddds(loop, "", 8)
    assert cycle_outputs(sys_, init, 40) == []


def test_compiled_state_codec_is_fixed_width():
    sys_, init = compile_tm_to_fddds(copy_program(), "11", 5)
    s = init
    for _ in range(4):
        bits = sys_.encode_state(s)
        assert len(bits) == sys_.width
        assert sys_.decode_state(bits) == s
        s = sys_.step(s)


def test_compiler_faithful_on_corpus():
    rng = random.Random(2024)
    checked = 0
    while checked < 50:
        prog = sample_program(rng, s_max=3, max_data_exponent=3)
        cond = "".join(rng.choice("01") for _ in range(rng.randint(0, 4)))
        res = run(prog, cond, 60)
        if not res.halted:
            continue
        sys_, init = compile_tm_to_fddds(prog, cond, 60)
        outs = cycle_outputs(sys_, init, res.steps + 1)
        assert outs and outs[0] == (res.steps, res.output)
        checked += 1


def test_compiled_suffix_condition():
    sys_ = CompiledTm(copy_program(), 4, 8, suffix="11")
    from emergelab.refmachine import pair_encode
    assert sys_.condition("01") == pair_encode("01", "11")

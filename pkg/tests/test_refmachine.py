import random

import pytest
from hypothesis import given, settings, strategies as st

from emergelab.errors import DomainError, EncodingError
from emergelab.refmachine import (Program, TmSpec, bb2_champion, bits_to_hex, copy_program,
                                  decode_program, decode_program_prefix, flip_second_bit_program,
                                  gamma_decode, gamma_encode, gamma_len, hex_to_bits, is_program,
                                  list_decode, list_encode, machine_count, pair_decode,
                                  pair_encode, program_end, programs_by_length, run,
                                  sample_program, state_writer_program, tuple_decode,
                                  tuple_encode)

bits = st.text(alphabet="01", max_size=40)


def test_gamma_small_values():
    assert gamma_encode(1) == "1"
    assert gamma_encode(2) == "010"
    assert gamma_encode(5) == "00101"
    with pytest.raises(DomainError):
        gamma_encode(0)


@given(st.integers(min_value=1, max_value=10 ** 9))
def test_gamma_roundtrip(n):
    code = gamma_encode(n)
    assert len(code) == gamma_len(n)
    assert gamma_decode(code + "1011") == (n, len(code))


@given(bits, bits)
def test_pair_roundtrip(x, y):
    assert pair_decode(pair_encode(x, y)) == (x, y)


@given(st.lists(bits, min_size=1, max_size=6))
def test_tuple_and_list_roundtrip(items):
    assert tuple_decode(tuple_encode(items), len(items)) == tuple(items)
    enc = list_encode(items)
    assert list_decode(enc) == (items, len(enc))


@given(bits)
def test_hex_roundtrip(x):
    assert hex_to_bits(bits_to_hex(x)) == x


def test_empty_tuple_rejected_but_empty_list_allowed():
    with pytest.raises(DomainError):
        tuple_encode([])
    assert list_decode(list_encode([])) == ([], len(list_encode([])))


def test_truncated_gamma_raises():
    with pytest.raises(EncodingError):
        gamma_decode("000")


def test_copy_program_is_eight_bits_and_copies():
    p = copy_program()
    assert len(p) == 8
    for w in ["0", "1", "0110", "111000"]:
        res = run(p, w, 10)
        assert res.halted and res.output == w and res.steps == 1


def test_empty_condition_output_is_read_cell():
    assert run(copy_program(), "", 10).output == "0"


def test_flip_second_bit_worked_example():
    assert run(flip_second_bit_program(), "001", 10).output == "011"


def test_state_writer_overwrites():
    assert run(state_writer_program("1011"), "0000", 20).output == "1011"


def test_bb2_champion():
    res = run(bb2_champion(), "", 100)
    assert res.halted and res.steps == 6 and res.output.count("1") == 4


def test_non_halting_has_empty_output():
    loop = Program(TmSpec(1, ((0, 1, 1), (0, 1, 1))))
    res = run(loop, "", 50)
    assert not res.halted and res.output == ""


def test_step_budget_zero():
    assert not run(copy_program(), "1", 0).halted


@given(st.integers(min_value=1, max_value=3), st.data())
def test_table_index_roundtrip(states, data):
    idx = data.draw(st.integers(min_value=0, max_value=machine_count(states) - 1))
    assert TmSpec.from_index(states, idx).index() == idx


@given(st.integers(min_value=0, max_value=2 ** 32))
@settings(max_examples=200)
def test_sampled_programs_roundtrip(seed):
    p = sample_program(random.Random(seed), s_max=4, max_data_exponent=6)
    assert decode_program(p.bits) == p
    assert Program.from_hex(p.hex()) == p


@given(bits)
@settings(max_examples=500)
def test_program_end_agrees_with_decoder(s):
    try:
        end = decode_program_prefix(s)[1]
    except EncodingError:
        end = -1
    assert program_end(s) == end


def test_prefix_free_small_scan():
    valid = set()
    level = [""]
    for length in range(15):
        valid.update(s for s in level if is_program(s))
        level = [x + c for x in level for c in "01"]
    assert valid
    for v in valid:
        assert not any(v[:i] in valid for i in range(len(v)))


def test_programs_by_length_sorted_and_valid():
    progs = programs_by_length(12)
    keys = [(len(p.bits), p.bits) for p in progs]
    assert keys == sorted(keys)
    assert all(is_program(p.bits) for p in progs)
    assert copy_program() in progs


def test_trailing_bits_rejected():
    with pytest.raises(EncodingError):
        decode_program(copy_program().bits + "0")

import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from emergelab import compress as codec
from emergelab.complexity import (C_COPY, CtmTable, bdm, bounded_exact_k, cond_upper,
                                  compress_upper, ctm_build, ctm_k, k_compress, replay_cond)
from emergelab.errors import DomainError, EncodingError, NotCovered
from emergelab.refmachine import copy_program, run

bits = st.text(alphabet="01", max_size=300)


@given(bits)
@settings(max_examples=300)
def test_compress_roundtrip_and_header_bound(x):
    c = codec.compress(x)
    assert codec.decompress(c) == x
    assert len(c) <= len(x) + codec.literal_header_bits(len(x))


def test_zero_run_is_short():
    assert k_compress("0" * 256) <= 40


def test_each_method_roundtrips():
    x = "0110" * 20 + "1" * 30
    for enc in (codec.encode_literal, codec.encode_rle, codec.encode_dict):
        assert codec.decompress(enc(x)) == x


def test_corrupt_stream_raises():
    with pytest.raises(EncodingError):
        codec.decompress("11")


def test_compress_upper_provenance():
    est = compress_upper("0101" * 10)
    assert est.method == "compress" and est.lower == 0
    assert codec.decompress(est.certificate) == "0101" * 10


def test_ctm_table_counts(ctm22):
    assert ctm22.machines == 20736
    assert sum(ctm22.counts.values()) == ctm22.halters
    # the single-cell outputs are the most frequent
    top = dict(ctm22.most_common(2))
    assert set(top) == {"0", "1"}
    assert ctm_k(ctm22, "0").upper < ctm_k(ctm22, "01").upper < ctm_k(ctm22, "1011").upper
    assert "0101" not in ctm22.counts


def test_ctm_not_covered(ctm22):
    with pytest.raises(NotCovered):
        ctm_k(ctm22, "1" * 40)


def test_ctm_order_independent(ctm22):
    rev = ctm_build(2, 1000, order=reversed(range(ctm22.machines)))
    assert rev.to_text() == ctm22.to_text()


def test_ctm_text_roundtrip(ctm22, tmp_path):
    path = ctm22.save(tmp_path / "t.csv")
    assert CtmTable.load(path) == ctm22
    assert CtmTable.load(path).counts == ctm22.counts


def test_ctm_corrupt_cache(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("ctm,s=2,budget=10,machines=5,halters=3\n0,1\n")
    with pytest.raises(EncodingError):
        CtmTable.load(p)


def test_bdm_sums_block_values(ctm22):
    x = "01" * 8
    est = bdm(x, ctm22, 2)
    expected = ctm_k(ctm22, "01").upper + math.log2(8)
    assert est.upper == pytest.approx(expected)
    with pytest.raises(DomainError):
        bdm("010", ctm22, 2, pad="strict")


def test_bdm_matrix(ctm22):
    rows = ["1111", "1111"]
    est = bdm(rows, ctm22, 2)
    assert est.upper == pytest.approx(ctm_k(ctm22, "1111").upper + 1)


def test_cond_upper_copy_witness():
    w = "1100101110"
    est = cond_upper(w, w)
    assert est.upper <= C_COPY and est.note == "copy"
    assert replay_cond(est, w) == w


@given(st.text(alphabet="01", max_size=60), st.text(alphabet="01", max_size=60))
@settings(max_examples=200)
def test_cond_upper_replays(z, w):
    est = cond_upper(z, w)
    assert replay_cond(est, w) == z
    assert est.upper <= k_compress(z)


def test_bounded_exact_finds_copy():
    est = bounded_exact_k("101", "101", len_cap=10)
    assert est.exact and est.upper == 8
    assert run(est.certificate, "101", 100).output == "101"


def test_bounded_exact_miss_sets_lower():
    rng = random.Random(11)
    z = "".join(rng.choice("01") for _ in range(32))
    est = bounded_exact_k(z, "", len_cap=12)
    assert est.lower == 13 and est.upper == math.inf


def test_bounded_exact_cap_enforced():
    with pytest.raises(DomainError):
        bounded_exact_k("0", "", len_cap=25)


def test_no_copier_shorter_than_copy_program():
    est = bounded_exact_k("0110", "0110", len_cap=8)
    assert est.upper == len(copy_program().bits) == C_COPY

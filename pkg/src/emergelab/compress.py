"""Self-contained lossless bit-string codec used for upper bounds.

Every encoding is ``tag(2) . gamma(n+1) . body`` where ``n = |x|`` and the
tag selects one of three bodies:

* ``00`` literal: the bits themselves;
* ``01`` run-length: first bit, then gamma-coded run lengths (the final run
  is implied by ``n``);
* ``10`` dictionary parse: greedy LZ77-style tokens, ``0 . gamma(k) . bits``
  for a block of ``k`` literal bits and
  ``1 . gamma(offset) . gamma(len - MIN_MATCH + 1)`` for a back-reference
  (overlapping references allowed).

:func:`compress` keeps the shortest, preferring the earlier tag on ties.
"""
from __future__ import annotations

from .errors import EncodingError
from .refmachine import gamma_decode, gamma_encode, gamma_len

TAG_LITERAL = "00"
TAG_RLE = "01"
TAG_DICT = "10"
MIN_MATCH = 2


def literal_header_bits(n: int) -> int:
    """Fixed cost of the literal path on an ``n``-bit input."""
    return 2 + gamma_len(n + 1)


def encode_literal(x: str) -> str:
    return TAG_LITERAL + gamma_encode(len(x) + 1) + x


def encode_rle(x: str) -> str:
    out = [TAG_RLE, gamma_encode(len(x) + 1)]
    if x:
        out.append(x[0])
        run = 1
        for a, b in zip(x, x[1:]):
            if a == b:
                run += 1
            else:
                out.append(gamma_encode(run))
                run = 1
    return "".join(out)


def _longest_match(x: str, i: int) -> tuple[int, int]:
    """Longest ``L`` with ``x[i:i+L] == x[j:j+L]`` for some ``j < i``; returns (L, j)."""
    n = len(x)
    if i == 0 or x.rfind(x[i], 0, i) < 0:
        return 0, -1
    lo = 1
    hi = 2
    while i + hi <= n and x.rfind(x[i:i + hi], 0, i + hi - 1) >= 0:
        lo = hi
        hi *= 2
    hi = min(hi, n - i + 1)
    # invariant: lo matches, hi does not (or is out of range)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if x.rfind(x[i:i + mid], 0, i + mid - 1) >= 0:
            lo = mid
        else:
            hi = mid
    return lo, x.rfind(x[i:i + lo], 0, i + lo - 1)


def encode_dict(x: str) -> str:
    out = [TAG_DICT, gamma_encode(len(x) + 1)]
    i = 0
    n = len(x)
    pending = 0
    while i < n:
        length, j = _longest_match(x, i)
        if length >= MIN_MATCH:
            token = "1" + gamma_encode(i - j) + gamma_encode(length - MIN_MATCH + 1)
            if len(token) < length:
                if pending:
                    out.append("0" + gamma_encode(pending) + x[i - pending:i])
                    pending = 0
                out.append(token)
                i += length
                continue
        pending += 1
        i += 1
    if pending:
        out.append("0" + gamma_encode(pending) + x[n - pending:])
    return "".join(out)


def compress(x: str) -> str:
    best = encode_literal(x)
    for enc in (encode_rle, encode_dict):
        cand = enc(x)
        if len(cand) < len(best):
            best = cand
    return best


def decompress(bits: str) -> str:
    """Invert any encoding produced by this module; trailing bits are an error."""
    if len(bits) < 3:
        raise EncodingError("codeword shorter than its header")
    tag = bits[:2]
    n1, pos = gamma_decode(bits, 2)
    n = n1 - 1
    if tag == TAG_LITERAL:
        out = bits[pos:pos + n]
        if len(out) != n:
            raise EncodingError("truncated literal body")
        pos += n
    elif tag == TAG_RLE:
        out = ""
        if n:
            if pos >= len(bits):
                raise EncodingError("missing first bit")
            cur = bits[pos]
            pos += 1
            chunks = []
            produced = 0
            while produced < n and pos < len(bits):
                run, pos = gamma_decode(bits, pos)
                chunks.append(cur * run)
                produced += run
                cur = "1" if cur == "0" else "0"
            if produced > n:
                raise EncodingError("run lengths overflow the declared size")
            chunks.append(cur * (n - produced))
            out = "".join(chunks)
    elif tag == TAG_DICT:
        buf = []
        while len(buf) < n:
            if pos >= len(bits):
                raise EncodingError("truncated dictionary body")
            if bits[pos] == "0":
                k, pos = gamma_decode(bits, pos + 1)
                if pos + k > len(bits):
                    raise EncodingError("truncated literal block")
                buf.extend(bits[pos:pos + k])
                pos += k
            else:
                off, pos = gamma_decode(bits, pos + 1)
                length, pos = gamma_decode(bits, pos)
                length += MIN_MATCH - 1
                start = len(buf) - off
                if start < 0:
                    raise EncodingError("back-reference before start")
                for k in range(length):
                    buf.append(buf[start + k])
        if len(buf) != n:
            raise EncodingError("dictionary body overflows the declared size")
        out = "".join(buf)
    else:
        raise EncodingError(f"unknown method tag {tag}")
    if pos != len(bits):
        raise EncodingError("trailing bits after codeword")
    return out


def method_of(bits: str) -> str:
    return {TAG_LITERAL: "literal", TAG_RLE: "rle", TAG_DICT: "dict"}[bits[:2]]

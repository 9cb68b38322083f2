"""Computable estimators of algorithmic information content.

Every estimator returns an :class:`AicEstimate` interval.  Only the bounded
exact search yields a real lower bound, and only relative to its caps.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from . import compress as codec
from .errors import DomainError, EncodingError, NotCovered
from .refmachine import (Program, check_bits, copy_program, enumerate_machines,
                         programs_by_length, run)

C_COPY = len(copy_program().bits)
DEFAULT_C_I = 8
EXACT_LEN_CAP = 24


@dataclass(frozen=True)
class AicEstimate:
    lower: float
    upper: float
    method: str
    note: str = ""
    certificate: Optional[str] = None

    def __post_init__(self):
        if self.lower > self.upper:
            raise DomainError(f"lower {self.lower} exceeds upper {self.upper}")

    @property
    def exact(self) -> bool:
        return self.lower == self.upper


# --------------------------------------------------------------------------
# CTM

@dataclass(frozen=True)
class CtmTable:
    states: int
    step_budget: int
    machines: int
    halters: int
    counts: dict = field(default_factory=dict, hash=False)

    def header(self) -> str:
        return (f"ctm,s={self.states},budget={self.step_budget},"
                f"machines={self.machines},halters={self.halters}")

    def to_text(self) -> str:
        lines = [self.header()]
        lines += [f"{x},{c}" for x, c in sorted(self.counts.items())]
        return "\n".join(lines) + "\n"

    def sha256(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_text())
        return path

    @classmethod
    def from_text(cls, text: str) -> "CtmTable":
        lines = text.strip().splitlines()
        if not lines or not lines[0].startswith("ctm,"):
            raise EncodingError("not a CTM cache file")
        meta = dict(kv.split("=") for kv in lines[0].split(",")[1:])
        counts = {}
        for line in lines[1:]:
            x, c = line.split(",")
            counts[x] = int(c)
        table = cls(int(meta["s"]), int(meta["budget"]), int(meta["machines"]),
                    int(meta["halters"]), counts)
        if sum(counts.values()) != table.halters or table.halters > table.machines:
            raise EncodingError("CTM cache totals are inconsistent")
        return table

    @classmethod
    def load(cls, path) -> "CtmTable":
        return cls.from_text(Path(path).read_text())

    def most_common(self, k: int = 10) -> list[tuple[str, int]]:
        return sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]


def ctm_build(states: int, step_budget: int, workers: int = 1, order=None) -> CtmTable:
    summary = enumerate_machines(states, step_budget, workers=workers, order=order)
    return CtmTable(states, step_budget, summary.machines, summary.halters,
                    dict(summary.outputs))


def ctm_k(table: CtmTable, x: str) -> AicEstimate:
    count = table.counts.get(x)
    if not count:
        raise NotCovered(f"{x!r} is not an output of CTM(s={table.states})")
    k = -math.log2(count / table.halters)
    return AicEstimate(k, k, "ctm", f"s={table.states},budget={table.step_budget}")


# --------------------------------------------------------------------------
# Compression

def compress_upper(x: str) -> AicEstimate:
    check_bits(x)
    bits = codec.compress(x)
    return AicEstimate(0, len(bits), "compress", codec.method_of(bits), bits)


def k_compress(x: str) -> int:
    return len(codec.compress(x))


# --------------------------------------------------------------------------
# Block decomposition

Matrix = Sequence[str]


def _blocks_1d(x: str, block: int, pad: str) -> tuple[list[str], int]:
    rem = len(x) % block
    padding = (block - rem) % block
    if padding and pad == "strict":
        raise DomainError(f"length {len(x)} is not a multiple of {block}")
    x = x + "0" * padding
    return [x[i:i + block] for i in range(0, len(x), block)], padding


def _blocks_2d(rows: Matrix, block: int, pad: str) -> tuple[list[str], int]:
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise DomainError("ragged matrix")
    pad_r = (block - len(rows) % block) % block
    pad_c = (block - width % block) % block
    if (pad_r or pad_c) and pad == "strict":
        raise DomainError("matrix shape is not a multiple of the block size")
    grid = [r + "0" * pad_c for r in rows] + ["0" * (width + pad_c)] * pad_r
    out = []
    for i in range(0, len(grid), block):
        for j in range(0, width + pad_c, block):
            out.append("".join(grid[i + a][j:j + block] for a in range(block)))
    padding = pad_r * (width + pad_c) + pad_c * len(rows)
    return out, padding


def bdm(x: Union[str, Matrix], table: CtmTable, block: int,
        pad: str = "zero") -> AicEstimate:
    """Sum of ctm_k(b) + log2(multiplicity(b)) over distinct blocks.

    Matrices are tiled into ``block x block`` squares flattened row-major.
    Zero padding contributes ``log2(1 + padded cells)``.
    """
    if block < 1:
        raise DomainError("block size must be >= 1")
    if pad not in ("zero", "strict"):
        raise DomainError(f"unknown pad policy {pad!r}")
    if isinstance(x, str):
        blocks, padding = _blocks_1d(x, block, pad)
    else:
        blocks, padding = _blocks_2d(list(x), block, pad)
    mult: dict[str, int] = {}
    for b in blocks:
        mult[b] = mult.get(b, 0) + 1
    total = 0.0
    for b, m in sorted(mult.items()):
        if b not in table.counts:
            raise NotCovered(f"block {b!r} is not covered by the CTM table")
        total += ctm_k(table, b).upper + math.log2(m)
    total += math.log2(1 + padding)
    return AicEstimate(0, total, "bdm", f"block={block},pad={padding}")


# --------------------------------------------------------------------------
# Conditional upper bounds

def cond_upper(z: str, w: str, c_copy: int = C_COPY) -> AicEstimate:
    """Upper bound on K(z | w) from the cheapest replayable witness.

    Witnesses: the copy program when ``z == w``; the compressed ``w . z``
    stream (its cost over ``w`` alone, never below ``c_copy``); the
    unconditional code for ``z``.
    """
    check_bits(z)
    check_bits(w)
    cz = codec.compress(z)
    best = AicEstimate(0, len(cz), "composite", "plain", cz)
    if w:
        joint = codec.compress(w + z)
        delta = max(len(joint) - len(codec.compress(w)), c_copy)
        if delta < best.upper:
            best = AicEstimate(0, delta, "composite", "joint", joint)
    if z == w and c_copy < best.upper:
        best = AicEstimate(0, c_copy, "composite", "copy", copy_program().bits)
    return best


def replay_cond(est: AicEstimate, w: str) -> str:
    """Recompute ``z`` from a :func:`cond_upper` certificate and the condition."""
    if est.note == "copy":
        res = run(est.certificate, w, 10)
        return res.output
    if est.note == "joint":
        full = codec.decompress(est.certificate)
        if not full.startswith(w):
            raise EncodingError("joint certificate does not extend the condition")
        return full[len(w):]
    if est.note == "plain":
        return codec.decompress(est.certificate)
    raise DomainError(f"not a conditional certificate: {est.note!r}")


# --------------------------------------------------------------------------
# Bounded exact search

_PROGRAM_CACHE: dict[int, list[Program]] = {}


def programs_up_to(len_cap: int) -> list[Program]:
    if len_cap not in _PROGRAM_CACHE:
        _PROGRAM_CACHE[len_cap] = programs_by_length(len_cap)
    return _PROGRAM_CACHE[len_cap]


def bounded_exact_k(z: str, w: str = "", len_cap: int = 16,
                    step_budget: int = 100) -> AicEstimate:
    """Shortest program p with |p| <= len_cap and run(p, w).output == z.

    Programs are tried in (length, lexicographic) order, so the first hit is
    the minimum.  A miss proves no program within the caps exists and
    returns ``lower = len_cap + 1``.
    """
    check_bits(z)
    check_bits(w)
    if len_cap > EXACT_LEN_CAP:
        raise DomainError(f"len_cap {len_cap} exceeds the desk-scale cap {EXACT_LEN_CAP}")
    note = f"len_cap={len_cap},steps={step_budget}"
    if len(z) < len(w):
        # every output window covers the condition
        return AicEstimate(len_cap + 1, math.inf, "bounded-exact", note)
    for prog in programs_up_to(len_cap):
        res = run(prog, w, step_budget)
        if res.halted and res.output == z:
            n = len(prog.bits)
            return AicEstimate(n, n, "bounded-exact", note, prog.bits)
    return AicEstimate(len_cap + 1, math.inf, "bounded-exact", note)

"""Prefix-free reference machine: codecs, (s,2) Turing machines, interpreter.

Bit strings are plain ``str`` objects over ``'0'``/``'1'``.  A program is
``gamma(s) . table . gamma(|d|+1) . d`` where every table entry is
``write(1) move(1, 0=L 1=R) next(ceil(log2(s+1)))`` and ``next == 0`` halts.
"""
from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Optional, Sequence

from .errors import DomainError, EncodingError

LEFT, RIGHT = 0, 1

# Zero-run cap on the data-length header while sampling; keeps |d| < 2**17.
MAX_DATA_EXPONENT = 16


# --------------------------------------------------------------------------
# Codecs

def gamma_encode(n: int) -> str:
    """Elias gamma code of a positive integer."""
    if n < 1:
        raise DomainError(f"gamma code needs n >= 1, got {n}")
    b = bin(n)[2:]
    return "0" * (len(b) - 1) + b


def gamma_decode(bits: str, pos: int = 0) -> tuple[int, int]:
    """Decode one gamma codeword starting at ``pos``; returns (n, end)."""
    z = 0
    n = len(bits)
    while pos + z < n and bits[pos + z] == "0":
        z += 1
    end = pos + 2 * z + 1
    if end > n:
        raise EncodingError("truncated gamma codeword")
    return int(bits[pos + z:end], 2), end


def gamma_len(n: int) -> int:
    return 2 * (n.bit_length() - 1) + 1


def pair_encode(x: str, y: str) -> str:
    """<x, y> = gamma(|x|+1) . x . y"""
    return gamma_encode(len(x) + 1) + x + y


def pair_decode(s: str) -> tuple[str, str]:
    n, pos = gamma_decode(s)
    end = pos + n - 1
    if end > len(s):
        raise EncodingError("pair header longer than payload")
    return s[pos:end], s[end:]


def tuple_encode(items: Sequence[str]) -> str:
    """Left fold of :func:`pair_encode`; a 1-tuple encodes as its item."""
    if not items:
        raise DomainError("cannot encode an empty tuple")
    acc = items[0]
    for item in items[1:]:
        acc = pair_encode(acc, item)
    return acc


def tuple_decode(s: str, n: int) -> tuple[str, ...]:
    if n < 1:
        raise DomainError("tuple arity must be >= 1")
    out = []
    for _ in range(n - 1):
        s, last = pair_decode(s)
        out.append(last)
    out.append(s)
    return tuple(reversed(out))


def list_encode(items: Iterable[str]) -> str:
    """Self-delimiting list: gamma(n+1) then gamma(|x|+1) . x per item."""
    items = list(items)
    return gamma_encode(len(items) + 1) + "".join(
        gamma_encode(len(x) + 1) + x for x in items)


def list_decode(s: str, pos: int = 0) -> tuple[list[str], int]:
    n, pos = gamma_decode(s, pos)
    out = []
    for _ in range(n - 1):
        m, pos = gamma_decode(s, pos)
        end = pos + m - 1
        if end > len(s):
            raise EncodingError("truncated list item")
        out.append(s[pos:end])
        pos = end
    return out, pos


def bits_to_hex(bits: str) -> str:
    """``<nbits>:<hex>`` with the bits left-aligned in whole nibbles."""
    if not bits:
        return "0:"
    pad = (-len(bits)) % 4
    return f"{len(bits)}:{int(bits + '0' * pad, 2):0{(len(bits) + pad) // 4}x}"


def hex_to_bits(text: str) -> str:
    nbits, _, hexpart = text.partition(":")
    n = int(nbits)
    if n == 0:
        return ""
    raw = bin(int(hexpart, 16))[2:].zfill(len(hexpart) * 4)
    return raw[:n]


def check_bits(s: str, what: str = "bit string") -> str:
    if s.strip("01"):
        raise DomainError(f"{what} must contain only '0'/'1'")
    return s


# --------------------------------------------------------------------------
# Machines

def next_width(states: int) -> int:
    return states.bit_length()


@dataclass(frozen=True)
class TmSpec:
    """Transition table of an (s, 2) machine.

    ``table[2*(q-1) + read] = (write, move, next)`` with ``next == 0`` halting.
    """

    states: int
    table: tuple

    def __post_init__(self):
        if self.states < 1:
            raise DomainError("a machine needs at least one state")
        if len(self.table) != 2 * self.states:
            raise DomainError(f"table needs {2 * self.states} entries")
        for w, m, nxt in self.table:
            if w not in (0, 1) or m not in (0, 1) or not 0 <= nxt <= self.states:
                raise DomainError(f"bad table entry {(w, m, nxt)}")

    def entry(self, state: int, symbol: int) -> tuple[int, int, int]:
        return self.table[2 * (state - 1) + symbol]

    def table_bits(self) -> str:
        width = next_width(self.states)
        return "".join(f"{w}{m}{nxt:0{width}b}" for w, m, nxt in self.table)

    @classmethod
    def from_index(cls, states: int, index: int) -> "TmSpec":
        """Mixed-radix table index in ``[0, (4(s+1))**(2s))``."""
        base = 4 * (states + 1)
        digits = []
        for _ in range(2 * states):
            index, e = divmod(index, base)
            digits.append(e)
        digits.reverse()
        return cls(states, tuple(_entry_from_digit(e, states) for e in digits))

    def index(self) -> int:
        base = 4 * (self.states + 1)
        out = 0
        for w, m, nxt in self.table:
            out = out * base + (w * 2 + m) * (self.states + 1) + nxt
        return out


def _entry_from_digit(e: int, states: int) -> tuple[int, int, int]:
    wm, nxt = divmod(e, states + 1)
    return wm // 2, wm % 2, nxt


def machine_count(states: int) -> int:
    return (4 * (states + 1)) ** (2 * states)


@dataclass(frozen=True)
class Program:
    tm: TmSpec
    data: str = ""

    @cached_property
    def bits(self) -> str:
        return (gamma_encode(self.tm.states) + self.tm.table_bits()
                + gamma_encode(len(self.data) + 1) + self.data)

    def __len__(self) -> int:
        return len(self.bits)

    def hex(self) -> str:
        return bits_to_hex(self.bits)

    @classmethod
    def from_bits(cls, bits: str) -> "Program":
        return decode_program(bits)

    @classmethod
    def from_hex(cls, text: str) -> "Program":
        return decode_program(hex_to_bits(text))


def decode_program_prefix(bits: str, pos: int = 0) -> tuple[Program, int]:
    """Parse one program starting at ``pos``; returns (program, end)."""
    states, pos = gamma_decode(bits, pos)
    width = next_width(states)
    step = 2 + width
    end = pos + 2 * states * step
    if end > len(bits):
        raise EncodingError("truncated transition table")
    table = []
    for k in range(pos, end, step):
        nxt = int(bits[k + 2:k + step], 2)
        if nxt > states:
            raise EncodingError(f"next state {nxt} exceeds {states}")
        table.append((int(bits[k]), int(bits[k + 1]), nxt))
    dlen, pos = gamma_decode(bits, end)
    end = pos + dlen - 1
    if end > len(bits):
        raise EncodingError("truncated data payload")
    return Program(TmSpec(states, tuple(table)), bits[pos:end]), end


def decode_program(bits: str) -> Program:
    prog, end = decode_program_prefix(bits)
    if end != len(bits):
        raise EncodingError(f"{len(bits) - end} trailing bits after program")
    return prog


def program_end(bits: str, pos: int = 0) -> int:
    """End index of the program starting at ``pos``, or -1 if none parses.

    Same grammar as :func:`decode_program_prefix` without building objects
    or raising; used for bulk scans.
    """
    n = len(bits)
    z = bits.find("1", pos)
    if z < 0:
        return -1
    end = 2 * z - pos + 1
    if end > n:
        return -1
    states = int(bits[z:end], 2)
    width = states.bit_length()
    step = 2 + width
    pos = end + 2 * states * step
    if pos > n:
        return -1
    for k in range(end + 2, pos, step):
        if int(bits[k:k + width], 2) > states:
            return -1
    z = bits.find("1", pos)
    if z < 0:
        return -1
    end = 2 * z - pos + 1
    if end > n:
        return -1
    end += int(bits[z:end], 2) - 1
    return end if end <= n else -1


def is_program(bits: str) -> bool:
    return program_end(bits) == len(bits)


def as_program(program) -> Program:
    if isinstance(program, Program):
        return program
    return decode_program(program)


# --------------------------------------------------------------------------
# Interpreter

@dataclass(frozen=True)
class RunResult:
    halted: bool
    steps: int
    output: str
    visited_extent: Optional[tuple[int, int]] = None


def _halting_reachable(tm: TmSpec) -> bool:
    seen = {1}
    todo = [1]
    while todo:
        q = todo.pop()
        for sym in (0, 1):
            nxt = tm.entry(q, sym)[2]
            if nxt == 0:
                return True
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return False


def run(program, condition: str = "", step_budget: int = 1000) -> RunResult:
    """Run ``program`` on tape ``d . condition`` for at most ``step_budget`` steps.

    The head starts on cell 0 (first cell of ``d``, or of the condition when
    ``d`` is empty) in state 1.  The output is the final content of the
    smallest window covering the condition cells and every cell the machine
    read.  A non-halting result carries an empty output.

    Two sound shortcuts stop hopeless runs early: machines whose halting
    transitions are unreachable, and machines that re-enter fresh blank
    territory in a repeated state without looking back (translated cyclers).
    """
    prog = as_program(program)
    if step_budget < 0:
        raise DomainError("step budget must be >= 0")
    tm = prog.tm
    data = prog.data
    init = data + condition
    n = len(init)
    cond_lo, cond_hi = len(data), n - 1

    if not _halting_reachable(tm):
        return RunResult(False, 0, "", None)

    table = tm.table
    margin = min(step_budget, 64) + 1
    tape = bytearray(margin) + bytearray(c == "1" for c in init) + bytearray(margin)
    off = margin
    head = 0
    state = 1
    steps = 0
    read_lo = read_hi = 0
    touched_lo, touched_hi = 0, max(n - 1, 0)
    # translated-cycler bookkeeping, one dict per escape direction
    rec_r: dict[int, list[int]] = {}
    rec_l: dict[int, list[int]] = {}
    low_water = high_water = 0

    while steps < step_budget:
        idx = head + off
        if idx < 0 or idx >= len(tape):
            grow = len(tape)
            if idx < 0:
                tape[:0] = bytearray(grow)
                off += grow
            else:
                tape.extend(bytearray(grow))
            idx = head + off
        sym = tape[idx]
        if head < read_lo:
            read_lo = head
        elif head > read_hi:
            read_hi = head
        w, m, nxt = table[2 * state - 2 + sym]
        tape[idx] = w
        steps += 1
        if nxt == 0:
            lo = min(read_lo, cond_lo) if n > cond_lo else read_lo
            hi = max(read_hi, cond_hi) if n > cond_lo else read_hi
            out = "".join("1" if tape[c + off] else "0" for c in range(lo, hi + 1))
            return RunResult(True, steps, out, (lo, hi))
        state = nxt
        head += 1 if m else -1

        if head < low_water:
            low_water = head
        if head > high_water:
            high_water = head
        if head > touched_hi:
            touched_hi = head
            for rec in rec_r.values():
                if low_water < rec[1]:
                    rec[1] = low_water
            prev = rec_r.get(state)
            if prev is not None and prev[1] >= prev[0]:
                return RunResult(False, steps, "", None)
            rec_r[state] = [head, head]
            low_water = head
        elif head < touched_lo:
            touched_lo = head
            for rec in rec_l.values():
                if high_water > rec[1]:
                    rec[1] = high_water
            prev = rec_l.get(state)
            if prev is not None and prev[1] <= prev[0]:
                return RunResult(False, steps, "", None)
            rec_l[state] = [head, head]
            high_water = head
    return RunResult(False, steps, "", None)


# --------------------------------------------------------------------------
# Enumeration

@dataclass
class EnumerationSummary:
    states: int
    step_budget: int
    machines: int = 0
    halters: int = 0
    max_steps: int = 0
    max_ones: int = 0
    outputs: Counter = field(default_factory=Counter)

    def merge(self, other: "EnumerationSummary") -> "EnumerationSummary":
        self.machines += other.machines
        self.halters += other.halters
        self.max_steps = max(self.max_steps, other.max_steps)
        self.max_ones = max(self.max_ones, other.max_ones)
        self.outputs.update(other.outputs)
        return self


def _enumerate_range(args) -> EnumerationSummary:
    states, step_budget, start, stop = args
    summary = EnumerationSummary(states, step_budget)
    for index in range(start, stop):
        res = run(Program(TmSpec.from_index(states, index)), "", step_budget)
        summary.machines += 1
        if res.halted:
            summary.halters += 1
            summary.outputs[res.output] += 1
            summary.max_steps = max(summary.max_steps, res.steps)
            summary.max_ones = max(summary.max_ones, res.output.count("1"))
    return summary


def enumerate_machines(states: int, step_budget: int,
                       visitor: Optional[Callable[[int, TmSpec, RunResult], None]] = None,
                       workers: int = 1,
                       order: Optional[Iterable[int]] = None) -> EnumerationSummary:
    """Run every (states, 2) table on a blank tape.

    ``order`` overrides the visit order (serial only); ``workers > 1`` splits
    the index range into contiguous chunks whose summaries are merged.
    """
    if states < 1:
        raise DomainError("states must be >= 1")
    total = machine_count(states)
    if visitor is not None or order is not None or workers <= 1:
        summary = EnumerationSummary(states, step_budget)
        for index in (range(total) if order is None else order):
            tm = TmSpec.from_index(states, index)
            res = run(Program(tm), "", step_budget)
            summary.machines += 1
            if res.halted:
                summary.halters += 1
                summary.outputs[res.output] += 1
                summary.max_steps = max(summary.max_steps, res.steps)
                summary.max_ones = max(summary.max_ones, res.output.count("1"))
            if visitor is not None:
                visitor(index, tm, res)
        return summary
    chunk = math.ceil(total / workers)
    jobs = [(states, step_budget, lo, min(lo + chunk, total))
            for lo in range(0, total, chunk)]
    summary = EnumerationSummary(states, step_budget)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_enumerate_range, jobs):
            summary.merge(part)
    return summary


def iter_programs(max_len: int, min_len: int = 0) -> Iterator[Program]:
    """All valid programs with ``min_len <= |p| <= max_len`` (unordered)."""
    states = 1
    while gamma_len(states) + 2 * states * (2 + next_width(states)) + 1 <= max_len:
        base = gamma_len(states) + 2 * states * (2 + next_width(states))
        dlen = 0
        while base + gamma_len(dlen + 1) + dlen <= max_len:
            total = base + gamma_len(dlen + 1) + dlen
            if total >= min_len:
                for index in range(machine_count(states)):
                    tm = TmSpec.from_index(states, index)
                    for k in range(2 ** dlen):
                        data = format(k, f"0{dlen}b") if dlen else ""
                        yield Program(tm, data)
            dlen += 1
        states += 1


def programs_by_length(max_len: int) -> list[Program]:
    """Valid programs up to ``max_len`` bits in (length, lexicographic) order."""
    progs = list(iter_programs(max_len))
    progs.sort(key=lambda p: (len(p.bits), p.bits))
    return progs


# --------------------------------------------------------------------------
# Sampling

def sample_program(rng, s_max: Optional[int] = None,
                   max_data_exponent: int = MAX_DATA_EXPONENT) -> Program:
    """Feed fair bits to the self-delimiting decoder until a program parses.

    Draws whose state count exceeds ``s_max``, whose table names a state that
    does not exist, or whose data header has more than ``max_data_exponent``
    leading zeros are discarded and redrawn from scratch.
    """
    bit = lambda: rng.getrandbits(1)
    while True:
        z = 0
        while not bit():
            z += 1
            if s_max is not None and (1 << z) > s_max:
                break
        else:
            states = 1
            for _ in range(z):
                states = (states << 1) | bit()
            if s_max is not None and states > s_max:
                continue
            width = next_width(states)
            table = []
            ok = True
            for _ in range(2 * states):
                w, m = bit(), bit()
                nxt = 0
                for _ in range(width):
                    nxt = (nxt << 1) | bit()
                if nxt > states:
                    ok = False
                    break
                table.append((w, m, nxt))
            if not ok:
                continue
            z = 0
            while not bit():
                z += 1
                if z > max_data_exponent:
                    break
            else:
                dl = 1
                for _ in range(z):
                    dl = (dl << 1) | bit()
                data = "".join("1" if bit() else "0" for _ in range(dl - 1))
                return Program(TmSpec(states, tuple(table)), data)
            continue


# --------------------------------------------------------------------------
# Named machines

def copy_program() -> Program:
    """1-state machine that halts on its first step, rewriting the cell read."""
    return Program(TmSpec(1, ((0, LEFT, 0), (1, LEFT, 0))))


def flip_second_bit_program() -> Program:
    """Keep the first bit, flip the second, halt."""
    return Program(TmSpec(2, ((0, RIGHT, 2), (1, RIGHT, 2),
                              (1, RIGHT, 0), (0, RIGHT, 0))))


def state_writer_program(target: str) -> Program:
    """|target|-state machine overwriting cells 0.. with ``target``.

    On a condition of the same width the output is exactly ``target``.
    """
    check_bits(target, "target")
    if not target:
        raise DomainError("target must be non-empty")
    n = len(target)
    table = []
    for i, ch in enumerate(target, start=1):
        nxt = i + 1 if i < n else 0
        table += [(int(ch), RIGHT, nxt)] * 2
    return Program(TmSpec(n, tuple(table)))


def bb2_champion() -> Program:
    """A0->1RB A1->1LB B0->1LA B1->1RH."""
    return Program(TmSpec(2, ((1, RIGHT, 2), (1, LEFT, 2),
                              (1, LEFT, 1), (1, RIGHT, 0))))

"""Context machine: a small prefix-free language over tuple contexts.

The reference TM always echoes its whole condition window, so it cannot
extract one component of a tuple.  Conditional searches over structured
contexts (observer records, FAT records, trajectories) therefore run on this
machine instead.  A program is::

    dir(1) . gamma(i) . gamma(op) . args

``dir`` = 0 counts components from the start, 1 from the end; ``i >= 1``.
Ops (trajectory ops need the component to decode as a trajectory):

    1 COPY
    2 EXTEND  gamma(p) gamma(c+1)       append c states repeating the last p
    3 SYNC    gamma(p) gamma(j)         as EXTEND, until the end time of component j
    4 CYCLE   gamma(nbits) bits gamma(c+1)   append c states cycling a literal
    5 PATCH   gamma(pos+1) gamma(len) bits   XOR a window
    6 RUN     <program>                 run a reference-machine program on it

Every field is self-delimiting, so valid programs form a prefix-free set.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterator, Optional, Sequence

from .dynsys import Trajectory, decode_trajectory, encode_trajectory
from .errors import DomainError, EncodingError
from .refmachine import (Program, decode_program_prefix, gamma_decode,
                         gamma_encode, gamma_len, run)

COPY, EXTEND, SYNC, CYCLE, PATCH, RUN = 1, 2, 3, 4, 5, 6
OP_NAMES = {COPY: "copy", EXTEND: "extend", SYNC: "sync", CYCLE: "cycle",
            PATCH: "patch", RUN: "run"}
RUN_OVERHEAD = 1 + 1 + gamma_len(RUN)
DEFAULT_STEPS = 100
DEFAULT_RUN_CAP = 24


@dataclass(frozen=True)
class CtxProgram:
    from_end: bool
    index: int
    op: int
    args: tuple = ()

    @property
    def bits(self) -> str:
        return encode(self.from_end, self.index, self.op, self.args)

    def describe(self) -> str:
        side = "end" if self.from_end else "start"
        return f"{OP_NAMES[self.op]}(component {self.index} from {side}, args={self.args})"


def _body(op: int, args: tuple) -> str:
    g = gamma_encode
    if op == COPY:
        return g(COPY)
    if op == EXTEND:
        p, c = args
        return g(EXTEND) + g(p) + g(c + 1)
    if op == SYNC:
        p, j = args
        return g(SYNC) + g(p) + g(j)
    if op == CYCLE:
        lit, c = args
        return g(CYCLE) + g(len(lit)) + lit + g(c + 1)
    if op == PATCH:
        pos, bits = args
        return g(PATCH) + g(pos + 1) + g(len(bits)) + bits
    if op == RUN:
        (prog,) = args
        return g(RUN) + prog
    raise DomainError(f"unknown context op {op}")


def encode(from_end: bool, index: int, op: int, args: tuple = ()) -> str:
    return ("1" if from_end else "0") + gamma_encode(index) + _body(op, args)


def parse_prefix(bits: str, pos: int = 0) -> tuple[CtxProgram, int]:
    if pos >= len(bits):
        raise EncodingError("empty context program")
    from_end = bits[pos] == "1"
    index, pos = gamma_decode(bits, pos + 1)
    op, pos = gamma_decode(bits, pos)
    if op == COPY:
        args = ()
    elif op in (EXTEND, SYNC):
        a, pos = gamma_decode(bits, pos)
        b, pos = gamma_decode(bits, pos)
        args = (a, b - 1) if op == EXTEND else (a, b)
    elif op == CYCLE:
        n, pos = gamma_decode(bits, pos)
        if pos + n > len(bits):
            raise EncodingError("truncated cycle literal")
        lit = bits[pos:pos + n]
        c, pos = gamma_decode(bits, pos + n)
        args = (lit, c - 1)
    elif op == PATCH:
        p, pos = gamma_decode(bits, pos)
        n, pos = gamma_decode(bits, pos)
        if pos + n > len(bits):
            raise EncodingError("truncated patch bits")
        args = (p - 1, bits[pos:pos + n])
        pos += n
    elif op == RUN:
        start = pos
        _, pos = decode_program_prefix(bits, pos)
        args = (bits[start:pos],)
    else:
        raise EncodingError(f"unknown context op {op}")
    return CtxProgram(from_end, index, op, args), pos


def parse(bits: str) -> CtxProgram:
    prog, end = parse_prefix(bits)
    if end != len(bits):
        raise EncodingError("trailing bits after context program")
    return prog


def _traj(bits: str) -> Optional[Trajectory]:
    try:
        return decode_trajectory(bits)
    except EncodingError:
        return None


def _extend(traj: Trajectory, period: int, count: int) -> Optional[Trajectory]:
    n = len(traj)
    if period < 1 or period > n:
        return None
    tail = traj.states[n - period:]
    return traj.extend(tail[k % period] for k in range(count))


def execute(program, components: Sequence[str],
            step_budget: int = DEFAULT_STEPS) -> Optional[str]:
    """Output of a context program, or None when it fails on this context."""
    prog = parse(program) if isinstance(program, str) else program
    n = len(components)
    if prog.index > n:
        return None
    comp = components[n - prog.index] if prog.from_end else components[prog.index - 1]
    if prog.op == COPY:
        return comp
    if prog.op == PATCH:
        pos, bits = prog.args
        if pos + len(bits) > len(comp):
            return None
        mid = "".join("1" if a != b else "0" for a, b in zip(comp[pos:pos + len(bits)], bits))
        return comp[:pos] + mid + comp[pos + len(bits):]
    if prog.op == RUN:
        res = run(prog.args[0], comp, step_budget)
        return res.output if res.halted else None
    traj = _traj(comp)
    if traj is None:
        return None
    if prog.op == EXTEND:
        out = _extend(traj, *prog.args)
    elif prog.op == SYNC:
        period, j = prog.args
        if j > n:
            return None
        other = _traj(components[j - 1])
        if other is None or other.t1 < traj.t1:
            return None
        out = _extend(traj, period, other.t1 - traj.t1)
    else:
        lit, count = prog.args
        w = traj.width
        if w == 0 or len(lit) % w:
            return None
        cyc = [lit[i:i + w] for i in range(0, len(lit), w)]
        out = traj.extend(cyc[k % len(cyc)] for k in range(count))
    return None if out is None else encode_trajectory(out)


# --------------------------------------------------------------------------
# Search

@dataclass(frozen=True)
class SearchResult:
    bits: Optional[str]
    cap: int
    exhaustive: bool
    programs_bound: int

    @property
    def found(self) -> bool:
        return self.bits is not None

    @property
    def length(self) -> Optional[int]:
        return None if self.bits is None else len(self.bits)


def _better(a: Optional[str], b: str) -> str:
    if a is None or (len(b), b) < (len(a), a):
        return b
    return a


def _bodies(comp: str, target: str, components: Sequence[str], room: int,
            step_budget: int, run_cap: int) -> Iterator[str]:
    """Every op body of at most ``room`` bits mapping ``comp`` to ``target``.

    Non-RUN ops are solved directly: their output determines the arguments
    up to the choices enumerated here, and any argument left free (a CYCLE
    literal beyond the appended states, a PATCH window wider than the
    difference) only makes the program longer than an enumerated one.
    """
    g = gamma_encode
    if comp == target:
        yield g(COPY)
    if len(comp) == len(target) and comp:
        diff = [i for i, (a, b) in enumerate(zip(comp, target)) if a != b]
        if diff:
            first, last = diff[0], diff[-1]
            for pos in range(first + 1):
                span = last - pos + 1
                if gamma_len(PATCH) + gamma_len(pos + 1) + gamma_len(span) + span > room:
                    continue
                bits = "".join("1" if a != b else "0"
                               for a, b in zip(comp[pos:last + 1], target[pos:last + 1]))
                yield g(PATCH) + g(pos + 1) + g(span) + bits
        else:
            yield g(PATCH) + g(1) + g(1) + "0"
    src, dst = _traj(comp), _traj(target)
    if src is not None and dst is not None and src.width == dst.width \
            and src.t0 == dst.t0 and len(dst) >= len(src) \
            and dst.states[:len(src)] == src.states:
        n = len(src)
        app = dst.states[n:]
        cnt = len(app)
        periods = [p for p in range(1, n + 1)
                   if all(app[k] == src.states[n - p + k % p] for k in range(cnt))]
        for p in periods:
            yield g(EXTEND) + g(p) + g(cnt + 1)
            for j, other in enumerate(components, start=1):
                o = _traj(other)
                if o is not None and o.t1 - src.t1 == cnt:
                    yield g(SYNC) + g(p) + g(j)
        w = src.width
        if w:
            lits = []
            if cnt == 0:
                lits.append("0" * w)
            for L in range(1, cnt + 1):
                if gamma_len(CYCLE) + gamma_len(L * w) + L * w > room:
                    break
                if all(app[k] == app[k % L] for k in range(cnt)):
                    lits.append("".join(app[:L]))
            for lit in lits:
                yield g(CYCLE) + g(len(lit)) + lit + g(cnt + 1)
    tm_room = min(room - gamma_len(RUN), run_cap)
    if tm_room >= 8:
        from .complexity import programs_up_to
        for prog in programs_up_to(tm_room):
            res = run(prog, comp, step_budget)
            if res.halted and res.output == target:
                yield g(RUN) + prog.bits
                break  # programs come in (length, lex) order


def search(target: str, components: Sequence[str], cap: int,
           step_budget: int = DEFAULT_STEPS, run_cap: int = DEFAULT_RUN_CAP) -> SearchResult:
    """Shortest context program (ties: lexicographic) of at most ``cap`` bits.

    Exhaustive when every RUN body that fits under ``cap`` was tried, i.e.
    ``cap - RUN_OVERHEAD <= run_cap``.
    """
    best: Optional[str] = None
    n = len(components)
    for k, comp in enumerate(components, start=1):
        for from_end, idx in ((False, k), (True, n - k + 1)):
            sel = ("1" if from_end else "0") + gamma_encode(idx)
            room = cap - len(sel)
            if room < 1:
                continue
            for body in _bodies(comp, target, components, room, step_budget, run_cap):
                cand = sel + body
                if len(cand) <= cap:
                    best = _better(best, cand)
    exhaustive = cap - RUN_OVERHEAD <= run_cap
    return SearchResult(best, cap, exhaustive, 2 ** (cap + 1) - 1)


# --------------------------------------------------------------------------
# Brute-force oracle

def iter_valid(max_len: int) -> Iterator[str]:
    """Every valid context program of at most ``max_len`` bits, by (length, lex)."""
    for n in range(1, max_len + 1):
        for tup in product("01", repeat=n):
            bits = "".join(tup)
            try:
                parse(bits)
            except EncodingError:
                continue
            yield bits


def brute_force_search(target: str, components: Sequence[str], cap: int,
                       step_budget: int = DEFAULT_STEPS) -> Optional[str]:
    for bits in iter_valid(cap):
        if execute(bits, components, step_budget) == target:
            return bits
    return None

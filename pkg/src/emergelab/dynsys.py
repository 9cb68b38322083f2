"""Finite discrete deterministic dynamical systems (FDDDS).

States are fixed-width bit strings for cellular automata and recorded
systems; the TM compiler uses :class:`Config` tuples that still serialize to
a fixed width, so every trajectory shares one canonical encoding.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Optional, Sequence

from .errors import DomainError, EncodingError
from .refmachine import (Program, as_program, check_bits, gamma_decode,
                         gamma_encode, gamma_len, next_width, pair_encode)


class Fddds:
    """Evolution rule ``(state, env, t) -> state`` on a finite state space."""

    width: int = 0
    env_states: Optional[frozenset] = None

    def step(self, state, env=None, t: int = 0):
        raise NotImplementedError

    def contains(self, state) -> bool:
        return isinstance(state, str) and len(state) == self.width and not state.strip("01")

    def check_env(self, env):
        if self.env_states is None:
            if env is not None:
                raise DomainError("this system has a single (implicit) environment state")
        elif env not in self.env_states:
            raise DomainError(f"environment state {env!r} is outside E_S")

    def encode_state(self, state) -> str:
        return state

    def decode_state(self, bits: str):
        return bits


# --------------------------------------------------------------------------
# Elementary cellular automata

@dataclass(frozen=True)
class EcaSpec:
    rule: int
    width: int
    boundary: str = "periodic"  # periodic | fixed | environment
    fixed: tuple = (0, 0)

    def __post_init__(self):
        if not 0 <= self.rule <= 255:
            raise DomainError("ECA rule must be in 0..255")
        if self.width < 1:
            raise DomainError("ECA width must be >= 1")
        if self.boundary not in ("periodic", "fixed", "environment"):
            raise DomainError(f"unknown boundary {self.boundary!r}")


def eca_apply(rule: int, state: str, left: Optional[str] = None,
              right: Optional[str] = None) -> str:
    """One synchronous update; ``left``/``right`` default to periodic wrap."""
    n = len(state)
    padded = (state[-1] if left is None else left) + state + (state[0] if right is None else right)
    out = []
    for i in range(n):
        idx = (padded[i] == "1") * 4 + (padded[i + 1] == "1") * 2 + (padded[i + 2] == "1")
        out.append("1" if (rule >> idx) & 1 else "0")
    return "".join(out)


class Eca(Fddds):
    def __init__(self, spec: EcaSpec):
        self.spec = spec
        self.width = spec.width
        if spec.boundary == "environment":
            self.env_states = frozenset({"00", "01", "10", "11"})

    def __repr__(self):
        return f"Eca(rule={self.spec.rule}, width={self.width}, {self.spec.boundary})"

    def step(self, state, env=None, t=0):
        if not self.contains(state):
            raise DomainError(f"{state!r} is not a width-{self.width} state")
        self.check_env(env)
        spec = self.spec
        if spec.boundary == "periodic":
            return eca_apply(spec.rule, state)
        if spec.boundary == "fixed":
            return eca_apply(spec.rule, state, str(spec.fixed[0]), str(spec.fixed[1]))
        return eca_apply(spec.rule, state, env[0], env[1])


def eca(rule: int, width: int, boundary: str = "periodic") -> Eca:
    return Eca(EcaSpec(rule, width, boundary))


class RecordedSystem(Fddds):
    """Time-dependent rule that replays a fixed state sequence.

    Past the recording (or off the recorded state) the state is held.
    """

    def __init__(self, states: Sequence[str], t0: int = 0):
        if not states:
            raise DomainError("a recorded system needs at least one state")
        self.states = tuple(states)
        self.t0 = t0
        self.width = len(states[0])
        if any(len(s) != self.width for s in self.states):
            raise DomainError("recorded states must share one width")

    def step(self, state, env=None, t=0):
        if not self.contains(state):
            raise DomainError("state outside X_S")
        i = t - self.t0
        if 0 <= i < len(self.states) - 1 and self.states[i] == state:
            return self.states[i + 1]
        return state


# --------------------------------------------------------------------------
# Trajectories

@dataclass(frozen=True)
class Trajectory:
    t0: int
    states: tuple
    width: int
    provenance: dict = field(default_factory=dict, compare=False, hash=False)

    def __len__(self):
        return len(self.states)

    @property
    def t1(self) -> int:
        return self.t0 + len(self.states) - 1

    def at(self, t: int):
        return self.states[t - self.t0]

    def segment(self, a: int, b: int) -> "Trajectory":
        if not (self.t0 <= a and b <= self.t1 and a <= b + 1):
            raise DomainError(f"segment [{a},{b}] outside [{self.t0},{self.t1}]")
        return Trajectory(a, self.states[a - self.t0:b - self.t0 + 1], self.width,
                          dict(self.provenance))

    def extend(self, states: Sequence) -> "Trajectory":
        return Trajectory(self.t0, self.states + tuple(states), self.width,
                          dict(self.provenance))


def trajectory(sys: Fddds, s0, env_seq=None, t0: int = 0, t1: int = 0) -> Trajectory:
    """Iterate ``sys`` from ``s0`` at time ``t0`` through ``t1`` inclusive.

    ``env_seq[i]`` is the environment state for the step ``t0+i -> t0+i+1``.
    """
    if t1 < t0:
        raise DomainError("t1 must be >= t0")
    steps = t1 - t0
    if env_seq is not None and len(env_seq) < steps:
        raise DomainError(f"environment sequence covers {len(env_seq)} of {steps} steps")
    if not sys.contains(s0):
        raise DomainError("initial state outside X_S")
    states = [s0]
    s = s0
    for i in range(steps):
        s = sys.step(s, None if env_seq is None else env_seq[i], t0 + i)
        states.append(s)
    return Trajectory(t0, tuple(states), sys.width, {"system": repr(sys)})


def encode_trajectory(traj: Trajectory, sys: Optional[Fddds] = None) -> str:
    """gamma(width+1) gamma(length+1) gamma(t0+1) then fixed-width state blocks."""
    enc = sys.encode_state if sys is not None else (lambda s: s)
    blocks = [enc(s) for s in traj.states]
    if any(len(b) != traj.width for b in blocks):
        raise DomainError("state block width does not match the trajectory width")
    return (gamma_encode(traj.width + 1) + gamma_encode(len(blocks) + 1)
            + gamma_encode(traj.t0 + 1) + "".join(blocks))


def decode_trajectory_prefix(bits: str, pos: int = 0) -> tuple[Trajectory, int]:
    w1, pos = gamma_decode(bits, pos)
    n1, pos = gamma_decode(bits, pos)
    t1, pos = gamma_decode(bits, pos)
    width, n = w1 - 1, n1 - 1
    end = pos + width * n
    if end > len(bits):
        raise EncodingError("truncated trajectory payload")
    states = tuple(bits[pos + i * width:pos + (i + 1) * width] for i in range(n))
    return Trajectory(t1 - 1, states, width), end


def decode_trajectory(bits: str, sys: Optional[Fddds] = None) -> Trajectory:
    traj, end = decode_trajectory_prefix(bits)
    if end != len(bits):
        raise EncodingError("trailing bits after trajectory")
    if sys is not None:
        traj = replace(traj, states=tuple(sys.decode_state(s) for s in traj.states))
    return traj


def header_bits(width: int, length: int, t0: int) -> int:
    return gamma_len(width + 1) + gamma_len(length + 1) + gamma_len(t0 + 1)


def write_trajectory_csv(traj: Trajectory, path=None, seed=None,
                         sys: Optional[Fddds] = None) -> str:
    buf = io.StringIO()
    if seed is not None:
        buf.write(f"# seed={seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "state_bits"])
    enc = sys.encode_state if sys is not None else (lambda s: s)
    for i, s in enumerate(traj.states):
        w.writerow([traj.t0 + i, enc(s)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_trajectory_csv(path_or_text) -> tuple[Trajectory, Optional[int]]:
    text = path_or_text
    if isinstance(path_or_text, Path) or "\n" not in str(path_or_text):
        text = Path(path_or_text).read_text()
    seed = None
    rows = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key == "seed":
                seed = int(val)
            continue
        rows.append(line)
    reader = csv.DictReader(rows)
    recs = [(int(r["t"]), r["state_bits"]) for r in reader]
    if not recs:
        return Trajectory(0, (), 0), seed
    states = tuple(s for _, s in recs)
    return Trajectory(recs[0][0], states, len(states[0])), seed


# --------------------------------------------------------------------------
# Recurrence

def recurrence_time(sys: Fddds, s0, env=None) -> tuple[int, int]:
    """Least (preperiod, period) with S_{p+c} = S_p, by Brent's algorithm."""
    f = lambda s: sys.step(s, env)
    power = lam = 1
    tortoise = s0
    hare = f(s0)
    while tortoise != hare:
        if power == lam:
            tortoise = hare
            power *= 2
            lam = 0
        hare = f(hare)
        lam += 1
    tortoise = hare = s0
    for _ in range(lam):
        hare = f(hare)
    mu = 0
    while tortoise != hare:
        tortoise = f(tortoise)
        hare = f(hare)
        mu += 1
    return mu, lam


def sequence_recurrence(seq: Sequence, known_pre: int, known_period: int) -> tuple[int, int]:
    """Least (p, c) with seq[i+c] == seq[i] for all i >= p.

    ``seq`` must be produced by a process that is periodic from
    ``known_pre`` with period ``known_period`` and cover two periods past it.
    """
    need = known_pre + 2 * known_period
    if len(seq) < need:
        raise DomainError(f"sequence of length {len(seq)} shorter than {need}")
    period = known_period
    for c in range(1, known_period + 1):
        if known_period % c == 0 and all(
                seq[i + c] == seq[i] for i in range(known_pre, known_pre + known_period)):
            period = c
            break
    p = known_pre
    while p > 0 and seq[p - 1] == seq[p - 1 + period]:
        p -= 1
    return p, period


# --------------------------------------------------------------------------
# TM -> FDDDS compiler

@dataclass(frozen=True)
class Config:
    inp: str
    q: int
    head: int
    tape: str
    lo: Optional[int]
    hi: Optional[int]
    clock: int


def _bits_for(n_values: int) -> int:
    return max(1, (n_values - 1).bit_length())


class CompiledTm(Fddds):
    """Interpreter configurations of one program as an FDDDS.

    Each step is one interpreter step.  A halted configuration steps back to
    the initial configuration on the same input (the non-halting reset
    wrapper); a configuration whose cycle used the whole step budget without
    halting is a fixed point.  With ``suffix`` set, the condition placed on
    the tape is ``pair_encode(inp, suffix)``.
    """

    def __init__(self, program, step_budget: int, capacity: int,
                 suffix: Optional[str] = None):
        self.program = as_program(program)
        self.step_budget = step_budget
        self.capacity = capacity
        self.suffix = suffix
        d = self.program.data
        max_cond = capacity if suffix is None else gamma_len(capacity + 1) + capacity + len(suffix)
        self.margin = step_budget
        self.cells = len(d) + max_cond + 2 * step_budget + 1
        self._len_bits = _bits_for(capacity + 1)
        self._q_bits = next_width(self.program.tm.states)
        self._pos_bits = _bits_for(self.cells + 1)
        self._clock_bits = _bits_for(step_budget + 1)
        self.width = (capacity + self._len_bits + self._q_bits + self._pos_bits
                      + self.cells + 2 * self._pos_bits + self._clock_bits)

    def __repr__(self):
        return f"CompiledTm({self.program.hex()}, budget={self.step_budget})"

    def condition(self, inp: str) -> str:
        return inp if self.suffix is None else pair_encode(inp, self.suffix)

    def initial(self, inp: str = "") -> Config:
        check_bits(inp, "input")
        if len(inp) > self.capacity:
            raise DomainError(f"input of {len(inp)} bits exceeds capacity {self.capacity}")
        body = self.program.data + self.condition(inp)
        tape = "0" * self.margin + body + "0" * (self.cells - self.margin - len(body))
        return Config(inp, 1, 0, tape, None, None, 0)

    def contains(self, state) -> bool:
        return (isinstance(state, Config) and len(state.tape) == self.cells
                and len(state.inp) <= self.capacity)

    def step(self, state: Config, env=None, t=0) -> Config:
        if not self.contains(state):
            raise DomainError("configuration outside this compiled system")
        if state.q == 0:
            return self.initial(state.inp)
        if state.clock >= self.step_budget:
            return state
        idx = state.head + self.margin
        sym = 1 if state.tape[idx] == "1" else 0
        w, m, nxt = self.program.tm.entry(state.q, sym)
        tape = state.tape[:idx] + str(w) + state.tape[idx + 1:]
        lo = state.head if state.lo is None else min(state.lo, state.head)
        hi = state.head if state.hi is None else max(state.hi, state.head)
        return Config(state.inp, nxt, state.head + (1 if m else -1), tape, lo, hi,
                      state.clock + 1)

    def is_cycle_end(self, state: Config) -> bool:
        return state.q == 0

    def output(self, state: Config) -> str:
        """Output window of a halted configuration (same convention as ``run``)."""
        if state.q != 0:
            raise DomainError("configuration has not halted")
        d = len(self.program.data)
        cond = len(self.condition(state.inp))
        lo, hi = state.lo, state.hi
        if cond:
            lo, hi = min(lo, d), max(hi, d + cond - 1)
        return state.tape[lo + self.margin:hi + self.margin + 1]

    def encode_state(self, state: Config) -> str:
        def fixed(v, nbits):
            return format(v, f"0{nbits}b")

        opt = lambda v: 0 if v is None else v + self.margin + 1
        return (fixed(len(state.inp), self._len_bits) + state.inp.ljust(self.capacity, "0")
                + fixed(state.q, self._q_bits) + fixed(state.head + self.margin, self._pos_bits)
                + state.tape + fixed(opt(state.lo), self._pos_bits)
                + fixed(opt(state.hi), self._pos_bits) + fixed(state.clock, self._clock_bits))

    def decode_state(self, bits: str) -> Config:
        pos = 0

        def take(n):
            nonlocal pos
            out = bits[pos:pos + n]
            pos += n
            return out

        n_in = int(take(self._len_bits), 2)
        inp = take(self.capacity)[:n_in]
        q = int(take(self._q_bits), 2)
        head = int(take(self._pos_bits), 2) - self.margin
        tape = take(self.cells)
        lo = int(take(self._pos_bits), 2)
        hi = int(take(self._pos_bits), 2)
        clock = int(take(self._clock_bits), 2)
        back = lambda v: None if v == 0 else v - self.margin - 1
        return Config(inp, q, head, tape, back(lo), back(hi), clock)


def compile_tm_to_fddds(program, condition: str = "", step_budget: int = 1000) -> tuple[CompiledTm, Config]:
    """Compile a program on a fixed condition; returns (system, initial config)."""
    sys = CompiledTm(program, step_budget, capacity=len(condition))
    return sys, sys.initial(condition)


def cycle_outputs(sys: CompiledTm, start: Config, steps: int) -> list[tuple[int, str]]:
    """(time, output) for every halted configuration within ``steps`` steps."""
    out = []
    s = start
    for t in range(steps + 1):
        if sys.is_cycle_end(s):
            out.append((t, sys.output(s)))
        s = sys.step(s)
    return out


# --------------------------------------------------------------------------
# Fixtures

def gen_incompressible_trajectory(width: int, length: int, rng, t0: int = 0) -> Trajectory:
    """i.i.d. uniform states; incompressible with overwhelming probability."""
    states = tuple(format(rng.getrandbits(width), f"0{width}b") if width else ""
                   for _ in range(length))
    return Trajectory(t0, states, width, {"generator": "iid-uniform"})

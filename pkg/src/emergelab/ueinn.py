"""Coupled automata: rule perturbations driven by an environment ECA.

An isolated atlas records the recurrence of every (rule, initial state) of
a given width.  A coupled system shows unbounded evolution (UE) when its
recurrence time exceeds every isolated one, and innovation (INN) when its
periodic window appears in no isolated periodic part.
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Mapping, Optional, Sequence, Union

from .dynsys import Eca, EcaSpec, eca_apply, recurrence_time, sequence_recurrence
from .errors import DomainError, HorizonError
from .refmachine import gamma_len
from . import ctxmachine

CYCLE_OVERHEAD = 1 + gamma_len(1) + gamma_len(ctxmachine.CYCLE)
MAX_ATLAS_WIDTH = 5


def all_states(width: int) -> list[str]:
    return [format(i, f"0{width}b") for i in range(2 ** width)]


def cycle_of(rule: int, s0: str, pre: int, per: int) -> tuple:
    s = s0
    for _ in range(pre):
        s = eca_apply(rule, s)
    out = []
    for _ in range(per):
        out.append(s)
        s = eca_apply(rule, s)
    return tuple(out)


def canonical_rotation(cyc: Sequence[str]) -> tuple:
    return min(tuple(cyc[i:]) + tuple(cyc[:i]) for i in range(len(cyc)))


@dataclass(frozen=True)
class IsolatedAtlas:
    width: int
    records: dict = field(hash=False)  # (rule, s0) -> (preperiod, period)
    cycles: frozenset = field(hash=False)  # canonical rotations of periodic parts

    @property
    def t_p(self) -> int:
        return max(p + c for p, c in self.records.values())

    @property
    def states(self) -> int:
        return 2 ** self.width

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rule", "s0_bits", "preperiod", "period"])
        for (rule, s0), (p, c) in sorted(self.records.items()):
            w.writerow([rule, s0, p, c])
        return buf.getvalue()

    def sha256(self) -> str:
        return hashlib.sha256(self.to_csv().encode()).hexdigest()


def build_atlas(width: int) -> IsolatedAtlas:
    """Exact recurrence of all 256 rules x 2**width periodic initial states."""
    if not 1 <= width <= MAX_ATLAS_WIDTH:
        raise DomainError(f"atlas width must be in 1..{MAX_ATLAS_WIDTH}")
    records = {}
    cycles = set()
    for rule in range(256):
        sys = Eca(EcaSpec(rule, width))
        for s0 in all_states(width):
            pre, per = recurrence_time(sys, s0)
            records[(rule, s0)] = (pre, per)
            cycles.add(canonical_rotation(cycle_of(rule, s0, pre, per)))
    return IsolatedAtlas(width, records, frozenset(cycles))


# --------------------------------------------------------------------------
# Coupled runs

Coupling = Union[Mapping[str, int], Callable[[str], int]]


@dataclass(frozen=True)
class CoupledSpec:
    width: int
    env: EcaSpec
    coupling: tuple  # rule number for every environment state, in state order

    def __post_init__(self):
        if len(self.coupling) != 2 ** self.env.width:
            raise DomainError("coupling must give a rule for every environment state")
        if any(not 0 <= r <= 255 for r in self.coupling):
            raise DomainError("coupling rules must be in 0..255")

    @classmethod
    def from_map(cls, width: int, env: EcaSpec, g: Coupling) -> "CoupledSpec":
        f = g if callable(g) else g.__getitem__
        return cls(width, env, tuple(f(e) for e in all_states(env.width)))

    def rule_for(self, env_state: str) -> int:
        return self.coupling[int(env_state, 2)]

    def describe(self) -> dict:
        return {"width": self.width, "env_rule": self.env.rule, "env_width": self.env.width,
                "coupling": list(self.coupling)}


def low_bits_coupling(rules: Sequence[int], env_width: int, bits: int = 1) -> tuple:
    """Rule indexed by the low ``bits`` bits of the environment state."""
    return tuple(rules[int(e[-bits:], 2)] for e in all_states(env_width))


@dataclass(frozen=True)
class CoupledRun:
    a: tuple
    e: tuple


def coupled_run(spec: CoupledSpec, s0: str, e0: str, horizon: int) -> CoupledRun:
    """A_{t+1} = rule[g(E_t)](A_t); E evolves by its own rule."""
    if horizon < 1:
        raise DomainError("horizon must be >= 1")
    if len(s0) != spec.width or len(e0) != spec.env.width:
        raise DomainError("initial states have the wrong width")
    env = Eca(spec.env)
    a, e = [s0], [e0]
    for _ in range(horizon):
        a.append(eca_apply(spec.rule_for(e[-1]), a[-1]))
        e.append(env.step(e[-1]))
    return CoupledRun(tuple(a), tuple(e))


def isolated_run(rule: int, s0: str, horizon: int) -> CoupledRun:
    a = [s0]
    for _ in range(horizon):
        a.append(eca_apply(rule, a[-1]))
    return CoupledRun(tuple(a), tuple("" for _ in a))


# --------------------------------------------------------------------------
# Detection

def _first_repeat(seq: Sequence) -> Optional[tuple[int, int]]:
    seen = {}
    for i, x in enumerate(seq):
        if x in seen:
            return seen[x], i - seen[x]
        seen[x] = i
    return None


def a_recurrence(run_: CoupledRun) -> tuple[int, int]:
    """Least (p, c) such that the A-sequence is periodic from p with period c.

    The joint (A, E) state determines the future, so its first repeat bounds
    the search; the A-sequence must cover one more joint period to confirm.
    """
    joint = list(zip(run_.a, run_.e))
    rep = _first_repeat(joint)
    if rep is None:
        raise HorizonError(f"no joint recurrence within {len(joint) - 1} steps")
    pre, per = rep
    if len(run_.a) < pre + 2 * per + 1:
        raise HorizonError("horizon too short to confirm the recurrence")
    return sequence_recurrence(run_.a, pre, per)


def periodic_window(run_: CoupledRun) -> tuple:
    p, c = a_recurrence(run_)
    return tuple(run_.a[p:p + c])


def detect_ue(run_: CoupledRun, atlas: IsolatedAtlas) -> bool:
    p, c = a_recurrence(run_)
    return p + c > atlas.t_p


def window_in_cycle(window: Sequence[str], cyc: Sequence[str]) -> bool:
    """Cyclic containment: some rotation of ``window`` is a run of ``cyc``'s periodic part."""
    if len(window) > len(cyc):
        return False
    doubled = tuple(cyc) + tuple(cyc)
    n = len(window)
    w = tuple(window)
    return any(doubled[i:i + n] == w for i in range(len(cyc)))


def detect_inn(run_: CoupledRun, atlas: IsolatedAtlas) -> bool:
    win = periodic_window(run_)
    return not any(window_in_cycle(win, cyc) for cyc in atlas.cycles)


# --------------------------------------------------------------------------
# c_e bound

@dataclass(frozen=True)
class CeBound:
    """Length budget of the index-expanding program p' and its parts.

    p' selects the delivered trajectory, then cycles a literal of at most
    t_p states for t_r - 1 further steps.
    """

    overhead: int
    literal_bits: int
    literal_header: int
    count_field: int
    log2_tr: float

    @property
    def bits(self) -> int:
        return self.overhead + self.literal_bits + self.literal_header + self.count_field

    @property
    def leading(self) -> float:
        return float(self.literal_bits)


def ce_bound(atlas: IsolatedAtlas, t_r: int) -> CeBound:
    if t_r < 1:
        raise DomainError("t_r must be >= 1")
    lit = atlas.t_p * atlas.width  # log2(|X_S| ** t_p)
    return CeBound(CYCLE_OVERHEAD, lit, gamma_len(lit), gamma_len(t_r), math.log2(t_r))


def ce_bound_formula(t_p: int, states: int, t_r: int) -> float:
    """Continuous form: log2(|X_S|^t_p) + log2(t_r)."""
    return t_p * math.log2(states) + math.log2(t_r)


def cycle_certificate(run_: CoupledRun, t: int, t_end: int) -> Optional[str]:
    """p' for the target A_{t-k}..A_{t_end} given the delivered A_{t-k}..A_{t+1}.

    Exists whenever A is already periodic at t+2.
    """
    p, c = a_recurrence(run_)
    if t + 2 < p:
        return None
    count = t_end - t - 1
    if count < 0 or t_end >= len(run_.a):
        raise DomainError("target end outside the run")
    L = min(c, max(count, 1))
    lit_states = [run_.a[t + 2 + i] if t + 2 + i < len(run_.a) else run_.a[p + (t + 2 + i - p) % c]
                  for i in range(L)]
    return ctxmachine.encode(False, 1, ctxmachine.CYCLE, ("".join(lit_states), count))


# --------------------------------------------------------------------------
# Coupling search

@dataclass(frozen=True)
class SearchReport:
    found: Optional[dict]
    searched: int
    space: dict


def confirmed_run(spec: CoupledSpec, s0: str, e0: str) -> CoupledRun:
    """Coupled run just long enough for :func:`a_recurrence` to succeed."""
    bound = 2 ** spec.width * 2 ** spec.env.width
    run_ = coupled_run(spec, s0, e0, bound)
    pre, per = _first_repeat(list(zip(run_.a, run_.e)))
    need = pre + 2 * per
    if need > bound:
        run_ = coupled_run(spec, s0, e0, need)
    return CoupledRun(run_.a[:need + 1], run_.e[:need + 1])


def _fast_recurrence(rule_seq_pre: Sequence[int], rule_seq_cyc: Sequence[int],
                     table: Sequence[Sequence[int]], s0: int) -> tuple[tuple[int, int], list[int]]:
    """Joint-cycle walk on integer states; returns ((p, c) of A, A-sequence)."""
    a = [s0]
    seen = {}
    env_pre, env_per = len(rule_seq_pre), len(rule_seq_cyc)
    t = 0
    while True:
        phase = t if t < env_pre else env_pre + (t - env_pre) % env_per
        key = (a[-1], phase)
        if key in seen:
            pre, per = seen[key], t - seen[key]
            break
        seen[key] = t
        r = rule_seq_pre[t] if t < env_pre else rule_seq_cyc[(t - env_pre) % env_per]
        a.append(table[r][a[-1]])
        t += 1
    while len(a) < pre + 2 * per + 1:
        t = len(a) - 1
        r = rule_seq_pre[t] if t < env_pre else rule_seq_cyc[(t - env_pre) % env_per]
        a.append(table[r][a[-1]])
    return sequence_recurrence(a, pre, per), a


def coupling_search(atlas: IsolatedAtlas, env_rule: int = 30, env_width: int = 3,
                    e0: Optional[str] = None, rules: Sequence[int] = tuple(range(256)),
                    coupling_bits: int = 1, limit: Optional[int] = None) -> SearchReport:
    """Scan low-bit couplings over ``rules`` and all initial system states.

    Stops at the first run that is both UE and INN; every hit is re-checked
    with the string-level detectors.
    """
    width = atlas.width
    e0 = e0 or ("0" * (env_width - 1) + "1")
    env = EcaSpec(env_rule, env_width)
    env_sys = Eca(env)
    ep, ec = recurrence_time(env_sys, e0)
    e_seq = [e0]
    for _ in range(ep + ec - 1):
        e_seq.append(env_sys.step(e_seq[-1]))
    states = all_states(width)
    table = [[int(eca_apply(r, s), 2) for s in states] for r in range(256)]
    cycles = atlas.cycles
    searched = 0
    space = {"env_rule": env_rule, "env_width": env_width, "e0": e0,
             "coupling_bits": coupling_bits, "rules": [min(rules), max(rules)],
             "rule_count": len(rules), "initial_states": 2 ** width}
    for combo in product(rules, repeat=2 ** coupling_bits):
        coupling = low_bits_coupling(combo, env_width, coupling_bits)
        rseq = [coupling[int(e, 2)] for e in e_seq]
        for s0 in range(2 ** width):
            searched += 1
            (p, c), a = _fast_recurrence(rseq[:ep], rseq[ep:], table, s0)
            if p + c > atlas.t_p:
                win = tuple(states[x] for x in a[p:p + c])
                if not any(window_in_cycle(win, cyc) for cyc in cycles):
                    spec = CoupledSpec(width, env, coupling)
                    run_ = confirmed_run(spec, states[s0], e0)
                    assert detect_ue(run_, atlas) and detect_inn(run_, atlas)
                    return SearchReport({"spec": spec.describe(), "s0": states[s0], "e0": e0,
                                         "preperiod": p, "period": c}, searched, space)
            if limit is not None and searched >= limit:
                return SearchReport(None, searched, space)
    return SearchReport(None, searched, space)

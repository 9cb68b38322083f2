"""Formal observer systems, observation checks and emergence verdicts.

An observer is an OTM (a reference-machine program reading the pair
``<w, FAT>``) plus its FAT and the constants c_I, c_O, c_e.  Its FOS is the
compiled, self-resetting interpreter of that OTM.

Conditional searches run on the context machine (:mod:`ctxmachine`) over the
tuple ``(w, encoded observer trajectory, OTM bits, FAT payloads...)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence, Union

from . import complexity, ctxmachine
from .dynsys import (CompiledTm, Config, Fddds, Trajectory, encode_trajectory,
                     header_bits, trajectory)
from .errors import (BoundaryError, CapError, ChannelError, DomainError,
                     PerfectCheckTimeout)
from .perturb import AlgorithmicPerturbation
from .refmachine import (Program, as_program, copy_program, list_decode,
                         list_encode, pair_decode, pair_encode, run,
                         tuple_encode)

DEFAULT_C_I = 8
DEFAULT_C_O = 8
DEFAULT_C_E = 16
DEFAULT_OTM_BUDGET = 16
DEFAULT_CAPACITY = 96
INF = math.inf


# --------------------------------------------------------------------------
# FAT and observers

@dataclass(frozen=True)
class Fat:
    """Opaque record store: a list of (key, payload) pairs."""

    records: tuple = ()

    @property
    def bits(self) -> str:
        return list_encode(pair_encode(k, p) for k, p in self.records)

    @classmethod
    def decode(cls, bits: str) -> "Fat":
        items, end = list_decode(bits)
        if end != len(bits):
            raise DomainError("trailing bits after FAT")
        return cls(tuple(pair_decode(x) for x in items))

    def extend(self, payload: str, key: str = "") -> "Fat":
        return Fat(self.records + ((key, payload),))

    def payloads(self) -> list[str]:
        return [p for _, p in self.records]


@dataclass(frozen=True)
class ObserverSystem:
    otm: Program = field(default_factory=copy_program)
    fat: Fat = field(default_factory=Fat)
    c_I: float = DEFAULT_C_I
    c_O: float = DEFAULT_C_O
    c_e: float = DEFAULT_C_E
    step_budget: int = DEFAULT_OTM_BUDGET
    capacity: int = DEFAULT_CAPACITY

    def __post_init__(self):
        object.__setattr__(self, "otm", as_program(self.otm))

    @property
    def threshold(self) -> float:
        return self.c_I + self.c_O + self.c_e

    def compiled(self) -> CompiledTm:
        return CompiledTm(self.otm, self.step_budget, self.capacity, suffix=self.fat.bits)

    def constants(self) -> dict:
        return {"c_I": self.c_I, "c_O": self.c_O, "c_e": self.c_e}


def extend_fat(obs: ObserverSystem, certificate: str, key: str = "") -> ObserverSystem:
    """Same observer with ``certificate`` appended to its FAT."""
    return replace(obs, fat=obs.fat.extend(certificate, key))


def _cycle(fos: CompiledTm, w0: str) -> list[Config]:
    """One simulation cycle on ``w0``: initial .. halted configuration."""
    cyc = [fos.initial(w0)]
    while not fos.is_cycle_end(cyc[-1]):
        nxt = fos.step(cyc[-1])
        if nxt == cyc[-1]:
            raise BoundaryError("the OTM does not halt on its idle input, so it has no cycle boundary")
        cyc.append(nxt)
    return cyc


def observer_trajectory(obs: ObserverSystem, t: int, w: Optional[str] = None,
                        m: int = 1, w0: str = "", align: bool = True) -> Trajectory:
    """O_0..O_t on idle input ``w0``; with ``w`` set, inject it at ``t`` and run to ``t+m``.

    With ``align`` the idle observer is started at the cycle phase that
    puts a halted configuration at ``t`` (the FOS is free to start anywhere
    on its own recurrent trajectory).  Without it the observer starts from
    the initial configuration and injection needs ``t`` to be a boundary.
    """
    fos = obs.compiled()
    if align:
        cyc = _cycle(fos, w0)
        period = len(cyc)
        off = (len(cyc) - 1 - t) % period
        states = [cyc[(i + off) % period] for i in range(t + 1)]
    else:
        states = [fos.initial(w0)]
        for i in range(t):
            states.append(fos.step(states[-1]))
    if w is not None:
        if not fos.is_cycle_end(states[-1]):
            raise BoundaryError(f"observer is mid-cycle at t={t}; inject only at a halted configuration")
        states.append(fos.initial(w))
        for i in range(m - 1):
            states.append(fos.step(states[-1]))
    return Trajectory(0, tuple(states), fos.width, {"observer": repr(fos)})


def inject_input(obs: ObserverSystem, t: int, w: str, horizon: int,
                 w0: str = "", align: bool = False) -> Trajectory:
    """Observer trajectory through ``horizon`` with ``w`` injected after ``t``."""
    if horizon <= t:
        raise DomainError("horizon must be after the injection time")
    if len(w) > obs.capacity:
        raise ChannelError(f"input of {len(w)} bits exceeds observer capacity {obs.capacity}")
    return observer_trajectory(obs, t, w, horizon - t, w0, align)


def cycle_outputs(obs: ObserverSystem, traj: Trajectory) -> list[tuple[int, str]]:
    """(time, output) at every cycle end of an observer trajectory."""
    fos = obs.compiled()
    return [(traj.t0 + i, fos.output(c)) for i, c in enumerate(traj.states)
            if fos.is_cycle_end(c)]


def encode_observer_trajectory(obs: ObserverSystem, traj: Trajectory) -> str:
    return encode_trajectory(traj, obs.compiled())


# --------------------------------------------------------------------------
# Channels and probes

class Channel:
    name = "channel"

    def apply(self, target: Trajectory) -> str:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.name}


class IdentityChannel(Channel):
    name = "identity"

    def apply(self, target):
        return encode_trajectory(target)


@dataclass(frozen=True)
class MaskChannel(Channel):
    """Zeroes the given payload bit positions (counted after the header)."""

    positions: tuple = ()
    name = "mask"

    def apply(self, target):
        bits = list(encode_trajectory(target))
        h = header_bits(target.width, len(target), target.t0)
        for p in self.positions:
            if not 0 <= p < len(bits) - h:
                raise ChannelError(f"mask position {p} outside the payload")
            bits[h + p] = "0"
        return "".join(bits)

    def describe(self):
        return {"kind": self.name, "positions": list(self.positions)}


@dataclass(frozen=True)
class CoarseChannel(Channel):
    """Keeps only the listed cells of every state."""

    cells: tuple = ()
    name = "coarse"

    def apply(self, target):
        proj = tuple("".join(s[c] for c in self.cells) for s in target.states)
        return encode_trajectory(Trajectory(target.t0, proj, len(self.cells)))

    def describe(self):
        return {"kind": self.name, "cells": list(self.cells)}


class Probe:
    name = "probe"

    def perturbation(self, sys: Fddds, state, t: int, env=None) -> AlgorithmicPerturbation:
        raise NotImplementedError


class IdentityProbe(Probe):
    name = "identity"

    def perturbation(self, sys, state, t, env=None):
        return AlgorithmicPerturbation.replace_state(t, sys.encode_state(sys.step(state, env, t)))


@dataclass(frozen=True)
class BitFlipProbe(Probe):
    bit: int = 0
    name = "bitflip"

    def perturbation(self, sys, state, t, env=None):
        nxt = sys.encode_state(sys.step(state, env, t))
        if not 0 <= self.bit < len(nxt):
            raise DomainError(f"probe bit {self.bit} outside the state")
        flipped = nxt[:self.bit] + ("1" if nxt[self.bit] == "0" else "0") + nxt[self.bit + 1:]
        return AlgorithmicPerturbation.replace_state(t, flipped)


# --------------------------------------------------------------------------
# Observation

@dataclass(frozen=True)
class ObservationRecord:
    t: int
    k: int
    w: str
    p_o_to_s: AlgorithmicPerturbation
    p_s_to_o: AlgorithmicPerturbation
    s_prime_next: str
    window: Trajectory
    observer_traj: Trajectory
    observer: ObserverSystem
    system: Fddds = field(compare=False)
    channel: dict = field(default_factory=dict)

    @property
    def target_traj(self) -> Trajectory:
        return self.window.extend([self.s_prime_next])

    @property
    def target(self) -> str:
        return encode_trajectory(self.target_traj)


def observe(obs: ObserverSystem, sys: Fddds, s0, t: int, k: int,
            channel: Optional[Channel] = None, probe: Optional[Probe] = None,
            env_seq=None) -> ObservationRecord:
    """Observe S_{t-k}..S_t and the probed successor; deliver w to the observer."""
    if k < 0 or k > t:
        raise DomainError("need 0 <= k <= t")
    channel = channel or IdentityChannel()
    probe = probe or IdentityProbe()
    traj = trajectory(sys, s0, env_seq, 0, t)
    env = None if env_seq is None else env_seq[t]
    ap = probe.perturbation(sys, traj.at(t), t, env)
    s_next = ap.next_state(sys, traj.at(t))
    window = traj.segment(t - k, t)
    w = channel.apply(window.extend([s_next]))
    if len(w) > obs.capacity:
        raise ChannelError(f"channel output of {len(w)} bits exceeds capacity {obs.capacity}")
    otraj = observer_trajectory(obs, t, w, 1)
    fos = obs.compiled()
    inj = AlgorithmicPerturbation.replace_state(t, fos.encode_state(otraj.at(t + 1)))
    return ObservationRecord(t, k, w, ap, inj, s_next, window, otraj, obs, sys,
                             channel.describe())


def context(rec: ObservationRecord, obs: Optional[ObserverSystem] = None,
            m: int = 1) -> list[str]:
    """(w, encoded O_0..O_{t+m}, OTM bits, FAT payloads...)."""
    obs = obs or rec.observer
    otraj = observer_trajectory(obs, rec.t, rec.w, m)
    return [rec.w, encode_observer_trajectory(obs, otraj), obs.otm.bits] + obs.fat.payloads()


def flat_context(components: Sequence[str]) -> str:
    return tuple_encode(list(components))


@dataclass(frozen=True)
class PrincipleVerdict:
    outcome: str  # Satisfied | Violated | Inconclusive
    mode: str
    c_O: float
    witness: Optional[str] = None
    witness_kind: str = ""
    bound: float = INF

    @property
    def satisfied(self) -> bool:
        return self.outcome == "Satisfied"


def _upper_witness(target: str, comps: list[str], cap: float,
                   step_budget: int) -> tuple[float, Optional[str], str]:
    best: tuple[float, Optional[str], str] = (INF, None, "")
    if cap >= 1:
        res = ctxmachine.search(target, comps, int(min(cap, 4096)), step_budget,
                                run_cap=16)
        if res.found:
            best = (res.length, res.bits, "ctx")
    cu = complexity.cond_upper(target, flat_context(comps))
    if cu.upper < best[0]:
        best = (cu.upper, cu.certificate, "cond-" + cu.note)
    return best


def check_observation_principle(rec: ObservationRecord, c_O: Optional[float] = None,
                                mode: str = "exact", step_budget: int = ctxmachine.DEFAULT_STEPS,
                                len_cap: int = complexity.EXACT_LEN_CAP) -> PrincipleVerdict:
    c_O = rec.observer.c_O if c_O is None else c_O
    if c_O == INF:
        return PrincipleVerdict("Satisfied", mode, c_O, None, "vacuous")
    target = rec.target
    comps = context(rec)
    if mode == "exact":
        if c_O > len_cap:
            raise CapError(f"c_O={c_O} exceeds the exact-search cap {len_cap}")
        res = ctxmachine.search(target, comps, int(c_O), step_budget)
        if res.found:
            return PrincipleVerdict("Satisfied", mode, c_O, res.bits, "ctx", res.length)
        return PrincipleVerdict("Violated", mode, c_O)
    if mode == "upper":
        bound, wit, kind = _upper_witness(target, comps, c_O, step_budget)
        if bound <= c_O:
            return PrincipleVerdict("Satisfied", mode, c_O, wit, kind, bound)
        return PrincipleVerdict("Inconclusive", mode, c_O, wit, kind, bound)
    raise DomainError(f"unknown mode {mode!r}")


# Decoders are fixed before any experiment and never depend on (obs, sys).
DECODERS: dict[str, str] = {
    "quote-input": ctxmachine.encode(False, 1, ctxmachine.COPY),
}


def perfect_context(rec: ObservationRecord) -> list[str]:
    obs = rec.observer
    return [rec.w, obs.fat.bits, obs.otm.bits]


def check_perfect_observation(rec: ObservationRecord, decoder: str = "quote-input",
                              step_budget: int = ctxmachine.DEFAULT_STEPS) -> bool:
    bits = DECODERS.get(decoder, decoder)
    prog = ctxmachine.parse(bits)
    comps = perfect_context(rec)
    if prog.op == ctxmachine.RUN:
        idx = len(comps) - prog.index if prog.from_end else prog.index - 1
        if 0 <= idx < len(comps) and not run(prog.args[0], comps[idx], step_budget).halted:
            raise PerfectCheckTimeout(f"decoder did not halt within {step_budget} steps")
    return ctxmachine.execute(prog, comps, step_budget) == rec.target


# --------------------------------------------------------------------------
# Emergence verdicts

@dataclass(frozen=True)
class EmergenceVerdict:
    outcome: str  # NotEmergent | Emergent | Inconclusive
    mode: str
    threshold_bits: float
    certificate: Optional[str] = None
    certificate_kind: str = ""
    bound: float = INF
    search_caps: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        from .refmachine import bits_to_hex
        out = {"mode": self.mode, "threshold_bits": self.threshold_bits,
               "outcome": self.outcome}
        if self.certificate is not None:
            out["certificate_hex"] = bits_to_hex(self.certificate)
            out["certificate_kind"] = self.certificate_kind
            out["certificate_bits"] = len(self.certificate)
        out["search_caps"] = self.search_caps
        out["budgets"] = self.budgets
        out["seeds"] = self.seeds
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def future_trajectory(rec: ObservationRecord, t_end: int, env_seq=None) -> Trajectory:
    """S'_{t+1}..S'_{t_end} by free evolution from the probed state."""
    return trajectory(rec.system, rec.s_prime_next, env_seq, rec.t + 1, t_end)


def ode_target(rec: ObservationRecord, future: Trajectory) -> str:
    return encode_trajectory(rec.window.extend(future.states))


def _check_future(rec, future, m):
    if m < 1:
        raise DomainError("m must be >= 1")
    if future.t0 != rec.t + 1 or not len(future) or future.states[0] != rec.s_prime_next:
        raise DomainError("future must start at t+1 with the probed state")
    if future.t1 < rec.t + m:
        raise DomainError("need t' >= t + m")


def replay_certificate(v: EmergenceVerdict, comps: Sequence[str],
                       step_budget: int = ctxmachine.DEFAULT_STEPS) -> Optional[str]:
    if v.certificate_kind == "ctx":
        return ctxmachine.execute(v.certificate, comps, step_budget)
    est = complexity.AicEstimate(0, v.bound, "composite", v.certificate_kind[5:], v.certificate)
    return complexity.replay_cond(est, flat_context(comps))


def ode_verdict(rec: ObservationRecord, future: Trajectory, m: int = 1,
                mode: str = "exact", step_budget: int = ctxmachine.DEFAULT_STEPS,
                len_cap: int = complexity.EXACT_LEN_CAP,
                observer: Optional[ObserverSystem] = None,
                seeds: Optional[dict] = None) -> EmergenceVerdict:
    obs = observer or rec.observer
    _check_future(rec, future, m)
    threshold = obs.threshold
    target = ode_target(rec, future)
    comps = context(rec, obs, m)
    budgets = {"step_budget": step_budget, "otm_budget": obs.step_budget}
    seeds = seeds or {}
    if mode == "exact":
        if threshold > len_cap:
            raise CapError(f"threshold {threshold} exceeds the exact-search cap {len_cap}")
        cap = int(threshold)
        res = ctxmachine.search(target, comps, cap, step_budget)
        caps = {"len_cap": cap, "programs_bound": res.programs_bound,
                "exhaustive": res.exhaustive}
        if res.found:
            return EmergenceVerdict("NotEmergent", mode, threshold, res.bits, "ctx",
                                    res.length, caps, budgets, seeds)
        return EmergenceVerdict("Emergent", mode, threshold, None, "", INF, caps, budgets, seeds)
    if mode == "upper":
        bound, wit, kind = _upper_witness(target, comps, threshold, step_budget)
        caps = {"ctx_cap": int(min(threshold, 4096)), "exhaustive": False}
        if bound <= threshold:
            return EmergenceVerdict("NotEmergent", mode, threshold, wit, kind, bound,
                                    caps, budgets, seeds)
        return EmergenceVerdict("Inconclusive", mode, threshold, wit, kind, bound,
                                caps, budgets, seeds)
    raise DomainError(f"unknown mode {mode!r}")


# --------------------------------------------------------------------------
# Bedau variant

class Simulator:
    """A registered halting simulator: ``simulate(h)`` gives states t-k..h."""

    name = "simulator"

    def simulate(self, t_start: int, h: int) -> Trajectory:
        raise NotImplementedError


@dataclass(frozen=True)
class SystemSimulator(Simulator):
    """Replays a system from a recorded state, applying logged perturbations."""

    sys: Fddds
    state: str
    t_state: int
    perturbations: tuple = ()
    name: str = "system"

    def simulate(self, t_start, h):
        if t_start < self.t_state:
            raise DomainError("simulator cannot run backwards")
        states = [self.state]
        aps = {ap.t: ap for ap in self.perturbations}
        for t in range(self.t_state, h):
            s = states[-1]
            states.append(aps[t].next_state(self.sys, s) if t in aps else self.sys.step(s, None, t))
        keep = states[t_start - self.t_state:]
        return Trajectory(t_start, tuple(keep), self.sys.width)


@dataclass(frozen=True)
class BedauVerdict:
    outcome: str  # WeaklyEmergent | NotWeaklyEmergent
    failed: tuple
    simulator: Optional[str]
    ode: EmergenceVerdict


def bedau_verdict(rec: ObservationRecord, future: Trajectory, m: int,
                  registry: dict, mode: str = "exact", **kw) -> BedauVerdict:
    _check_future(rec, future, m)
    full = rec.window.extend(future.states)
    t_start = rec.t - rec.k
    sim_ok = None
    for name in sorted(registry):
        sim = registry[name]
        if all(encode_trajectory(sim.simulate(t_start, h)) ==
               encode_trajectory(full.segment(t_start, h))
               for h in range(t_start, full.t1 + 1)):
            sim_ok = name
            break
    ode = ode_verdict(rec, future, m, mode, **kw)
    failed = []
    if sim_ok is None:
        failed.append("a")
    if ode.outcome == "NotEmergent":
        failed.append("b")
    outcome = "WeaklyEmergent" if not failed else "NotWeaklyEmergent"
    return BedauVerdict(outcome, tuple(failed), sim_ok, ode)

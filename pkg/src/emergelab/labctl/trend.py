"""Finite-horizon evidence for observer-independent emergence.

For each observer of a roster and each horizon t' of a schedule an exact
ODE verdict is computed.  The empirical t_e is the least scheduled horizon
from which every later verdict is Emergent.  This is finite evidence only;
the asymptotic quantifier cannot be tested.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

from .. import algonet, evomodel, observer
from ..dynsys import RecordedSystem
from ..errors import DomainError
from ..refmachine import copy_program, flip_second_bit_program

TINY = {"c_I": 4, "c_O": 4, "c_e": 4}


def default_roster() -> dict[str, observer.ObserverSystem]:
    return {
        "copy": observer.ObserverSystem(copy_program(), **TINY),
        "copy+fat": observer.ObserverSystem(copy_program(), observer.Fat((("", "1011"),)), **TINY),
        "flip": observer.ObserverSystem(flip_second_bit_program(), **TINY),
    }


def fixed_width(bits: str, width: int) -> str:
    return bits[-width:].rjust(width, "0") if width else ""


def constant_states(width: int, length: int, value: str = "") -> list[str]:
    s = fixed_width(value or "0" * width, width)
    return [s] * length


def evolution_states(seed: int, length: int, width: int = 8, stride: int = 50,
                     budget: int = 1000) -> list[str]:
    """Fitness output (last ``width`` bits) every ``stride`` mutations."""
    from .runio import trial_rng
    hist = evomodel.evolve(evomodel.initial_organism(budget), stride * (length - 1), budget,
                           trial_rng(seed, 0))
    return [fixed_width(format(hist.snapshots[i * stride].fitness, "b"), width)
            for i in range(length)]


def algonet_states(seed: int, length: int, width: int = 8, n: int = 16,
                   kind: str = "ba") -> list[str]:
    """Largest payload in the network (last ``width`` bits) per round."""
    rng = algonet.derive_rng(seed, "aoie", n)
    pop = algonet.sample_population(n, rng)
    g = algonet.gen_topology(kind, n, algonet.derive_rng(seed, "aoie-topology", n))
    traces = algonet.run_networked(algonet.AlgoNet(g, pop, length - 1))
    best = [""] + [p for p in algonet.max_fitness_by_round(traces)]
    return [fixed_width(b, width) for b in best]


@dataclass(frozen=True)
class TrendRow:
    observer: str
    horizon: int
    outcome: str
    certificate_bits: Optional[int]
    exhaustive: bool


@dataclass(frozen=True)
class TrendResult:
    rows: tuple
    t_e: dict  # observer -> least horizon or None (NotReached)

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["observer", "horizon", "outcome", "certificate_bits", "exhaustive"])
        for r in self.rows:
            w.writerow([r.observer, r.horizon, r.outcome,
                        "" if r.certificate_bits is None else r.certificate_bits, int(r.exhaustive)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["observer", "t_e"])
        for name, te in sorted(self.t_e.items()):
            w.writerow([name, "NotReached" if te is None else te])
        return buf.getvalue()


def first_failure(outcomes: Sequence[tuple[int, str]]) -> Optional[int]:
    """Least horizon from which every scheduled verdict is Emergent."""
    t_e = None
    for h, out in sorted(outcomes, reverse=True):
        if out != "Emergent":
            break
        t_e = h
    return t_e


def aoie_trend(states: Sequence[str], roster: dict, horizons: Sequence[int],
               t: int, k: int, step_budget: int = 100, len_cap: int = 24) -> TrendResult:
    if not horizons:
        raise DomainError("empty horizon schedule")
    if max(horizons) >= len(states):
        raise DomainError("horizon beyond the generated trajectory")
    if min(horizons) <= t:
        raise DomainError("horizons must be after the observation time")
    sys = RecordedSystem(states)
    rows = []
    t_e = {}
    for name in sorted(roster):
        obs = roster[name]
        rec = observer.observe(obs, sys, states[0], t, k)
        outs = []
        for h in sorted(horizons):
            fut = observer.future_trajectory(rec, h)
            v = observer.ode_verdict(rec, fut, h - t, "exact", step_budget, len_cap)
            rows.append(TrendRow(name, h, v.outcome,
                                 None if v.certificate is None else len(v.certificate),
                                 bool(v.search_caps.get("exhaustive"))))
            outs.append((h, v.outcome))
        t_e[name] = first_failure(outs)
    return TrendResult(tuple(rows), t_e)


def pre_extended(obs: observer.ObserverSystem, states: Sequence[str], t: int, k: int,
                 horizons: Sequence[int]) -> observer.ObserverSystem:
    """``obs`` with the target of every scheduled horizon added to its FAT."""
    sys = RecordedSystem(states)
    rec = observer.observe(obs, sys, states[0], t, k)
    for h in sorted(horizons, reverse=True):
        obs = observer.extend_fat(obs, observer.ode_target(rec, observer.future_trajectory(rec, h)))
    return obs

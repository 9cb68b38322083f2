"""Cumulative evolution of programs under random algorithmic mutations.

Organisms are reference-machine programs; fitness is the halting output on
the blank tape read as a binary number.  A mutation is itself a sampled
program run on the organism's encoding; the candidate is the program that
the mutation's output starts with.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from . import complexity
from .errors import DomainError, EncodingError
from .refmachine import (Program, as_program, copy_program,
                         decode_program_prefix, run, sample_program)

DEFAULT_BUDGET = 1000


@dataclass(frozen=True)
class Organism:
    program: Program
    fitness: Optional[int]
    output: str = ""
    generation: int = 0

    @property
    def fitness_bits(self) -> int:
        return 0 if not self.fitness else self.fitness.bit_length()


def evaluate(program, budget: int = DEFAULT_BUDGET, generation: int = 0) -> Organism:
    prog = as_program(program)
    res = run(prog, "", budget)
    if not res.halted:
        return Organism(prog, None, "", generation)
    return Organism(prog, int(res.output, 2) if res.output else 0, res.output, generation)


def initial_organism(budget: int = DEFAULT_BUDGET) -> Organism:
    """The minimal halting program with output "0" (the 8-bit copy machine)."""
    return evaluate(copy_program(), budget)


def random_mutation(rng, s_max: Optional[int] = None) -> Program:
    return sample_program(rng, s_max)


@dataclass(frozen=True)
class Candidate:
    program: Optional[Program]
    reason: str = "ok"

    @property
    def valid(self) -> bool:
        return self.program is not None


def mutate(org: Organism, mutation, budget: int = DEFAULT_BUDGET) -> Candidate:
    """Run the mutation on the organism's bits; keep the leading valid program."""
    res = run(mutation, org.program.bits, budget)
    if not res.halted:
        return Candidate(None, "mutation-nonhalting")
    try:
        prog, _ = decode_program_prefix(res.output)
    except EncodingError:
        return Candidate(None, "undecodable")
    return Candidate(prog)


@dataclass(frozen=True)
class Snapshot:
    t: int
    accepted: bool
    program: str
    fitness: int
    k_compress: int
    k_ctm: Optional[float]


@dataclass
class EvolutionHistory:
    snapshots: list = field(default_factory=list)
    seed: Optional[int] = None
    budget: int = DEFAULT_BUDGET

    def accepted(self) -> list[Snapshot]:
        return [s for s in self.snapshots if s.accepted or s.t == 0]

    @property
    def final(self) -> Snapshot:
        return self.snapshots[-1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        if self.seed is not None:
            buf.write(f"# seed={self.seed} budget={self.budget}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "accepted", "fitness_bits", "k_compress", "k_ctm_or_na", "program_len"])
        for s in self.snapshots:
            w.writerow([s.t, int(s.accepted), s.fitness.bit_length(), s.k_compress,
                        "na" if s.k_ctm is None else f"{s.k_ctm:.6f}", len(s.program)])
        return buf.getvalue()


def _ctm_or_none(table, x: str) -> Optional[float]:
    if table is None or x not in table.counts:
        return None
    return complexity.ctm_k(table, x).upper


def evolve(initial: Organism, n_mutations: int, budget: int, rng,
           s_max: Optional[int] = None, ctm_table=None,
           seed: Optional[int] = None) -> EvolutionHistory:
    """Accept a candidate iff its fitness is defined and strictly larger.

    Every mutation is recorded; rejected steps repeat the current organism.
    """
    if initial.fitness is None:
        raise DomainError("initial organism must halt within the budget")
    hist = EvolutionHistory(seed=seed, budget=budget)
    cur = initial

    def snap(t, accepted):
        return Snapshot(t, accepted, cur.program.bits, cur.fitness,
                        complexity.k_compress(cur.output), _ctm_or_none(ctm_table, cur.output))

    last = snap(0, False)
    hist.snapshots.append(last)
    for t in range(1, n_mutations + 1):
        mutation = random_mutation(rng, s_max)
        cand = mutate(cur, mutation, budget)
        accepted = False
        if cand.valid:
            org = evaluate(cand.program, budget, cur.generation + 1)
            if org.fitness is not None and org.fitness > cur.fitness:
                cur = org
                accepted = True
        if accepted:
            last = snap(t, True)
        else:
            last = Snapshot(t, False, last.program, last.fitness, last.k_compress, last.k_ctm)
        hist.snapshots.append(last)
    return hist


@dataclass(frozen=True)
class GrowthPoint:
    t: int
    fitness_bits: int
    k_hat: float
    cube_root: float


def growth_curve(hist: EvolutionHistory) -> list[GrowthPoint]:
    """One point per accepted snapshot (plus the initial one)."""
    return [GrowthPoint(s.t, s.fitness.bit_length(), s.k_compress, s.t ** (1 / 3))
            for s in hist.accepted()]


def spearman_t_k(hist: EvolutionHistory) -> float:
    from scipy.stats import spearmanr
    pts = growth_curve(hist)
    if len(pts) < 2:
        return math.nan
    ks = [p.k_hat for p in pts]
    if len(set(ks)) < 2:
        return math.nan
    return float(spearmanr([p.t for p in pts], ks).statistic)


def fitness_strictly_increasing(hist: EvolutionHistory) -> bool:
    fits = [s.fitness for s in hist.accepted()]
    return all(a < b for a, b in zip(fits, fits[1:]))

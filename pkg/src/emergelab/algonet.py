"""Algorithmic networks: node programs exchanging payloads over a graph.

Plain diffusion: every round each node runs its program on its current
champion payload, sends the result to its neighbours, and adopts the
largest payload it sees (integer value, ties by lexicographic payload).
"""
from __future__ import annotations

import csv
import hashlib
import io
import math
import random
import statistics
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import networkx as nx

from .dynsys import RecordedSystem, Trajectory, encode_trajectory
from .errors import DomainError, TopologyError
from .perturb import SimpleGraph, get_estimator
from .refmachine import Program, as_program, list_encode, run, sample_program

DEFAULT_NODE_BUDGET = 1000
DEFAULT_S_MAX = 3
DEFAULT_DATA_EXPONENT = 8
SIS_INFECT = 0.5
SIS_RECOVER = 0.1


def derive_rng(*parts) -> random.Random:
    """Independent stream per (master seed, labels...)."""
    key = ":".join(str(p) for p in parts)
    return random.Random(int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big"))


# --------------------------------------------------------------------------
# Topologies

def to_nx(g: SimpleGraph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges)
    return h


def diameter(g: SimpleGraph) -> float:
    h = to_nx(g)
    if g.n == 0:
        return 0
    if not nx.is_connected(h):
        return math.inf
    return nx.diameter(h)


def gen_topology(kind: str, n: int, rng, p: float = 0.5, m: int = 2,
                 connected: bool = False, max_tries: int = 100) -> SimpleGraph:
    """complete | ring | er | ba | edgeless; deterministic given ``rng``."""
    if n < 1:
        raise DomainError("need N >= 1")
    for _ in range(max_tries):
        seed = rng.getrandbits(32)
        if kind == "complete":
            h = nx.complete_graph(n)
        elif kind == "ring":
            h = nx.cycle_graph(n) if n > 2 else nx.path_graph(n)
        elif kind == "er":
            h = nx.gnp_random_graph(n, p, seed=seed)
        elif kind == "ba":
            if not 1 <= m < n:
                raise DomainError("BA needs 1 <= m < N")
            h = nx.barabasi_albert_graph(n, m, seed=seed)
        elif kind == "edgeless":
            h = nx.empty_graph(n)
        else:
            raise DomainError(f"unknown topology {kind!r}")
        g = SimpleGraph(n, frozenset(h.edges()))
        if not connected or n == 1 or nx.is_connected(h):
            return g
    raise TopologyError(f"no connected {kind} draw in {max_tries} tries")


def neighbours(g: SimpleGraph) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(g.n)]
    for u, v in sorted(g.edges):
        adj[u].append(v)
        adj[v].append(u)
    return adj


# --------------------------------------------------------------------------
# Protocol

def fitness_key(payload: str) -> tuple[int, str]:
    return (int(payload, 2) if payload else 0, payload)


@dataclass(frozen=True)
class NodeTrace:
    sent: tuple  # payload sent in rounds 1..c
    final: str

    def encode(self) -> str:
        return list_encode(list(self.sent) + [self.final])


@dataclass(frozen=True)
class AlgoNet:
    graph: SimpleGraph
    population: tuple
    rounds: int
    budget: int = DEFAULT_NODE_BUDGET
    protocol: str = "diffusion"  # diffusion | sis
    infect: float = SIS_INFECT
    recover: float = SIS_RECOVER
    seed: int = 0

    def __post_init__(self):
        if len(self.population) != self.graph.n:
            raise DomainError("population size must equal the vertex count")
        if self.protocol not in ("diffusion", "sis"):
            raise DomainError(f"unknown protocol {self.protocol!r}")


def _step(prog: Program, payload: str, budget: int) -> str:
    res = run(prog, payload, budget)
    return res.output if res.halted else payload


def run_isolated(population: Sequence, c: int, budget: int = DEFAULT_NODE_BUDGET) -> list[NodeTrace]:
    traces = []
    for prog in population:
        prog = as_program(prog)
        payload = ""
        sent = []
        for _ in range(c):
            payload = _step(prog, payload, budget)
            sent.append(payload)
        traces.append(NodeTrace(tuple(sent), payload))
    return traces


def run_networked(net: AlgoNet) -> list[NodeTrace]:
    """Synchronous rounds: compute all candidates, then exchange atomically."""
    n = net.graph.n
    progs = [as_program(p) for p in net.population]
    adj = neighbours(net.graph)
    champ = [""] * n
    sent: list[list[str]] = [[] for _ in range(n)]
    rng = derive_rng(net.seed, "sis") if net.protocol == "sis" else None
    for _ in range(net.rounds):
        cand = [_step(progs[i], champ[i], net.budget) for i in range(n)]
        for i in range(n):
            sent[i].append(cand[i])
        new = []
        for i in range(n):
            if rng is None:
                pool = [cand[i]] + [cand[j] for j in adj[i]]
            else:
                pool = [cand[i]] + [cand[j] for j in adj[i] if rng.random() < net.infect]
            best = max(pool, key=fitness_key)
            if rng is not None and best != cand[i] and rng.random() < net.recover:
                best = cand[i]
            new.append(best)
        champ = new
    if net.rounds == 0:
        return [NodeTrace((), "") for _ in range(n)]
    return [NodeTrace(tuple(sent[i]), champ[i]) for i in range(n)]


def max_fitness_by_round(traces: Sequence[NodeTrace]) -> list[tuple[int, str]]:
    rounds = len(traces[0].sent) if traces else 0
    return [max((t.sent[r] for t in traces), key=fitness_key) for r in range(rounds)]


# --------------------------------------------------------------------------
# Measurement

def eac(trace_net: NodeTrace, trace_iso: NodeTrace, estimator="compress") -> float:
    est = get_estimator(estimator)
    return est(trace_net.encode()) - est(trace_iso.encode())


def default_rounds(n: int) -> int:
    return math.ceil(math.log2(n)) + 2 if n > 1 else 2


def sample_population(n: int, rng, s_max: Optional[int] = DEFAULT_S_MAX,
                      data_exponent: int = DEFAULT_DATA_EXPONENT) -> tuple:
    return tuple(sample_program(rng, s_max, data_exponent) for _ in range(n))


@dataclass(frozen=True)
class EacRow:
    n: int
    trial: int
    node: int
    eac_bits: float


@dataclass(frozen=True)
class CurvePoint:
    n: int
    mean: float
    ci: float
    trials: int


def eeoe_trial(n: int, kind: str, trial: int, seed: int, rounds: Optional[int] = None,
               budget: int = DEFAULT_NODE_BUDGET, estimator="compress",
               protocol: str = "diffusion", s_max: Optional[int] = DEFAULT_S_MAX,
               data_exponent: int = DEFAULT_DATA_EXPONENT, m: int = 2) -> list[EacRow]:
    """One trial; the population stream is shared across topologies (paired design)."""
    c = default_rounds(n) if rounds is None else rounds
    pop = sample_population(n, derive_rng(seed, "population", n, trial), s_max, data_exponent)
    g = gen_topology(kind, n, derive_rng(seed, "topology", kind, n, trial), m=m)
    net = AlgoNet(g, pop, c, budget, protocol, seed=hash_seed(seed, n, trial))
    iso = run_isolated(pop, c, budget)
    netw = run_networked(net)
    return [EacRow(n, trial, i, eac(netw[i], iso[i], estimator)) for i in range(n)]


def hash_seed(*parts) -> int:
    key = ":".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:4], "big")


def aggregate(rows: Sequence[EacRow]) -> list[CurvePoint]:
    by_n: dict[int, dict[int, list[float]]] = {}
    for r in rows:
        by_n.setdefault(r.n, {}).setdefault(r.trial, []).append(r.eac_bits)
    out = []
    for n in sorted(by_n):
        means = [statistics.fmean(v) for _, v in sorted(by_n[n].items())]
        mu = statistics.fmean(means)
        sd = statistics.stdev(means) if len(means) > 1 else 0.0
        out.append(CurvePoint(n, mu, 1.96 * sd / math.sqrt(len(means)), len(means)))
    return out


def eeoe_curve(Ns: Sequence[int], kind: str, trials: int, seed: int,
               schedule: Optional[Callable[[int], int]] = None, **kw) -> tuple[list[CurvePoint], list[EacRow]]:
    schedule = schedule or default_rounds
    rows = []
    for n in Ns:
        for trial in range(trials):
            rows += eeoe_trial(n, kind, trial, seed, rounds=schedule(n), **kw)
    return aggregate(rows), rows


def rows_csv(rows: Sequence[EacRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "trial", "node", "eac_bits"])
    for r in rows:
        w.writerow([r.n, r.trial, r.node, r.eac_bits])
    return buf.getvalue()


def curve_csv(points: Sequence[CurvePoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "mean", "ci"])
    for p in points:
        w.writerow([p.n, f"{p.mean:.6f}", f"{p.ci:.6f}"])
    return buf.getvalue()


# --------------------------------------------------------------------------
# Macro level

def macro_fddds(traces: Sequence[NodeTrace]) -> tuple[RecordedSystem, Trajectory]:
    """Macro state per round = node payloads in vertex order, each padded.

    Payloads are laid out as fixed-width blocks ``gamma``-free: every
    payload is left-padded with its length in a fixed-width field so the
    arrangement is injective.
    """
    if not traces:
        raise DomainError("no traces")
    rounds = len(traces[0].sent)
    if any(len(t.sent) != rounds for t in traces):
        raise DomainError("ragged traces")
    cols = [list(t.sent) + [t.final] for t in traces]
    maxlen = max((len(p) for col in cols for p in col), default=0)
    lw = max(1, maxlen.bit_length())
    field_w = lw + maxlen

    def cell(p: str) -> str:
        return format(len(p), f"0{lw}b") + p.ljust(maxlen, "0")

    if len(traces) == 1:
        states = tuple(cols[0])
        if len({len(s) for s in states}) == 1:
            width = len(states[0])
            return RecordedSystem(states), Trajectory(0, states, width, {"arrangement": "identity"})
    states = tuple("".join(cell(col[r]) for col in cols) for r in range(rounds + 1))
    traj = Trajectory(0, states, field_w * len(traces), {"arrangement": "vertex-order"})
    return RecordedSystem(states), traj

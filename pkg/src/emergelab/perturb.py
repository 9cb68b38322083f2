"""Algorithmic perturbations of trajectories and graphs."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

from . import complexity
from .dynsys import Fddds, Trajectory
from .errors import DomainError, EncodingError, PerturbationFailed
from .refmachine import (Program, as_program, gamma_decode, gamma_encode,
                         gamma_len, run, state_writer_program)

DEFAULT_AP_BUDGET = 1000


# --------------------------------------------------------------------------
# Perturbations of dynamical systems

@dataclass(frozen=True)
class AlgorithmicPerturbation:
    """Rewrites the single transition ``t -> t+1``.

    Exactly one of ``program`` (run on the encoded state ``A_t``) or
    ``target`` (an explicit replacement state) is set.
    """

    t: int
    program: Optional[Program] = None
    target: Optional[str] = None
    budget: int = DEFAULT_AP_BUDGET

    def __post_init__(self):
        if (self.program is None) == (self.target is None):
            raise DomainError("give exactly one of program or target")
        if self.program is not None and not isinstance(self.program, Program):
            object.__setattr__(self, "program", as_program(self.program))

    @classmethod
    def from_program(cls, t: int, program, budget: int = DEFAULT_AP_BUDGET):
        return cls(t, program=as_program(program), budget=budget)

    @classmethod
    def replace_state(cls, t: int, target: str):
        return cls(t, target=target)

    def canonical_program(self) -> Program:
        """Program form; a delta becomes the constant state-writer program."""
        if self.program is not None:
            return self.program
        return state_writer_program(self.target)

    def next_state(self, sys: Fddds, state):
        if self.target is not None:
            nxt = self.target
        else:
            res = run(self.program, sys.encode_state(state), self.budget)
            if not res.halted:
                raise PerturbationFailed(f"perturbation program did not halt within {self.budget} steps")
            nxt = res.output
        if len(nxt) != sys.width:
            raise DomainError(f"perturbed state has {len(nxt)} bits, expected {sys.width}")
        nxt = sys.decode_state(nxt)
        if not sys.contains(nxt):
            raise DomainError("perturbed state is outside X_S")
        return nxt


def apply_ap(sys: Fddds, prefix: Trajectory, ap: AlgorithmicPerturbation,
             t1: Optional[int] = None, env_seq=None) -> Trajectory:
    """Prefix through ``ap.t``, then the perturbed state, then free evolution to ``t1``.

    ``t1`` defaults to the prefix end (or ``ap.t + 1`` if that is later).
    ``env_seq[i]`` drives the step ``prefix.t0 + i``.
    """
    if not prefix.t0 <= ap.t <= prefix.t1:
        raise DomainError(f"perturbation time {ap.t} outside the prefix")
    if t1 is None:
        t1 = max(prefix.t1, ap.t + 1)
    if t1 <= ap.t:
        raise DomainError("t1 must be after the perturbation time")
    env = lambda t: None if env_seq is None else env_seq[t - prefix.t0]
    states = list(prefix.states[:ap.t - prefix.t0 + 1])
    states.append(ap.next_state(sys, states[-1]))
    for t in range(ap.t + 1, t1):
        states.append(sys.step(states[-1], env(t), t))
    log = list(prefix.provenance.get("perturbations", [])) + [ap.t]
    prov = dict(prefix.provenance, perturbations=log)
    return Trajectory(prefix.t0, tuple(states), prefix.width, prov)


def min_ap_upper(a_t: str, a_next: str, mode: str = "upper", len_cap: int = 16,
                 step_budget: int = 100) -> complexity.AicEstimate:
    """Complexity of the cheapest perturbation mapping ``a_t`` to ``a_next``."""
    if mode == "upper":
        return complexity.cond_upper(a_next, a_t)
    if mode == "exact":
        return complexity.bounded_exact_k(a_next, a_t, len_cap, step_budget)
    raise DomainError(f"unknown mode {mode!r}")


# --------------------------------------------------------------------------
# Graphs

Edge = tuple[int, int]


def _norm(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class SimpleGraph:
    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.n < 0:
            raise DomainError("vertex count must be >= 0")
        norm = frozenset(_norm(u, v) for u, v in self.edges)
        for u, v in norm:
            if u == v:
                raise DomainError(f"self-loop at {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise DomainError(f"edge {(u, v)} outside 0..{self.n - 1}")
        object.__setattr__(self, "edges", norm)

    @classmethod
    def complete(cls, n: int) -> "SimpleGraph":
        return cls(n, frozenset((u, v) for u in range(n) for v in range(u + 1, n)))

    def slots(self) -> list[Edge]:
        return [(u, v) for u in range(self.n) for v in range(u + 1, self.n)]

    def encode(self) -> str:
        """gamma(N+1) then the characteristic bit of every pair u < v, row-major."""
        return gamma_encode(self.n + 1) + "".join(
            "1" if e in self.edges else "0" for e in self.slots())

    @classmethod
    def decode(cls, bits: str) -> "SimpleGraph":
        n1, pos = gamma_decode(bits)
        n = n1 - 1
        body = bits[pos:]
        if len(body) != n * (n - 1) // 2:
            raise EncodingError("graph body length does not match N")
        g = cls(n)
        return cls(n, frozenset(e for e, b in zip(g.slots(), body) if b == "1"))

    def to_edgelist(self) -> str:
        lines = [str(self.n)] + [f"{u} {v}" for u, v in sorted(self.edges)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text: str) -> "SimpleGraph":
        lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or len(lines[0]) != 1:
            raise EncodingError("edge list must start with a vertex-count line")
        n = int(lines[0][0])
        edges = []
        for parts in lines[1:]:
            if len(parts) != 2:
                raise EncodingError(f"bad edge line {' '.join(parts)!r}")
            edges.append((int(parts[0]), int(parts[1])))
        return cls(n, frozenset(edges))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_edgelist())
        return path

    @classmethod
    def load(cls, path) -> "SimpleGraph":
        return cls.from_edgelist(Path(path).read_text())


def edge_perturb(g: SimpleGraph, F: Iterable[Edge], mode: str = "delete") -> SimpleGraph:
    fs = frozenset(_norm(u, v) for u, v in F)
    if mode == "delete":
        if not fs <= g.edges:
            raise DomainError(f"cannot delete absent edges {sorted(fs - g.edges)}")
        return SimpleGraph(g.n, g.edges - fs)
    if mode == "insert":
        if fs & g.edges:
            raise DomainError(f"cannot insert present edges {sorted(fs & g.edges)}")
        return SimpleGraph(g.n, g.edges | fs)
    raise DomainError(f"unknown mode {mode!r}")


# --------------------------------------------------------------------------
# Edge-list rewriting programs (the realized companion of the edge bound)

def vertex_bits(n: int) -> int:
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


def edge_program(F: Sequence[Edge], n: int, mode: str = "delete") -> str:
    """mode(1) . gamma(b) . gamma(|F|+1) . 2|F| vertex ids of b bits each."""
    b = vertex_bits(n)
    body = "".join(format(x, f"0{b}b") for e in sorted(_norm(*e) for e in F) for x in e)
    return ("0" if mode == "delete" else "1") + gamma_encode(b) + gamma_encode(len(F) + 1) + body


def apply_edge_program(graph_bits: str, prog: str) -> str:
    """Run an edge program against an encoded graph; returns the new encoding."""
    g = SimpleGraph.decode(graph_bits)
    mode = "delete" if prog[0] == "0" else "insert"
    b, pos = gamma_decode(prog, 1)
    f1, pos = gamma_decode(prog, pos)
    if len(prog) - pos != 2 * (f1 - 1) * b:
        raise EncodingError("edge program body length mismatch")
    ids = [int(prog[i:i + b], 2) for i in range(pos, len(prog), b)]
    F = list(zip(ids[0::2], ids[1::2]))
    return edge_perturb(g, F, mode).encode()


@dataclass(frozen=True)
class EdgeBound:
    leading: float
    realized: int


def edge_ap_bound(F_size: int, n: int) -> EdgeBound:
    if n < 2 or F_size < 0:
        raise DomainError("need N >= 2 and |F| >= 0")
    b = vertex_bits(n)
    realized = 1 + gamma_len(b) + gamma_len(F_size + 1) + 2 * F_size * b
    return EdgeBound(2 * F_size * math.log2(n), realized)


def realized_edge_cond(g: SimpleGraph, g2: SimpleGraph, F: Sequence[Edge],
                       mode: str = "delete") -> tuple[int, str, str]:
    """min(edge program, cond_upper) for K(encode(g2) | encode(g)).

    Returns (bits, method, certificate); the certificate replays to g2.
    """
    prog = edge_program(F, g.n, mode)
    comp = complexity.cond_upper(g2.encode(), g.encode())
    if len(prog) <= comp.upper:
        return len(prog), "edge-program", prog
    return int(comp.upper), "cond-" + comp.note, comp.certificate


def calibrate_c_hat(cases: Iterable[tuple[SimpleGraph, Sequence[Edge], str]]) -> int:
    """Smallest integer c with realized <= 2|F| log2 N + c on every case."""
    worst = -math.inf
    for g, F, mode in cases:
        g2 = edge_perturb(g, F, mode)
        bits, _, _ = realized_edge_cond(g, g2, F, mode)
        worst = max(worst, bits - edge_ap_bound(len(F), g.n).leading)
    if worst == -math.inf:
        raise DomainError("empty calibration corpus")
    return math.ceil(worst)


# --------------------------------------------------------------------------
# Reprogrammability

Estimator = Callable[[str], float]
ESTIMATORS: dict[str, Estimator] = {"compress": complexity.k_compress}


def get_estimator(estimator: Union[str, Estimator]) -> Estimator:
    if callable(estimator):
        return estimator
    try:
        return ESTIMATORS[estimator]
    except KeyError:
        raise DomainError(f"unknown estimator {estimator!r}") from None


@dataclass(frozen=True)
class ProfileRow:
    trial: int
    edge: Edge
    delta_bits: float


def reprogrammability_profile(g: SimpleGraph, trials: int, rng,
                              estimator: Union[str, Estimator] = "compress") -> list[ProfileRow]:
    if not g.edges:
        raise DomainError("edgeless graph has nothing to delete")
    est = get_estimator(estimator)
    base = est(g.encode())
    edges = sorted(g.edges)
    rows = []
    for trial in range(trials):
        e = edges[rng.randrange(len(edges))]
        rows.append(ProfileRow(trial, e, est(edge_perturb(g, [e]).encode()) - base))
    return rows


def profile_csv(rows: Sequence[ProfileRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "edge", "delta_bits"])
    for r in rows:
        w.writerow([r.trial, f"{r.edge[0]}-{r.edge[1]}", r.delta_bits])
    return buf.getvalue()


def mean_abs_delta(rows: Sequence[ProfileRow]) -> float:
    return sum(abs(r.delta_bits) for r in rows) / len(rows) if rows else 0.0

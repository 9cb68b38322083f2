"""Shared fixtures and small independent oracles used across the test suite."""
from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from emergelab import algonet
from emergelab.perturb import SimpleGraph

DATA = Path(__file__).parent / "data"

# "CRITERION n: PASS|FAIL (...)" lines, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def load_calibration() -> dict:
    return json.loads((DATA / "calibration.json").read_text())


def single_edge_case(n: int, rng: random.Random) -> tuple[SimpleGraph, list, str]:
    """An ER(n, 0.5) graph with one random edge to delete or non-edge to insert."""
    g = algonet.gen_topology("er", n, rng, p=0.5)
    mode = rng.choice(["delete", "insert"])
    pool = sorted(g.edges) if mode == "delete" else sorted(set(g.slots()) - g.edges)
    if not pool:
        mode = "insert" if mode == "delete" else "delete"
        pool = sorted(g.edges) if mode == "delete" else sorted(set(g.slots()) - g.edges)
    return g, [pool[rng.randrange(len(pool))]], mode


def eca_oracle(rule: int, state: str) -> str:
    """Plain re-implementation of a periodic elementary CA step."""
    n = len(state)
    out = []
    for i in range(n):
        left, mid, right = state[(i - 1) % n], state[i], state[(i + 1) % n]
        idx = int(left + mid + right, 2)
        out.append(str((rule >> idx) & 1))
    return "".join(out)


def visited_set_recurrence(step, s0):
    """(preperiod, period) by storing every visited state."""
    seen = {}
    s, t = s0, 0
    while s not in seen:
        seen[s] = t
        s = step(s)
        t += 1
    return seen[s], t - seen[s]


@pytest.fixture(scope="session")
def atlas3():
    from emergelab.ueinn import build_atlas
    return build_atlas(3)


@pytest.fixture(scope="session")
def ctm22():
    from emergelab.complexity import ctm_build
    return ctm_build(2, 1000)


def naive_window_in_cycle(window, cyc) -> bool:
    """Containment by trying every start position modulo the cycle length."""
    n, c = len(window), len(cyc)
    if n > c:
        return False
    return any(all(window[i] == cyc[(s + i) % c] for i in range(n)) for s in range(c))

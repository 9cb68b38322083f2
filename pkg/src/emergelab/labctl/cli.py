"""Command line entry point.

Every subcommand resolves its configuration as built-in defaults, then the
TOML file given by ``--config`` (top-level keys, then the table named after
the subcommand), then explicit flags.  The resolved config is echoed in the
run manifest.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .. import algonet, complexity, dynsys, evomodel, observer, perturb, ueinn
from ..errors import LabError
from ..refmachine import bits_to_hex
from . import trend
from .runio import RunWriter, trial_rng, trial_seed

EXIT_OK, EXIT_ERROR, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _ints(text) -> list[int]:
    """Comma list of ints; ``a-b`` expands to the inclusive range."""
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    out = []
    try:
        for part in str(text).split(","):
            part = part.strip()
            if not part:
                continue
            if "-" in part[1:]:
                lo, hi = part.split("-", 1)
                out += range(int(lo), int(hi) + 1)
            else:
                out.append(int(part))
    except ValueError:
        raise UsageError(f"expected integers like 1,2,5-8, got {text!r}") from None
    return out


# --------------------------------------------------------------------------
# Experiments.  Each takes the resolved config and the output directory.

def run_ctm(cfg: dict, out: Path) -> RunWriter:
    rw = RunWriter(out, "ctm", cfg)
    table = complexity.ctm_build(cfg["states"], cfg["steps"], workers=cfg["workers"])
    rw.write(f"ctm_s{cfg['states']}_b{cfg['steps']}.csv", table.to_text())
    rw.write_json("summary.json", {"machines": table.machines, "halters": table.halters,
                                   "distinct_outputs": len(table.counts),
                                   "table_sha256": table.sha256(),
                                   "most_common": table.most_common(10)})
    return rw


def _load_graph(cfg: dict, rng) -> perturb.SimpleGraph:
    if cfg.get("graph"):
        return perturb.SimpleGraph.load(cfg["graph"])
    if cfg["kind"] == "complete":
        return perturb.SimpleGraph.complete(cfg["n"])
    return algonet.gen_topology(cfg["kind"], cfg["n"], rng, p=cfg["p"])


def run_perturb_graph(cfg: dict, out: Path) -> RunWriter:
    rw = RunWriter(out, "perturb-graph", cfg)
    if cfg.get("graph"):
        rw.add_input(cfg["graph"])
    rows_all = []
    summary = []
    for trial in range(cfg["trials"]):
        rng = trial_rng(cfg["seed"], trial)
        rw.seeds.append(trial_seed(cfg["seed"], trial))
        g = _load_graph(cfg, rng)
        rows = perturb.reprogrammability_profile(g, cfg["deletions"], rng, cfg["estimator"])
        rows_all += [(trial, r) for r in rows]
        e = sorted(g.edges)[0] if g.edges else None
        realized = None
        if e is not None:
            bits, method, _ = perturb.realized_edge_cond(g, perturb.edge_perturb(g, [e]), [e])
            realized = {"bits": bits, "method": method}
        summary.append({"trial": trial, "n": g.n, "edges": len(g.edges),
                        "mean_abs_delta": perturb.mean_abs_delta(rows), "realized": realized})
    lines = ["graph_trial,trial,edge,delta_bits"]
    for gt, r in rows_all:
        lines.append(f"{gt},{r.trial},{r.edge[0]}-{r.edge[1]},{r.delta_bits}")
    rw.write("profile.csv", "\n".join(lines) + "\n")
    b = perturb.edge_ap_bound(1, cfg["n"])
    rw.write_json("summary.json", {"trials": summary,
                                   "edge_bound": {"F": 1, "N": cfg["n"], "leading": b.leading,
                                                  "realized": b.realized}})
    return rw


def _system_states(cfg: dict, rng) -> tuple:
    """(system, s0) for the observe/verdict experiments."""
    if cfg["system"] == "eca":
        sys_ = dynsys.eca(cfg["rule"], cfg["width"])
        s0 = cfg.get("s0") or format(rng.getrandbits(cfg["width"]), f"0{cfg['width']}b")
        return sys_, s0
    if cfg["system"] == "random":
        traj = dynsys.gen_incompressible_trajectory(cfg["width"], cfg["length"], rng)
        return dynsys.RecordedSystem(traj.states), traj.states[0]
    raise UsageError(f"unknown system {cfg['system']!r}")


def _channel(cfg: dict) -> observer.Channel:
    kind = cfg["channel"]
    if kind == "identity":
        return observer.IdentityChannel()
    if kind == "mask":
        return observer.MaskChannel(tuple(_ints(cfg["mask"])))
    if kind == "coarse":
        return observer.CoarseChannel(tuple(_ints(cfg["cells"])))
    raise UsageError(f"unknown channel {kind!r}")


def _observer(cfg: dict) -> observer.ObserverSystem:
    return observer.ObserverSystem(c_I=cfg["c_I"], c_O=cfg["c_O"], c_e=cfg["c_e"])


def run_observe(cfg: dict, out: Path) -> RunWriter:
    rw = RunWriter(out, "observe", cfg)
    results = []
    for trial in range(cfg["trials"]):
        rng = trial_rng(cfg["seed"], trial)
        rw.seeds.append(trial_seed(cfg["seed"], trial))
        sys_, s0 = _system_states(cfg, rng)
        rec = observer.observe(_observer(cfg), sys_, s0, cfg["t"], cfg["k"], _channel(cfg))
        v = observer.check_observation_principle(rec, cfg["c_O"], cfg["mode"])
        results.append({"trial": trial, "w_bits": len(rec.w), "outcome": v.outcome,
                        "witness_hex": bits_to_hex(v.witness) if v.witness else None,
                        "perfect": observer.check_perfect_observation(rec)})
    rw.write("observations.csv", "trial,w_bits,outcome,perfect\n" + "".join(
        f"{r['trial']},{r['w_bits']},{r['outcome']},{int(r['perfect'])}\n" for r in results))
    rw.write_json("observations.json", results)
    return rw


def run_verdict(cfg: dict, out: Path) -> RunWriter:
    rw = RunWriter(out, "verdict", cfg)
    results = []
    lines = ["trial,outcome,threshold_bits,certificate_bits"]
    for trial in range(cfg["trials"]):
        rng = trial_rng(cfg["seed"], trial)
        rw.seeds.append(trial_seed(cfg["seed"], trial))
        sys_, s0 = _system_states(cfg, rng)
        rec = observer.observe(_observer(cfg), sys_, s0, cfg["t"], cfg["k"], _channel(cfg))
        fut = observer.future_trajectory(rec, cfg["horizon"])
        m = cfg["horizon"] - cfg["t"]
        seeds = {"master": cfg["seed"], "trial": trial}
        if cfg["kind"] == "bedau":
            sim = observer.SystemSimulator(sys_, rec.window.at(rec.t - rec.k), rec.t - rec.k,
                                           (rec.p_o_to_s,))
            bv = observer.bedau_verdict(rec, fut, m, {"system": sim}, cfg["mode"], seeds=seeds)
            d = bv.ode.to_dict()
            d.update({"bedau": bv.outcome, "failed": list(bv.failed), "simulator": bv.simulator})
            v = bv.ode
        else:
            v = observer.ode_verdict(rec, fut, m, cfg["mode"], seeds=seeds)
            d = v.to_dict()
        d["trial"] = trial
        results.append(d)
        lines.append(f"{trial},{v.outcome},{v.threshold_bits},"
                     f"{'' if v.certificate is None else len(v.certificate)}")
    rw.write("verdicts.csv", "\n".join(lines) + "\n")
    rw.write_json("verdicts.json", results)
    return rw


def run_evolve(cfg: dict, out: Path) -> RunWriter:
    rw = RunWriter(out, "evolve", cfg)
    table = complexity.CtmTable.load(cfg["ctm"]) if cfg.get("ctm") else None
    if cfg.get("ctm"):
        rw.add_input(cfg["ctm"])
    summary = []
    growth = ["trial,t,k_compress,fitness_bits,cube_root_t"]
    for trial in range(cfg["trials"]):
        rng = trial_rng(cfg["seed"], trial)
        rw.seeds.append(trial_seed(cfg["seed"], trial))
        hist = evomodel.evolve(evomodel.initial_organism(cfg["budget"]), cfg["mutations"],
                               cfg["budget"], rng, cfg.get("s_max"), table,
                               seed=trial_seed(cfg["seed"], trial))
        name = "evolution.csv" if cfg["trials"] == 1 else f"evolution_{trial:03d}.csv"
        rw.write(name, hist.to_csv())
        growth += [f"{trial},{p.t},{p.k_hat},{p.fitness_bits},{p.cube_root:.6f}"
                   for p in evomodel.growth_curve(hist)]
        rho = evomodel.spearman_t_k(hist)
        summary.append({"trial": trial, "accepted": len(hist.accepted()),
                        "final_fitness_bits": hist.final.fitness.bit_length(),
                        "k_initial": hist.snapshots[0].k_compress,
                        "k_final": hist.final.k_compress,
                        "monotone": evomodel.fitness_strictly_increasing(hist),
                        "spearman": None if rho != rho else round(rho, 12)})
    rw.write("growth.csv", "\n".join(growth) + "\n")
    rw.write_json("summary.json", summary)
    return rw


def run_algonet(cfg: dict, out: Path) -> RunWriter:
    rw = RunWriter(out, "algonet", cfg)
    ns = _ints(cfg["ns"])
    rw.seeds.extend(algonet.hash_seed(cfg["seed"], n, t) for n in ns for t in range(cfg["trials"]))
    kinds = [cfg["topology"]] + [k for k in _ints_or_names(cfg["controls"]) if k != cfg["topology"]]
    curves = {}
    for kind in kinds:
        pts, rows = algonet.eeoe_curve(ns, kind, cfg["trials"], cfg["seed"],
                                       budget=cfg["budget"], protocol=cfg["protocol"])
        rw.write(f"eac_{kind}.csv", algonet.rows_csv(rows))
        rw.write(f"eeoe_{kind}.csv", algonet.curve_csv(pts))
        curves[kind] = [{"N": p.n, "mean": p.mean, "ci": p.ci} for p in pts]
    main = [p["mean"] for p in curves[cfg["topology"]]]
    rw.write_json("summary.json", {"curves": curves,
                                   "strictly_increasing": all(a < b for a, b in zip(main, main[1:]))})
    return rw


def _ints_or_names(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def run_ueinn(cfg: dict, out: Path) -> RunWriter:
    rw = RunWriter(out, "ueinn", cfg)
    atlas = ueinn.build_atlas(cfg["width"])
    rw.write("atlas.csv", atlas.to_csv())
    rep = ueinn.coupling_search(atlas, cfg["env_rule"], cfg["env_width"], cfg.get("e0") or None,
                                limit=cfg.get("limit") or None)
    ce = ueinn.ce_bound(atlas, cfg["t_r"])
    rw.write_json("search.json", {"atlas_sha256": atlas.sha256(), "t_p": atlas.t_p,
                                  "found": rep.found, "searched": rep.searched,
                                  "space": rep.space,
                                  "ce_bound_bits": ce.bits, "ce_bound_leading": ce.leading})
    return rw


def run_trend(cfg: dict, out: Path) -> RunWriter:
    rw = RunWriter(out, "aoie-trend", cfg)
    horizons = _ints(cfg["horizons"])
    length = max(horizons) + 1
    rw.seeds.append(trial_seed(cfg["seed"], 0))
    if cfg["generator"] == "evolution":
        states = trend.evolution_states(cfg["seed"], length, cfg["width"], cfg["stride"],
                                        cfg["budget"])
    elif cfg["generator"] == "algonet":
        states = trend.algonet_states(cfg["seed"], length, cfg["width"], cfg["n"])
    elif cfg["generator"] == "constant":
        states = trend.constant_states(cfg["width"], length)
    else:
        raise UsageError(f"unknown generator {cfg['generator']!r}")
    roster = trend.default_roster()
    if cfg["pre_extend"]:
        roster = {k: trend.pre_extended(v, states, cfg["t"], cfg["k"], horizons)
                  for k, v in roster.items()}
    res = trend.aoie_trend(states, roster, horizons, cfg["t"], cfg["k"])
    rw.write("states.csv", "t,state_bits\n" + "".join(f"{i},{s}\n" for i, s in enumerate(states)))
    rw.write("trend.csv", res.rows_csv())
    rw.write("t_e.csv", res.summary_csv())
    return rw


# --------------------------------------------------------------------------
# Parser

COMMON = {"seed": 0, "out": "runs/out"}

OBS = {"system": "eca", "rule": 110, "width": 8, "length": 16, "s0": "", "t": 3, "k": 1,
       "channel": "identity", "mask": "", "cells": "", "c_I": 4, "c_O": 4, "c_e": 4,
       "mode": "exact", "trials": 1}

DEFAULTS: dict[str, dict] = {
    "ctm": {"states": 2, "steps": 1000, "workers": 1},
    "perturb-graph": {"kind": "complete", "n": 16, "p": 0.5, "trials": 1, "deletions": 30,
                      "estimator": "compress", "graph": ""},
    "observe": dict(OBS),
    "verdict": dict(OBS, horizon=5, kind="ode"),
    "evolve": {"mutations": 10000, "budget": 1000, "trials": 1, "s_max": None, "ctm": ""},
    "algonet": {"ns": "8,16,32,64", "topology": "ba", "controls": "edgeless,ring", "trials": 30,
                "budget": 1000, "protocol": "diffusion"},
    "ueinn": {"width": 3, "env_rule": 30, "env_width": 3, "e0": "", "limit": 0, "t_r": 8},
    "aoie-trend": {"generator": "evolution", "horizons": "5,9,17,33", "t": 3, "k": 2,
                   "width": 8, "stride": 50, "budget": 1000, "n": 16, "pre_extend": False},
}

RUNNERS: dict[str, Callable[[dict, Path], RunWriter]] = {
    "ctm": run_ctm, "perturb-graph": run_perturb_graph, "observe": run_observe,
    "verdict": run_verdict, "evolve": run_evolve, "algonet": run_algonet,
    "ueinn": run_ueinn, "aoie-trend": run_trend,
}

# flag name -> (config key, type)
FLAGS: dict[str, list] = {
    "ctm": [("states", int), ("steps", int), ("workers", int)],
    "perturb-graph": [("kind", str), ("n", int), ("p", float), ("trials", int),
                      ("deletions", int), ("estimator", str), ("graph", str)],
    "observe": [("system", str), ("rule", int), ("width", int), ("length", int), ("s0", str),
                ("t", int), ("k", int), ("channel", str), ("mask", str), ("cells", str),
                ("c-i", float), ("c-o", float), ("c-e", float), ("mode", str), ("trials", int)],
    "evolve": [("mutations", int), ("budget", int), ("trials", int), ("s-max", int),
               ("ctm", str)],
    "algonet": [("ns", str), ("topology", str), ("controls", str), ("trials", int),
                ("budget", int), ("protocol", str)],
    "ueinn": [("width", int), ("env-rule", int), ("env-width", int), ("e0", str),
              ("limit", int), ("t-r", int)],
    "aoie-trend": [("generator", str), ("horizons", str), ("t", int), ("k", int),
                   ("width", int), ("stride", int), ("budget", int), ("n", int)],
}
FLAGS["verdict"] = FLAGS["observe"] + [("horizon", int), ("kind", str)]


def _key(flag: str) -> str:
    return {"c-i": "c_I", "c-o": "c_O", "c-e": "c_e"}.get(flag, flag.replace("-", "_"))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    p.add_argument("--config", default=argparse.SUPPRESS, help="TOML config file")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="emergelab", description="Algorithmic emergence lab.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def experiment(parent, name: str, kind: str, help_: str):
        p = parent.add_parser(name, help=help_)
        _add_common(p)
        for flag, typ in FLAGS[kind]:
            p.add_argument(f"--{flag}", dest=_key(flag), type=typ, default=argparse.SUPPRESS)
        if kind == "aoie-trend":
            p.add_argument("--pre-extend", dest="pre_extend", action="store_true",
                           default=argparse.SUPPRESS)
        p.set_defaults(kind_=kind)
        return p

    ctm = sub.add_parser("ctm", help="CTM tables")
    experiment(ctm.add_subparsers(dest="sub", required=True), "build", "ctm", "enumerate machines")
    pg = sub.add_parser("perturb", help="perturbation experiments")
    experiment(pg.add_subparsers(dest="sub", required=True), "graph", "perturb-graph",
               "reprogrammability profile of a graph")
    experiment(sub, "observe", "observe", "observation principle checks")
    experiment(sub, "verdict", "verdict", "emergence verdicts")
    experiment(sub, "evolve", "evolve", "cumulative evolution")
    experiment(sub, "algonet", "algonet", "algorithmic networks")
    experiment(sub, "ueinn", "ueinn", "isolated atlas and coupling search")
    experiment(sub, "aoie-trend", "aoie-trend", "finite-horizon emergence trend")
    rp = sub.add_parser("report", help="summarize a run directory")
    rp.add_argument("run_dir")
    rp.add_argument("--out", default=argparse.SUPPRESS)
    rp.set_defaults(kind_="report")
    return ap


def resolve_config(kind: str, args: dict) -> dict:
    cfg = dict(COMMON)
    cfg.update(DEFAULTS[kind])
    path = args.pop("config", None)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            data = tomllib.loads(p.read_text())
        except tomllib.TOMLDecodeError as exc:
            raise UsageError(f"invalid TOML in {path}: {exc}") from None
        section = data.get(kind) or data.get(kind.split("-")[0]) or {}
        for src in (data, section):
            for k, v in src.items():
                if isinstance(v, dict):
                    continue
                if k not in cfg:
                    raise UsageError(f"unknown config key {k!r} for {kind}")
                cfg[k] = v
    cfg.update(args)
    return cfg


def _error(code: str, message: str, status: int) -> int:
    print(json.dumps({"error": code, "message": message}, sort_keys=True), file=sys.stderr)
    return status


def cli_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    args = {k: v for k, v in vars(ns).items() if k not in ("cmd", "sub", "kind_")}
    kind = ns.kind_
    try:
        if kind == "report":
            from .report import report
            out = report(ns.run_dir, args.get("out"))
            print(out)
            return EXIT_OK
        cfg = resolve_config(kind, args)
        rw = RUNNERS[kind](cfg, Path(cfg["out"]))
        print(rw.finish())
        return EXIT_OK
    except UsageError as exc:
        return _error("UsageError", str(exc), EXIT_USAGE)
    except LabError as exc:
        return _error(exc.code, str(exc), EXIT_ERROR)


def main() -> None:
    sys.exit(cli_dispatch())

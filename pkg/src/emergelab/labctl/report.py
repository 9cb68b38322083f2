"""Turn a finished run directory into aggregate CSVs, SVG charts and a summary."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..errors import ReportError  # noqa: E402
from .runio import sha256_file  # noqa: E402

REQUIRED = ("kind", "config", "config_hash", "outputs")


def load_manifest(run_dir) -> dict:
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise ReportError(f"no run directory at {run_dir}")
    path = run_dir / "manifest.json"
    if not path.is_file():
        raise ReportError(f"{run_dir} has no manifest.json")
    try:
        manifest = json.loads(path.read_text())
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ReportError(f"corrupt manifest: {exc}") from None
    if not isinstance(manifest, dict) or any(k not in manifest for k in REQUIRED):
        raise ReportError("manifest is missing required fields")
    for name, digest in manifest["outputs"].items():
        f = run_dir / name
        if not f.is_file():
            raise ReportError(f"listed output {name} is missing")
        if sha256_file(f) != digest:
            raise ReportError(f"hash mismatch for {name}")
    return manifest


def _read_csv(path: Path) -> list[dict]:
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _csv(header: list, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _save(fig, path: Path) -> None:
    # Fixed hash salt and no date keep the SVG stable between regenerations.
    with matplotlib.rc_context({"svg.hashsalt": "emergelab", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _eeoe(run_dir: Path, out: Path, manifest: dict) -> list[str]:
    rows = []
    curves = {}
    for name in sorted(manifest["outputs"]):
        if name.startswith("eeoe_") and name.endswith(".csv"):
            kind = name[5:-4]
            pts = _read_csv(run_dir / name)
            curves[kind] = [(int(p["N"]), float(p["mean"]), float(p["ci"])) for p in pts]
            rows += [[kind, n, f"{m:.6f}", f"{c:.6f}"] for n, m, c in curves[kind]]
    (out / "eeoe_aggregate.csv").write_text(_csv(["topology", "N", "mean_eac", "ci95"], rows))
    fig, ax = plt.subplots(figsize=(6, 4))
    for kind, pts in sorted(curves.items()):
        ax.errorbar([p[0] for p in pts], [p[1] for p in pts], yerr=[p[2] for p in pts],
                    marker="o", capsize=3, label=kind)
    ax.set_xscale("log", base=2)
    ax.set_xlabel("N (nodes)")
    ax.set_ylabel("mean EAC (bits)")
    ax.set_title("Emergent algorithmic complexity vs network size")
    ax.legend()
    _save(fig, out / "eeoe.svg")
    return ["eeoe_aggregate.csv", "eeoe.svg"]


def _growth(run_dir: Path, out: Path, manifest: dict) -> list[str]:
    pts = _read_csv(run_dir / "growth.csv")
    by_trial: dict[int, list] = {}
    for p in pts:
        by_trial.setdefault(int(p["trial"]), []).append((int(p["t"]), int(p["k_compress"])))
    rows = [[tr, len(v), v[0][1], v[-1][1]] for tr, v in sorted(by_trial.items())]
    (out / "growth_aggregate.csv").write_text(
        _csv(["trial", "accepted_points", "k_initial", "k_final"], rows))
    fig, ax = plt.subplots(figsize=(6, 4))
    for tr, v in sorted(by_trial.items()):
        ax.step([x for x, _ in v], [y for _, y in v], where="post", lw=1, label=f"trial {tr}")
    ax.set_xlabel("mutations")
    ax.set_ylabel("compressed output size (bits)")
    ax.set_title("Organism complexity growth")
    if len(by_trial) <= 10:
        ax.legend(fontsize="small")
    _save(fig, out / "growth.svg")
    return ["growth_aggregate.csv", "growth.svg"]


def _trend(run_dir: Path, out: Path, manifest: dict) -> list[str]:
    pts = _read_csv(run_dir / "trend.csv")
    by_obs: dict[str, list] = {}
    for p in pts:
        by_obs.setdefault(p["observer"], []).append(
            (int(p["horizon"]), 1 if p["outcome"] == "Emergent" else 0))
    rows = [[o, h, e] for o, v in sorted(by_obs.items()) for h, e in v]
    (out / "trend_aggregate.csv").write_text(_csv(["observer", "horizon", "emergent"], rows))
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, (o, v) in enumerate(sorted(by_obs.items())):
        ax.plot([h for h, _ in v], [e + 0.03 * i for _, e in v], marker="o", label=o)
    ax.set_yticks([0, 1])
    ax.set_yticklabels(["NotEmergent", "Emergent"])
    ax.set_xlabel("horizon t'")
    ax.set_title("Exact-mode verdict per observer")
    ax.legend()
    _save(fig, out / "trend.svg")
    return ["trend_aggregate.csv", "trend.svg"]


PLOTTERS = {"algonet": _eeoe, "evolve": _growth, "aoie-trend": _trend}


def report(run_dir, out_dir: Optional[str] = None) -> Path:
    """Write ``report/`` (or ``out_dir``) for the run; returns summary.md's path."""
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    out = Path(out_dir) if out_dir else run_dir / "report"
    out.mkdir(parents=True, exist_ok=True)
    made = []
    plot = PLOTTERS.get(manifest["kind"])
    if plot is not None:
        made = plot(run_dir, out, manifest)
    outputs = sorted(manifest["outputs"].items())
    (out / "outputs.csv").write_text(_csv(["file", "sha256"], [list(o) for o in outputs]))
    lines = [f"# Run report: {manifest['kind']}", "",
             f"- config hash: `{manifest['config_hash']}`",
             f"- artifact version: {manifest.get('artifact_version', 'unknown')}",
             f"- trials: {len(manifest.get('trial_seeds', []))}", "",
             "## Configuration", "", "```json",
             json.dumps(manifest["config"], sort_keys=True, indent=2), "```", "",
             "## Data outputs", ""]
    lines += [f"- `{name}`" for name, _ in outputs]
    if made:
        lines += ["", "## Report files", ""] + [f"- `{m}`" for m in made]
    if manifest["kind"] == "aoie-trend":
        lines += ["", "t_e values are finite-horizon evidence only; the asymptotic claim "
                      "cannot be established by any finite run."]
    path = out / "summary.md"
    path.write_text("\n".join(lines) + "\n")
    return path

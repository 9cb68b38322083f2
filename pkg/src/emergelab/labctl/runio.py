"""Run directories: seeded streams, hashed outputs, manifests."""
from __future__ import annotations

import hashlib
import json
import random
import time
from pathlib import Path
from typing import Optional

from .. import __version__


def trial_seed(seed: int, trial: int) -> int:
    digest = hashlib.sha256(f"{seed}:{trial}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def trial_rng(seed: int, trial: int) -> random.Random:
    return random.Random(trial_seed(seed, trial))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def config_hash(config: dict) -> str:
    """Hash of everything that can influence the data (the output path cannot)."""
    data = {k: v for k, v in config.items() if k != "out"}
    return sha256_bytes(json.dumps(data, sort_keys=True, default=str).encode())


class RunWriter:
    """Collects outputs of one experiment and writes its manifest.

    Data files are byte-stable for a fixed config; wall-clock time goes to
    ``timing.txt``, which the manifest lists but does not hash.
    """

    def __init__(self, out_dir, kind: str, config: dict):
        self.dir = Path(out_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.kind = kind
        self.config = config
        self.outputs: dict[str, str] = {}
        self.inputs: dict[str, str] = {}
        self.seeds: list = []
        self.started = time.perf_counter()

    def write(self, name: str, text: str) -> Path:
        path = self.dir / name
        path.parent.mkdir(parents=True, exist_ok=True)
        data = text.encode()
        path.write_bytes(data)
        self.outputs[name] = sha256_bytes(data)
        return path

    def write_json(self, name: str, obj) -> Path:
        return self.write(name, json.dumps(obj, sort_keys=True, indent=2, default=str) + "\n")

    def add_input(self, path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def finish(self, extra: Optional[dict] = None) -> Path:
        manifest = {
            "kind": self.kind,
            "artifact_version": __version__,
            "config": self.config,
            "config_hash": config_hash(self.config),
            "inputs": self.inputs,
            "trial_seeds": self.seeds,
            "outputs": dict(sorted(self.outputs.items())),
            "volatile": ["timing.txt"],
        }
        if extra:
            manifest.update(extra)
        (self.dir / "timing.txt").write_text(
            f"wall_seconds={time.perf_counter() - self.started:.3f}\n")
        path = self.dir / "manifest.json"
        path.write_text(json.dumps(manifest, sort_keys=True, indent=2, default=str) + "\n")
        return path

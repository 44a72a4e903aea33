"""Output files: JSON lines, CSV tables and the per-directory manifest."""

from __future__ import annotations

import csv
import json
import platform
import time
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from torquegrasp import __version__
from torquegrasp.learn.checkpoint import FORMAT_VERSION as CHECKPOINT_FORMAT

METRICS_FORMAT = 1
TRAJECTORY_FORMAT = 1
MANIFEST_NAME = "manifest.json"


def _plain(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, "value") and isinstance(getattr(value, "value"), str):
        return value.value
    return value


def dumps(obj: Any) -> str:
    # json writes floats with repr, so values survive a round trip bit for bit
    return json.dumps(_plain(obj), sort_keys=True, allow_nan=True)


class JsonlWriter:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, "w")

    def write(self, obj: Mapping[str, Any]) -> None:
        self._fh.write(dumps(obj) + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_jsonl(path: str | Path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(header))
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else _plain(v) for v in row])
            n += 1
    return n


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_manifest(out_dir: str | Path, command: str, seed: int, config: Mapping[str, Any],
                   outputs: Sequence[str] = ()) -> Path:
    """The one file allowed to differ between identical runs (it carries timestamps)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "seed": seed,
        "package_version": __version__,
        "formats": {"checkpoint": CHECKPOINT_FORMAT, "metrics": METRICS_FORMAT,
                    "trajectory": TRAJECTORY_FORMAT},
        "config": config,
        "outputs": sorted(outputs),
        "created_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    path = out / MANIFEST_NAME
    path.write_text(json.dumps(_plain(manifest), indent=2, sort_keys=True) + "\n")
    return path

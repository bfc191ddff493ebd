"""JSON run-logs written next to every file-producing subcommand's outputs."""

from __future__ import annotations

import datetime as dt
import hashlib
import json
import os
from pathlib import Path

from . import __version__


def _timestamp() -> str:
    # honour the reproducible-builds convention so repeated runs can be byte-identical
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = (dt.datetime.fromtimestamp(int(epoch), dt.timezone.utc) if epoch
              else dt.datetime.now(dt.timezone.utc))
    return moment.isoformat(timespec="seconds")


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _entry(path) -> dict:
    p = Path(path)
    return {"path": str(path), "sha256": file_digest(p) if p.is_file() else None}


class RunLog:
    def __init__(self, command: str, seed: int, params: dict):
        self.command = command
        self.seed = seed
        self.params = params
        self.inputs: list = []
        self.outputs: list = []
        self.started = _timestamp()

    def add_inputs(self, paths):
        self.inputs.extend(str(p) for p in paths)

    def add_outputs(self, paths):
        self.outputs.extend(str(p) for p in paths)

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "version": __version__,
            "seed": self.seed,
            "params": self.params,
            "inputs": [_entry(p) for p in self.inputs],
            "outputs": [_entry(p) for p in self.outputs],
            "started": self.started,
            "finished": _timestamp(),
        }

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

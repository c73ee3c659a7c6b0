"""Run ledger: a JSON record of what a run did and produced.

Given identical configuration and seeds, two runs write ledgers that are
byte-identical except for the "timings" section.
"""

import json
from dataclasses import dataclass, field

from . import backend


@dataclass
class RunLedger:
    command: str
    config: dict
    epochs: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        self.config = dict(self.config)
        self.config.setdefault("backend", backend.BACKEND)

    def to_dict(self):
        return {
            "command": self.command,
            "config": self.config,
            "epochs": self.epochs,
            "tables": self.tables,
            "artifacts": self.artifacts,
            "timings": self.timings,
        }

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")


def load_ledger(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def comparable(ledger_dict: dict) -> dict:
    """The ledger minus its volatile timing section."""
    out = dict(ledger_dict)
    out.pop("timings", None)
    return out

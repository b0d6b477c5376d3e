"""Reproducibility shell: angle parsing, deterministic RNG streams, CSV
and JSON-manifest output.

CSV numbers are written with 17 significant digits so every double round
trips exactly; two runs of the same manifest produce byte-identical CSV
bodies.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

PACKAGE_VERSION = "0.1.0"

_ANGLE_RE = re.compile(
    r"^\s*(?P<sign>[+-]?)\s*(?P<coeff>\d+(?:\.\d*)?)?\s*pi\s*(?:/\s*(?P<div>\d+(?:\.\d*)?))?\s*$",
    re.IGNORECASE,
)


def parse_angle(text) -> float:
    """Angle from a pi-multiple string like '5pi/8', '-pi', '2pi', 'pi/2',
    or a plain number in radians."""
    if isinstance(text, (int, float)):
        return float(text)
    m = _ANGLE_RE.match(text)
    if m:
        value = np.pi * float(m.group("coeff") or 1.0)
        if m.group("div"):
            divisor = float(m.group("div"))
            if divisor == 0:
                raise ValueError(f"zero divisor in angle {text!r}")
            value /= divisor
        return -value if m.group("sign") == "-" else value
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"cannot parse angle {text!r}; use radians or forms like '5pi/8'") from None


def format_float(x: float) -> str:
    return f"{x:.17g}"


def write_csv(path, columns: list[str], rows) -> None:
    """Headered CSV; floats at 17 significant digits, None as empty field."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            cells = []
            for value in row:
                if value is None:
                    cells.append("")
                elif isinstance(value, (int, np.integer)):
                    cells.append(str(int(value)))
                elif isinstance(value, str):
                    cells.append(value)
                else:
                    cells.append(format_float(float(value)))
            fh.write(",".join(cells) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read a headered numeric CSV back; empty fields become NaN."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.genfromtxt(path, delimiter=",", skip_header=1, missing_values="", filling_values=np.nan)
    data = np.atleast_2d(data)
    return header, data


def job_rng(seed: int, job_index: int) -> np.random.Generator:
    """Independent stream for one job, keyed by (seed, job_index) so results
    never depend on execution order."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(job_index,)))


@dataclass
class RunManifest:
    """Everything needed to re-derive an output file."""

    subcommand: str
    parameters: dict
    seed: int
    outputs: list[str] = field(default_factory=list)
    version: str = PACKAGE_VERSION
    started_utc: str = ""
    duration_s: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        return cls(**json.loads(text))

    def write(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        return cls.from_json(Path(path).read_text())

"""Render the simulator's CSV outputs as figures.

Rendering is a pure function of the CSV bytes and the figure spec: fixed
styling, no timestamps, so identical inputs produce pixel-identical
images.  This package never recomputes physics; it only reads the
delimited files the simulator writes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("heatmap", "lines", "scatter", "scaling")

# Pinned column schemas of the simulator's CSV files, by logical content.
KNOWN_SCHEMAS = {
    "sweep_walker": ["theta1", "theta2", "max_prob", "argmax_t", "search_time", "job"],
    "sweep_defect": ["def_theta1", "def_theta2", "max_prob", "argmax_t", "search_time", "w_top1", "w_top2"],
    "evolve": ["t", "p_def"],
    "scaling": ["L", "n_sites", "search_time", "argmax_t", "max_prob"],
    "spectrum": ["index", "energy", "d_abs", "i_abs", "s", "pair_index"],
    "gapmap": ["theta1", "theta2", "gap0_min", "gap0_max", "gap_pi_min", "gap_pi_max"],
    "chern": ["theta1", "theta2", "chern_plus", "chern_minus"],
    "baseline": ["t", "p_def", "p_classical"],
}

_STYLE = {
    "figure.figsize": (6.0, 4.5),
    "figure.dpi": 110,
    "savefig.dpi": 110,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
}


class SchemaError(ValueError):
    """CSV header does not match the pinned schema."""


@dataclass(frozen=True)
class SeriesSpec:
    """One curve of a lines figure: column ``y`` of input file ``file``."""

    y: str
    file: int = 0
    label: str | None = None

    @classmethod
    def from_dict(cls, raw) -> "SeriesSpec":
        if isinstance(raw, str):
            return cls(y=raw)
        return cls(y=raw["y"], file=int(raw.get("file", 0)), label=raw.get("label"))


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: list[str]
    output: str
    x: str | None = None
    y: str | None = None
    value: str | None = None
    series: list[SeriesSpec] = field(default_factory=list)
    xlabel: str | None = None
    ylabel: str | None = None
    title: str | None = None
    log_x: bool = False
    log_y: bool = False
    angles_in_pi: bool = False
    expect_schema: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise ValueError("figure spec needs at least one input CSV")

    @classmethod
    def from_dict(cls, raw: dict) -> "FigureSpec":
        known = {
            "kind", "inputs", "output", "x", "y", "value", "series",
            "xlabel", "ylabel", "title", "log_x", "log_y", "angles_in_pi", "expect_schema",
        }
        extra = set(raw) - known
        if extra:
            raise ValueError(f"unknown figure-spec keys: {sorted(extra)}")
        raw = dict(raw)
        raw["series"] = [SeriesSpec.from_dict(s) for s in raw.get("series", [])]
        return cls(**raw)

    @classmethod
    def from_file(cls, path) -> "FigureSpec":
        spec = cls.from_dict(json.loads(Path(path).read_text()))
        base = Path(path).parent
        inputs = [str(p) if Path(p).is_absolute() else str(base / p) for p in spec.inputs]
        output = spec.output if Path(spec.output).is_absolute() else str(base / spec.output)
        return cls(**{**spec.__dict__, "inputs": inputs, "output": output, "series": spec.series})


def read_table(path, expect_schema: str | None = None):
    """Headered CSV as (columns dict of float arrays); empty cells are NaN."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    if expect_schema is not None:
        expected = KNOWN_SCHEMAS[expect_schema]
        missing = [c for c in expected if c not in header]
        extra = [c for c in header if c not in expected]
        if missing or extra:
            raise SchemaError(
                f"{path.name}: header does not match the {expect_schema!r} schema"
                + (f"; missing columns {missing}" if missing else "")
                + (f"; unexpected columns {extra}" if extra else "")
            )
    data = np.genfromtxt(path, delimiter=",", skip_header=1, missing_values="", filling_values=np.nan)
    data = np.atleast_2d(data)
    if data.shape[1] != len(header):
        raise SchemaError(f"{path.name}: rows have {data.shape[1]} fields, header has {len(header)}")
    return {name: data[:, i] for i, name in enumerate(header)}


def _column(table: dict, name: str, path: str) -> np.ndarray:
    if name not in table:
        raise SchemaError(f"{Path(path).name}: missing column {name!r} (has {sorted(table)})")
    return table[name]


def _pi_ticks(ax, axis: str):
    lo, hi = (ax.get_xlim() if axis == "x" else ax.get_ylim())
    ticks = np.arange(np.ceil(lo / (np.pi / 2)), np.floor(hi / (np.pi / 2)) + 1) * (np.pi / 2)
    labels = []
    for t in ticks:
        mult = t / np.pi
        if abs(mult) < 1e-12:
            labels.append("0")
        else:
            labels.append(f"{mult:g}$\\pi$")
    if axis == "x":
        ax.set_xticks(ticks, labels)
    else:
        ax.set_yticks(ticks, labels)


def _render_heatmap(spec: FigureSpec, ax):
    table = read_table(spec.inputs[0], spec.expect_schema)
    x = _column(table, spec.x or "theta1", spec.inputs[0])
    y = _column(table, spec.y or "theta2", spec.inputs[0])
    v = _column(table, spec.value or "max_prob", spec.inputs[0])
    xs = np.unique(x)
    ys = np.unique(y)
    grid = np.full((len(xs), len(ys)), np.nan)
    xi = np.searchsorted(xs, x)
    yi = np.searchsorted(ys, y)
    grid[xi, yi] = v
    mesh = ax.pcolormesh(xs, ys, np.ma.masked_invalid(grid).T, shading="nearest", cmap="inferno")
    ax.figure.colorbar(mesh, ax=ax, label=spec.value or "max_prob")
    if spec.angles_in_pi:
        _pi_ticks(ax, "x")
        _pi_ticks(ax, "y")


def _render_lines(spec: FigureSpec, ax):
    tables = [read_table(p, spec.expect_schema if i == 0 else None) for i, p in enumerate(spec.inputs)]
    x_name = spec.x or "t"
    series = spec.series or [SeriesSpec(y=spec.y or "p_def")]
    for s in series:
        if s.file >= len(tables):
            raise ValueError(f"series references input {s.file}, only {len(tables)} given")
        table = tables[s.file]
        path = spec.inputs[s.file]
        x = _column(table, x_name, path)
        y = _column(table, s.y, path)
        ax.plot(x, y, lw=1.2, label=s.label or s.y)
    if len(series) > 1:
        ax.legend(frameon=False)


def _render_scatter(spec: FigureSpec, ax):
    table = read_table(spec.inputs[0], spec.expect_schema)
    x = _column(table, spec.x or "energy", spec.inputs[0])
    y = _column(table, spec.y or "s", spec.inputs[0])
    ax.scatter(x, y, s=12, alpha=0.8, edgecolors="none")


def _render_scaling(spec: FigureSpec, ax):
    table = read_table(spec.inputs[0], spec.expect_schema)
    x = _column(table, spec.x or "L", spec.inputs[0])
    y = _column(table, spec.y or "search_time", spec.inputs[0])
    ax.plot(x, y, marker="o", ms=4, lw=1.2)


_RENDERERS = {
    "heatmap": _render_heatmap,
    "lines": _render_lines,
    "scatter": _render_scatter,
    "scaling": _render_scaling,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure; returns the output path."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        try:
            _RENDERERS[spec.kind](spec, ax)
            if spec.log_x:
                ax.set_xscale("log")
            if spec.log_y:
                ax.set_yscale("log")
            if spec.xlabel:
                ax.set_xlabel(spec.xlabel)
            if spec.ylabel:
                ax.set_ylabel(spec.ylabel)
            if spec.title:
                ax.set_title(spec.title)
            out = Path(spec.output)
            out.parent.mkdir(parents=True, exist_ok=True)
            # strip writer metadata so identical inputs give identical bytes
            fig.savefig(out, metadata={"Software": None})
        finally:
            plt.close(fig)
    return out

"""
Run artifacts: CSV tables, JSON reports, SVG plots and the manifest that
lists them with their hashes. The manifest is always written last.
"""
import csv
import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from . import __version__  # noqa: E402
from .config import LabConfig  # noqa: E402
from .errors import OutputError  # noqa: E402
from .reports import dumps  # noqa: E402

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "{:.17g}"
MANIFEST = "manifest.json"

matplotlib.rcParams.update(
    {
        "font.family": "DejaVu Sans",
        "axes.unicode_minus": False,
        "svg.hashsalt": "mixed-kpp",
        "svg.fonttype": "path",
    }
)


@dataclass
class Table:
    columns: Sequence[str]
    rows: List[Sequence[Any]] = field(default_factory=list)

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values for {len(self.columns)} columns")
        self.rows.append(values)

    @classmethod
    def from_columns(cls, **columns) -> "Table":
        names = list(columns)
        values = [np.ravel(np.asarray(columns[n])) for n in names]
        if len({len(v) for v in values}) > 1:
            raise ValueError("columns have different lengths")
        return cls(names, [tuple(row) for row in zip(*values)])


@dataclass
class Series:
    label: str
    x: Sequence[float]
    y: Sequence[float]
    style: str = "-"


@dataclass
class Plot:
    title: str
    xlabel: str
    ylabel: str
    series: List[Series] = field(default_factory=list)
    logx: bool = False
    logy: bool = False


@dataclass
class RunResults:
    """Everything a subcommand produced, keyed by output file name."""

    command: str
    tables: Dict[str, Table] = field(default_factory=dict)
    reports: Dict[str, Any] = field(default_factory=dict)
    plots: Dict[str, Plot] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(getattr(r, "passed", True) for r in self.reports.values())


@dataclass
class RunManifest:
    tool_version: str
    command: str
    config: Dict[str, Any]
    input_hash: str
    outputs: List[Dict[str, str]]
    timings: Dict[str, float]
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "config": self.config,
            "input_hash": self.input_hash,
            "outputs": self.outputs,
            "timings": self.timings,
            "pass": self.passed,
        }

    def digest(self, name: str) -> str:
        for entry in self.outputs:
            if entry["path"] == name:
                return entry["sha256"]
        raise KeyError(name)


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT.format(float(value))
    return str(value)


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_csv(path: Path, table: Table) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])


def write_json(path: Path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n", encoding="utf-8")


def write_svg(path: Path, plot: Plot) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.0), constrained_layout=True)
    try:
        for s in plot.series:
            ax.plot(np.asarray(s.x, dtype=float), np.asarray(s.y, dtype=float), s.style, label=s.label)
        if plot.logx:
            ax.set_xscale("log")
        if plot.logy:
            ax.set_yscale("log")
        ax.set_title(plot.title)
        ax.set_xlabel(plot.xlabel)
        ax.set_ylabel(plot.ylabel)
        ax.grid(True, alpha=0.3)
        if len(plot.series) > 1:
            ax.legend(loc="best", fontsize=8)
        # no Date entry, so reruns give identical bytes
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)


def emit_outputs(
    results: RunResults,
    out_dir: Path,
    config: Optional[LabConfig] = None,
    timings: Optional[Dict[str, float]] = None,
    plots: bool = True,
) -> RunManifest:
    out_dir = Path(out_dir)
    written: List[Tuple[str, Path]] = []
    current = out_dir
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name in sorted(results.tables):
            current = out_dir / name
            write_csv(current, results.tables[name])
            written.append((name, current))
        for name in sorted(results.reports):
            current = out_dir / name
            write_json(current, results.reports[name])
            written.append((name, current))
        if plots:
            for name in sorted(results.plots):
                current = out_dir / name
                write_svg(current, results.plots[name])
                written.append((name, current))

        manifest = RunManifest(
            tool_version=__version__,
            command=results.command,
            config=config.canonical if config is not None else {},
            input_hash=config.config_hash if config is not None else "",
            outputs=[{"path": name, "sha256": file_digest(path)} for name, path in written],
            timings={k: round(float(v), 6) for k, v in sorted((timings or {}).items())},
            passed=results.passed,
        )
        current = out_dir / MANIFEST
        write_json(current, manifest)
    except OSError as err:
        raise OutputError(f"could not write {current}: {err.strerror or err}") from err
    logger.info("wrote %d files and %s to %s", len(written), MANIFEST, out_dir)
    return manifest

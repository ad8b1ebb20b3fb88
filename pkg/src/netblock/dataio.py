"""Reading region-partitioned CSV data, preprocessing, and result documents."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bench import ExperimentResult
from .errors import DataError, DomainError, LayoutMismatchError, ParseError
from .linalg_stats import ar1_whiten, as_panel, center, center_and_detrend, pca_summarize
from .multiplicity import NetworkEstimate
from .pairtests import TestOutcome

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class RegionLayout:
    names: tuple[str, ...]
    widths: tuple[int, ...]

    def __post_init__(self):
        if len(self.names) != len(self.widths):
            raise LayoutMismatchError("every region needs exactly one width")
        if len(set(self.names)) != len(self.names):
            raise LayoutMismatchError("region names must be unique")
        if any(w < 1 for w in self.widths):
            raise LayoutMismatchError("region widths must be positive")

    @property
    def p(self) -> int:
        return len(self.names)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(np.concatenate([[0], np.cumsum(self.widths)]).astype(int).tolist())

    @property
    def total(self) -> int:
        return int(sum(self.widths))

    def split(self, x: np.ndarray) -> list[np.ndarray]:
        if x.shape[1] != self.total:
            raise LayoutMismatchError(
                f"layout widths sum to {self.total} but the data has {x.shape[1]} columns"
            )
        off = self.offsets
        return [x[:, off[k]:off[k + 1]].copy() for k in range(self.p)]

    def with_widths(self, widths) -> "RegionLayout":
        return RegionLayout(self.names, tuple(int(w) for w in widths))


def _parse_float(text: str, row: int, col: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", row, col) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", row, col)
    return value


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_layout(path) -> RegionLayout:
    """Parse ``name,width`` lines (an optional header line is skipped)."""
    names, widths = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ParseError("layout lines must read 'name,width'", lineno)
            name, width = row[0].strip(), row[1].strip()
            if not width.isdigit():
                if lineno == 1 and not names:
                    continue
                raise ParseError(f"width {width!r} is not a positive integer", lineno, 2)
            names.append(name)
            widths.append(int(width))
    if not names:
        raise ParseError("layout file lists no regions")
    return RegionLayout(tuple(names), tuple(widths))


def read_matrix_csv(path) -> np.ndarray:
    """Numeric CSV with an optional header row; rows are scans."""
    rows = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if not rows and lineno == 1 and not all(_is_number(c) for c in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"expected {width} fields, found {len(row)}", lineno)
            rows.append([_parse_float(c, lineno, k) for k, c in enumerate(row, start=1)])
    if not rows:
        raise ParseError(f"{path} contains no data rows")
    return np.array(rows, dtype=float)


def read_panel_csv(path, layout_path) -> tuple[list[np.ndarray], RegionLayout]:
    layout = read_layout(layout_path)
    x = read_matrix_csv(path)
    panels = layout.split(x)
    for name, panel in zip(layout.names, panels):
        try:
            center(as_panel(panel, f"region {name}"))
        except DomainError as exc:
            raise DataError(str(exc)) from None
    return panels, layout


def preprocess(panels, detrend: bool = False, whiten: bool = False,
               pca_fraction: float | None = None) -> list[np.ndarray]:
    """De-mean every region, then optionally de-trend, AR(1)-whiten and
    reduce each region to the principal components that carry
    ``pca_fraction`` of its variance."""
    out = []
    for panel in panels:
        x = center_and_detrend(panel) if detrend else center(panel)
        if whiten:
            x, _ = ar1_whiten(x)
        if pca_fraction is not None:
            x = pca_summarize(x, pca_fraction).components
        out.append(x)
    return out


@dataclass(eq=True)
class ResultDocument:
    command: str
    seed: int | None = None
    version: str = __version__
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )
    spec: dict = field(default_factory=dict)
    regions: list[str] = field(default_factory=list)
    outcomes: list[TestOutcome] = field(default_factory=list)
    network: NetworkEstimate | None = None
    experiment: ExperimentResult | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "timestamp": self.timestamp,
            "spec": self.spec,
            "regions": list(self.regions),
            "outcomes": [o.to_dict() for o in self.outcomes],
            "network": None if self.network is None else self.network.to_dict(),
            "experiment": None if self.experiment is None else self.experiment.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResultDocument":
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ParseError(f"unsupported schema_version {d.get('schema_version')!r}")
        return cls(
            command=d["command"],
            seed=d.get("seed"),
            version=d["version"],
            timestamp=d["timestamp"],
            spec=d.get("spec", {}),
            regions=list(d.get("regions", [])),
            outcomes=[TestOutcome.from_dict(o) for o in d.get("outcomes", [])],
            network=None if d.get("network") is None else NetworkEstimate.from_dict(d["network"]),
            experiment=(None if d.get("experiment") is None
                        else ExperimentResult.from_dict(d["experiment"])),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "ResultDocument":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid result document: {exc.msg}", exc.lineno, exc.colno) from None
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ResultDocument":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


def format_adjacency(adj: np.ndarray, names) -> str:
    adj = np.asarray(adj, dtype=bool)
    lines = ["# adjacency\t" + "\t".join(names)]
    for name, row in zip(names, adj):
        lines.append(name + "\t" + "\t".join("1" if v else "0" for v in row))
    lines.append("# edges")
    s, t = np.nonzero(np.triu(adj, 1))
    lines.extend(f"{names[i]},{names[j]}" for i, j in zip(s, t))
    return "\n".join(lines) + "\n"


def read_adjacency(path) -> np.ndarray:
    """0/1 grid, optionally with the labelled layout written by :func:`format_adjacency`."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("# edges"):
                break
            if line.startswith("#"):
                continue
            cells = line.replace(",", "\t").split("\t")
            if cells and not _is_number(cells[0]):
                cells = cells[1:]
            try:
                rows.append([int(c) for c in cells])
            except ValueError:
                raise ParseError("adjacency entries must be 0 or 1", lineno) from None
    adj = np.array(rows, dtype=int)
    if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or not np.isin(adj, (0, 1)).all():
        raise ParseError(f"{path} is not a square 0/1 matrix")
    return adj.astype(bool)

"""Embedding-file and report serialization, plus run configuration.

Embedding files are UTF-8 text. The first line is a header of ``key=value``
pairs in a fixed order::

    format_version=1 dim=4 total_classes=6 base_classes=2 sessions=2 way=2 shot=1

and every following line is ``split session class_id v1 ... vd`` with
``split`` one of ``train``/``test``. Floats are written with ``repr`` so a
write/read round trip is bit-exact.
"""

from __future__ import annotations

import csv
import io as _io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from .core import DatasetInvalid, ProtocolConfig, SessionDataset, Split, StrategyConfig, validate
from .protocol import ProtocolReport
from .synth import SynthSpec

FORMAT_VERSION = 1
HEADER_KEYS = ("format_version", "dim", "total_classes", "base_classes", "sessions", "way", "shot")

# Plain decimal or scientific notation only: no underscores, separators, nan or inf.
_FLOAT_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_INT_RE = re.compile(r"^[+-]?\d+$")

PathLike = Union[str, Path]


class DatasetFormatError(ValueError):
    """Raised for unparseable embedding files; the message names the line."""


def _parse_header(line: str) -> dict:
    fields = {}
    for tok in line.split():
        if "=" not in tok:
            raise DatasetFormatError(f"malformed header: token {tok!r} is not key=value")
        key, value = tok.split("=", 1)
        if key in fields:
            raise DatasetFormatError(f"malformed header: duplicate field {key!r}")
        if key not in HEADER_KEYS:
            raise DatasetFormatError(f"malformed header: unknown field {key!r}")
        if not _INT_RE.match(value):
            raise DatasetFormatError(f"malformed header: {key}={value!r} is not an integer")
        fields[key] = int(value)
    missing = [k for k in HEADER_KEYS if k not in fields]
    if missing:
        raise DatasetFormatError(f"malformed header: missing field(s) {', '.join(missing)}")
    if fields["format_version"] != FORMAT_VERSION:
        raise DatasetFormatError(f"unsupported format_version {fields['format_version']}")
    return fields


def parse_dataset(text: str) -> SessionDataset:
    lines = text.splitlines()
    if not lines:
        raise DatasetFormatError("malformed header: empty file")
    hdr = _parse_header(lines[0])
    try:
        cfg = ProtocolConfig(**{k: hdr[k] for k in HEADER_KEYS[1:]})
    except ValueError as e:
        raise DatasetFormatError(f"malformed header: {e}") from None
    d = cfg.dim
    rows = {"train": [[] for _ in range(cfg.sessions + 1)], "test": [[] for _ in range(cfg.sessions + 1)]}
    labels = {"train": [[] for _ in range(cfg.sessions + 1)], "test": [[] for _ in range(cfg.sessions + 1)]}
    for lineno, line in enumerate(lines[1:], start=2):
        toks = line.split()
        if not toks:
            continue
        row = lineno - 1
        if len(toks) != d + 3:
            raise DatasetFormatError(f"row {row} (line {lineno}): expected {d} values, got {len(toks) - 3}")
        split, session, cls = toks[:3]
        if split not in rows:
            raise DatasetFormatError(f"row {row} (line {lineno}): split must be train or test, got {split!r}")
        if not _INT_RE.match(session) or not _INT_RE.match(cls):
            raise DatasetFormatError(f"row {row} (line {lineno}): session and class_id must be integers")
        t, c = int(session), int(cls)
        if not 0 <= t <= cfg.sessions:
            raise DatasetFormatError(f"row {row} (line {lineno}): session {t} outside [0, {cfg.sessions}]")
        if not 0 <= c < cfg.total_classes:
            raise DatasetFormatError(f"row {row} (line {lineno}): class_id {c} outside [0, {cfg.total_classes})")
        if split == "train" and cfg.session_of_class(c) != t:
            raise DatasetFormatError(
                f"row {row} (line {lineno}): class {c} belongs to session {cfg.session_of_class(c)}, not {t}")
        vals = toks[3:]
        for j, v in enumerate(vals):
            if not _FLOAT_RE.match(v):
                raise DatasetFormatError(f"row {row} (line {lineno}): value {j + 1} {v!r} is not a finite decimal")
        rows[split][t].append([float(v) for v in vals])
        labels[split][t].append(c)

    def splits(name):
        return [Split(np.array(r, dtype=np.float64).reshape(-1, d), np.array(l, dtype=np.int64))
                for r, l in zip(rows[name], labels[name])]

    return SessionDataset(cfg, splits("train"), splits("test"))


def load_dataset(path: PathLike) -> SessionDataset:
    """Parse and validate an embedding file.

    Raises DatasetFormatError on parse failures and DatasetInvalid (carrying
    the ValidationReport) when the parsed dataset breaks an invariant.
    """
    ds = parse_dataset(Path(path).read_text(encoding="utf-8"))
    report = validate(ds)
    if not report.ok:
        raise DatasetInvalid(report)
    return ds


def format_dataset(dataset: SessionDataset) -> str:
    cfg = dataset.config
    hdr = dict(format_version=FORMAT_VERSION, dim=cfg.dim, total_classes=cfg.total_classes,
               base_classes=cfg.base_classes, sessions=cfg.sessions, way=cfg.way, shot=cfg.shot)
    out = [" ".join(f"{k}={hdr[k]}" for k in HEADER_KEYS)]
    for name, splits in (("train", dataset.train), ("test", dataset.test)):
        for t, s in enumerate(splits):
            for x, c in zip(s.features, s.labels):
                out.append(f"{name} {t} {int(c)} " + " ".join(repr(float(v)) for v in x))
    return "\n".join(out) + "\n"


def write_dataset(dataset: SessionDataset, path: PathLike) -> None:
    Path(path).write_text(format_dataset(dataset), encoding="utf-8")


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


CSV_COLUMNS = ("session", "overall", "incremental", "n_test", "n_test_inc")


def report_to_csv(report: ProtocolReport) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in report.sessions:
        w.writerow([s.session, _fmt(s.overall_accuracy), _fmt(s.incremental_accuracy),
                    s.n_test, s.n_test_incremental])
    return buf.getvalue()


def report_to_json(report: ProtocolReport) -> str:
    # json uses repr for floats: shortest round-tripping form, well over 10 digits.
    return json.dumps(report.to_dict(), indent=2, sort_keys=False) + "\n"


def write_report(report: ProtocolReport, path: PathLike, format: str = "csv") -> None:
    if format == "csv":
        text = report_to_csv(report)
    elif format == "json":
        text = report_to_json(report)
    else:
        raise ValueError(f"unknown report format {format!r}")
    Path(path).write_text(text, encoding="utf-8")


def read_report_csv(path: PathLike) -> List[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [{
        "session": int(r["session"]),
        "overall": float(r["overall"]),
        "incremental": None if r["incremental"] == "" else float(r["incremental"]),
        "n_test": int(r["n_test"]),
        "n_test_inc": int(r["n_test_inc"]),
    } for r in rows]


@dataclass
class RunConfig:
    """Everything needed to reproduce one protocol run."""

    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    dataset_path: Optional[str] = None
    synth: Optional[SynthSpec] = None
    seed: Optional[int] = None
    chunk: int = 0
    update_at_base: bool = True
    report_path: Optional[str] = None
    report_format: str = "csv"

    def __post_init__(self):
        if (self.dataset_path is None) == (self.synth is None):
            raise ValueError("exactly one of dataset_path and synth must be given")
        if self.report_format not in ("csv", "json"):
            raise ValueError(f"unknown report format {self.report_format!r}")

    def load(self) -> SessionDataset:
        if self.synth is not None:
            from .synth import generate_dataset
            return generate_dataset(self.synth)
        return load_dataset(self.dataset_path)


def load_synth_spec(path: PathLike) -> SynthSpec:
    return SynthSpec.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def write_synth_spec(spec: SynthSpec, path: PathLike) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")

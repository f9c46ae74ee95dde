"""Domain types for the few-shot class-incremental protocol and dataset validation."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np


class ProtocolError(ValueError):
    """Raised when an operation is called outside the session protocol."""


class InvariantError(RuntimeError):
    """An internal invariant was violated (a bug, not bad input)."""


@dataclass(frozen=True)
class ProtocolConfig:
    total_classes: int
    base_classes: int
    sessions: int
    way: int
    shot: int
    dim: int

    def __post_init__(self):
        if self.base_classes < 1:
            raise ValueError("base_classes must be >= 1")
        if self.sessions < 0:
            raise ValueError("sessions must be >= 0")
        if self.way < 1 or self.shot < 1:
            raise ValueError("way and shot must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.total_classes != self.base_classes + self.sessions * self.way:
            raise ValueError(
                f"total_classes={self.total_classes} != base_classes + sessions*way "
                f"= {self.base_classes + self.sessions * self.way}"
            )

    def session_of_class(self, class_id: int) -> int:
        """Session in which ``class_id`` is introduced (contiguous id assignment)."""
        if not 0 <= class_id < self.total_classes:
            raise ProtocolError(f"class {class_id} outside [0, {self.total_classes})")
        if class_id < self.base_classes:
            return 0
        return (class_id - self.base_classes) // self.way + 1

    def classes_of_session(self, session: int) -> range:
        if session == 0:
            return range(self.base_classes)
        start = self.base_classes + (session - 1) * self.way
        return range(start, start + self.way)

    def seen_classes(self, session: int) -> range:
        return range(self.base_classes + session * self.way)


class Variant(str, enum.Enum):
    BASELINE = "baseline"
    EXP2 = "exp2"
    AVERAGE = "average"
    WEIGHT = "weight"


@dataclass(frozen=True)
class StrategyConfig:
    """Inference-time strategy and its hyperparameters.

    ``R`` is the per-class top-similarity budget, ``tau`` the cosine threshold,
    and ``beta_base``/``beta_inc`` the update rates for base and incremental
    classes. Defaults are the values used across all benchmarks.
    """

    variant: Variant = Variant.EXP2
    R: int = 40
    tau: float = 0.8
    beta_base: float = 0.05
    beta_inc: float = 0.3

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.R < 1:
            raise ValueError("R must be a positive integer")
        if not -1.0 <= self.tau <= 1.0:
            raise ValueError("tau must lie in [-1, 1]")
        for name in ("beta_base", "beta_inc"):
            b = getattr(self, name)
            if not 0.0 < b < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {b}")

    def to_dict(self) -> dict:
        return {
            "variant": self.variant.value,
            "R": self.R,
            "tau": self.tau,
            "beta_base": self.beta_base,
            "beta_inc": self.beta_inc,
        }


@dataclass
class Split:
    """Features (n, d) and integer labels (n,) of one session's train or test data."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim == 1 and self.features.size == 0:
            self.features = self.features.reshape(0, 0)

    def __len__(self):
        return len(self.labels)


@dataclass
class SessionDataset:
    """A (T+1)-session partition of labeled train data and test data.

    Test labels are only used for scoring. ``class_means`` holds the true
    class means when the dataset is synthetic, else ``None``.
    """

    config: ProtocolConfig
    train: List[Split]
    test: List[Split]
    class_means: Optional[np.ndarray] = None


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    session: Optional[int] = None
    class_id: Optional[int] = None

    def __str__(self):
        where = []
        if self.session is not None:
            where.append(f"session {self.session}")
        if self.class_id is not None:
            where.append(f"class {self.class_id}")
        loc = f" ({', '.join(where)})" if where else ""
        return f"{self.kind}{loc}: {self.message}"


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> List[str]:
        return [v.kind for v in self.violations]

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


class DatasetInvalid(ValueError):
    """Raised by callers that require a valid dataset; carries the report."""

    def __init__(self, report: ValidationReport):
        self.report = report
        super().__init__(f"dataset failed validation:\n{report}")


def _check_split(split: Split, dim: int, session: int, name: str, out: List[Violation]) -> bool:
    X, y = split.features, split.labels
    if y.ndim != 1:
        out.append(Violation("shape", f"{name} labels must be 1-D", session))
        return False
    if len(y) == 0:
        return True
    if X.ndim != 2 or X.shape[0] != len(y):
        out.append(Violation("shape", f"{name} features must be (n, d) with n={len(y)}", session))
        return False
    if X.shape[1] != dim:
        out.append(Violation("dimension", f"{name} features have dim {X.shape[1]}, expected {dim}", session))
        return False
    if not np.all(np.isfinite(X)):
        row = int(np.flatnonzero(~np.all(np.isfinite(X), axis=1))[0])
        out.append(Violation("non-finite", f"{name} row {row} has NaN/Inf", session, int(y[row])))
        return False
    zero = np.flatnonzero(~np.any(X != 0.0, axis=1))
    if zero.size:
        row = int(zero[0])
        out.append(Violation("zero-norm", f"{name} row {row} is the zero vector", session, int(y[row])))
    return True


def validate(dataset: SessionDataset) -> ValidationReport:
    """Check every dataset invariant; never raises, collects violations instead."""
    cfg = dataset.config
    out: List[Violation] = []
    n_sessions = cfg.sessions + 1
    if len(dataset.train) != n_sessions or len(dataset.test) != n_sessions:
        out.append(Violation(
            "session count",
            f"expected {n_sessions} train and test splits, got {len(dataset.train)} and {len(dataset.test)}",
        ))
        return ValidationReport(out)

    present_by_session = {}
    for t, split in enumerate(dataset.train):
        if _check_split(split, cfg.dim, t, "train", out):
            present_by_session[t] = set(int(c) for c in np.unique(split.labels))
    sessions_of = {}
    for t, present in present_by_session.items():
        for c in present:
            sessions_of.setdefault(c, []).append(t)
    for c in sorted(sessions_of):
        if len(sessions_of[c]) > 1:
            # Blame the sessions the class does not belong to under contiguous ids.
            home = cfg.session_of_class(c) if 0 <= c < cfg.total_classes else None
            for t in sessions_of[c]:
                if t != home:
                    others = [s for s in sessions_of[c] if s != t]
                    out.append(Violation(
                        "disjointness", f"class also in train set of session(s) {others}", t, c))

    for t, present in present_by_session.items():
        labels = dataset.train[t].labels
        expected = set(cfg.classes_of_session(t))
        for c in sorted(present - expected):
            if len(sessions_of[c]) == 1:
                out.append(Violation(
                    "session membership", "train label not in this session's class block", t, c))
        for c in sorted(expected - present):
            out.append(Violation("missing class", "no train samples", t, c))
        if t >= 1:
            counts = dict(zip(*np.unique(labels, return_counts=True)))
            for c in sorted(expected & present):
                k = int(counts[c])
                if k != cfg.shot:
                    out.append(Violation("shot count", f"{k} train samples, expected K={cfg.shot}", t, c))

    for t, split in enumerate(dataset.test):
        if not _check_split(split, cfg.dim, t, "test", out):
            continue
        limit = len(cfg.seen_classes(t))
        bad = np.flatnonzero((split.labels < 0) | (split.labels >= limit))
        if bad.size:
            c = int(split.labels[bad[0]])
            out.append(Violation("unseen test label", f"test label not seen by session {t}", t, c))

    if dataset.class_means is not None:
        m = np.asarray(dataset.class_means)
        if m.shape != (cfg.total_classes, cfg.dim):
            out.append(Violation("shape", f"class_means shape {m.shape} != {(cfg.total_classes, cfg.dim)}"))
    return ValidationReport(out)

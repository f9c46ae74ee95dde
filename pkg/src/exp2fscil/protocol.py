"""Session-by-session protocol runner and accuracy metrics."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .core import DatasetInvalid, SessionDataset, StrategyConfig, validate
from .exp2 import run_session_inference
from .prototype import PrototypeBank, extend_bank


def overall_accuracy(predictions, labels) -> float:
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape:
        raise ValueError("predictions and labels differ in length")
    if y.size == 0:
        raise ValueError("no test samples")
    return int(np.count_nonzero(p == y)) / y.size


def incremental_accuracy(predictions, labels, base_class_count: int) -> Optional[float]:
    """Accuracy over samples whose true label is an incremental class; None if there are none."""
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape:
        raise ValueError("predictions and labels differ in length")
    mask = y >= base_class_count
    n = int(np.count_nonzero(mask))
    if n == 0:
        return None
    return int(np.count_nonzero(p[mask] == y[mask])) / n


@dataclass
class SessionTrace:
    """Prototypes of the session's bank before and after inference-time updates."""

    class_ids: np.ndarray
    before: np.ndarray
    after: np.ndarray


@dataclass
class SessionReport:
    session: int
    overall_accuracy: float
    incremental_accuracy: Optional[float]
    n_test: int
    n_test_incremental: int
    n_correct_base: int
    n_correct_incremental: int
    drift: Dict[int, float]
    trace: Optional[SessionTrace] = None

    def to_dict(self) -> dict:
        return {
            "session": self.session,
            "overall_accuracy": self.overall_accuracy,
            "incremental_accuracy": self.incremental_accuracy,
            "n_test": self.n_test,
            "n_test_incremental": self.n_test_incremental,
            "n_correct_base": self.n_correct_base,
            "n_correct_incremental": self.n_correct_incremental,
            "drift": {str(c): d for c, d in sorted(self.drift.items())},
        }


@dataclass
class ProtocolReport:
    sessions: List[SessionReport]
    strategy: StrategyConfig
    dataset_fingerprint: str
    seed: Optional[int]
    final_bank: PrototypeBank = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.to_dict(),
            "dataset_fingerprint": self.dataset_fingerprint,
            "seed": self.seed,
            "sessions": [s.to_dict() for s in self.sessions],
        }

    def mean_incremental_accuracy(self) -> Optional[float]:
        """Mean of incremental accuracy over sessions t >= 1."""
        vals = [s.incremental_accuracy for s in self.sessions if s.incremental_accuracy is not None]
        return float(np.mean(vals)) if vals else None


def dataset_fingerprint(dataset: SessionDataset) -> str:
    h = hashlib.sha256()
    cfg = dataset.config
    h.update(repr((cfg.total_classes, cfg.base_classes, cfg.sessions, cfg.way, cfg.shot, cfg.dim)).encode())
    for splits in (dataset.train, dataset.test):
        for s in splits:
            h.update(np.ascontiguousarray(s.features, dtype="<f8").tobytes())
            h.update(np.ascontiguousarray(s.labels, dtype="<i8").tobytes())
    return h.hexdigest()


def run_protocol(
    dataset: SessionDataset,
    strategy: StrategyConfig,
    *,
    seed: Optional[int] = None,
    chunk: int = 0,
    update_at_base: bool = True,
    record_trace: bool = False,
    class_order_rng: Optional[np.random.Generator] = None,
) -> ProtocolReport:
    """Run all T+1 sessions: extend the bank, run inference on the test batch, score.

    Bank updates carry over between sessions. ``class_order_rng`` shuffles the
    per-class commit order, which must not change any result.
    """
    report = validate(dataset)
    if not report.ok:
        raise DatasetInvalid(report)
    cfg = dataset.config
    bank = PrototypeBank()
    sessions = []
    for t in range(cfg.sessions + 1):
        extend_bank(bank, dataset.train[t], t)
        test = dataset.test[t]
        order = None
        if class_order_rng is not None:
            order = [int(c) for c in class_order_rng.permutation(bank.class_ids())]
        ids, before = bank.matrix()
        preds, bank = run_session_inference(
            bank, test.features, strategy, t, cfg,
            chunk=chunk, update_at_base=update_at_base, class_order=order,
        )
        bank = bank.copy()
        _, after = bank.matrix()
        drift = {int(c): float(np.linalg.norm(a - b)) for c, a, b in zip(ids, after, before)}

        y = test.labels
        inc = y >= cfg.base_classes
        correct = preds == y
        n_inc = int(np.count_nonzero(inc))
        sessions.append(SessionReport(
            session=t,
            overall_accuracy=overall_accuracy(preds, y),
            incremental_accuracy=incremental_accuracy(preds, y, cfg.base_classes),
            n_test=int(y.size),
            n_test_incremental=n_inc,
            n_correct_base=int(np.count_nonzero(correct & ~inc)),
            n_correct_incremental=int(np.count_nonzero(correct & inc)),
            drift=drift,
            trace=SessionTrace(ids, before, after) if record_trace else None,
        ))
    return ProtocolReport(sessions, strategy, dataset_fingerprint(dataset), seed, bank)

"""Nearest-class-mean classifier: prototypes, cosine similarity, prediction."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, Optional, Tuple

import numpy as np

# Upper bound on n * classes * dim elements materialised per predict block.
_BLOCK_ELEMS = 1 << 22


def compute_prototype(samples) -> np.ndarray:
    """Component-wise mean of a class's labeled feature vectors."""
    X = np.asarray(samples, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[0] == 0:
        raise ValueError("no labeled samples for class")
    return X.mean(axis=0)


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = np.sqrt(np.sum(a * a))
    nb = np.sqrt(np.sum(b * b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("degenerate vector")
    s = np.sum(a * b) / (na * nb)
    return float(min(1.0, max(-1.0, s)))


def cosine_similarities(w, X) -> np.ndarray:
    """Cosine similarity of ``w`` against every row of ``X``.

    Row-wise elementwise products are reduced with ``np.sum`` so that each
    entry is bit-identical to ``cosine_similarity(w, X[i])``.
    """
    w = np.asarray(w, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] == 0:
        return np.empty(0)
    if X.shape[1] != w.shape[0]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {w.shape[0]}")
    nw = np.sqrt(np.sum(w * w))
    nx = np.sqrt(np.sum(X * X, axis=1))
    if nw == 0.0 or np.any(nx == 0.0):
        raise ValueError("degenerate vector")
    s = np.sum(X * w, axis=1) / (nx * nw)
    return np.clip(s, -1.0, 1.0)


@dataclass(frozen=True)
class BankEntry:
    weight: np.ndarray
    intro_session: int
    labeled_count: int


class PrototypeBank:
    """Mapping ClassId -> prototype weight, introduction session and labeled count."""

    def __init__(self, entries: Optional[Dict[int, BankEntry]] = None):
        self._entries: Dict[int, BankEntry] = {}
        self._dim: Optional[int] = None
        for c, e in (entries or {}).items():
            self._put(int(c), e)

    def _put(self, class_id: int, entry: BankEntry):
        w = np.asarray(entry.weight, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("prototype must be a 1-D vector")
        if self._dim is None:
            self._dim = w.shape[0]
        elif w.shape[0] != self._dim:
            raise ValueError(f"prototype dim {w.shape[0]} != bank dim {self._dim}")
        if entry.labeled_count < 1:
            raise ValueError("labeled_count must be >= 1")
        w = w.copy()
        w.setflags(write=False)
        self._entries[class_id] = BankEntry(w, int(entry.intro_session), int(entry.labeled_count))

    @property
    def dim(self) -> Optional[int]:
        return self._dim

    def add_class(self, class_id: int, samples, intro_session: int):
        if class_id in self._entries:
            raise ValueError(f"class {class_id} already in bank")
        X = np.asarray(samples, dtype=np.float64)
        self._put(class_id, BankEntry(compute_prototype(X), intro_session, len(X)))

    def with_weights(self, weights: Dict[int, np.ndarray]) -> "PrototypeBank":
        """Copy of the bank with some prototypes replaced."""
        new = PrototypeBank()
        for c in self.class_ids():
            e = self._entries[c]
            if c in weights:
                e = BankEntry(weights[c], e.intro_session, e.labeled_count)
            new._put(c, e)
        return new

    def copy(self) -> "PrototypeBank":
        return self.with_weights({})

    def class_ids(self) -> list:
        return sorted(self._entries)

    def weight(self, class_id: int) -> np.ndarray:
        return self._entries[class_id].weight

    def __getitem__(self, class_id: int) -> BankEntry:
        return self._entries[class_id]

    def __contains__(self, class_id) -> bool:
        return class_id in self._entries

    def __len__(self):
        return len(self._entries)

    def __iter__(self) -> Iterator[int]:
        return iter(self.class_ids())

    def matrix(self) -> Tuple[np.ndarray, np.ndarray]:
        """(ids ascending, weights stacked in the same order)."""
        ids = np.array(self.class_ids(), dtype=np.int64)
        if len(ids) == 0:
            return ids, np.empty((0, self._dim or 0))
        return ids, np.stack([self._entries[c].weight for c in ids])

    def equals(self, other: "PrototypeBank") -> bool:
        """Bit-exact equality of ids, weights and metadata."""
        if self.class_ids() != other.class_ids():
            return False
        for c in self.class_ids():
            a, b = self._entries[c], other._entries[c]
            if a.intro_session != b.intro_session or a.labeled_count != b.labeled_count:
                return False
            if a.weight.tobytes() != b.weight.tobytes():
                return False
        return True


def _squared_distances(X: np.ndarray, W: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - W[None, :, :]
    return np.sum(diff * diff, axis=-1)


def predict_many(bank: PrototypeBank, features) -> np.ndarray:
    """Nearest prototype (squared Euclidean) for every row; ties go to the smaller id."""
    if len(bank) == 0:
        raise ValueError("empty prototype bank")
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    ids, W = bank.matrix()
    if X.shape[0] == 0:
        return np.empty(0, dtype=np.int64)
    if X.shape[1] != W.shape[1]:
        raise ValueError(f"dimension mismatch: features {X.shape[1]} vs bank {W.shape[1]}")
    step = max(1, _BLOCK_ELEMS // (W.shape[0] * W.shape[1]))
    out = np.empty(X.shape[0], dtype=np.int64)
    for i in range(0, X.shape[0], step):
        d2 = _squared_distances(X[i:i + step], W)
        # np.argmin returns the first minimum, ids are ascending.
        out[i:i + step] = ids[np.argmin(d2, axis=1)]
    return out


def predict(bank: PrototypeBank, feature) -> int:
    f = np.asarray(feature, dtype=np.float64)
    if f.ndim != 1:
        raise ValueError("predict takes a single feature vector; use predict_many")
    return int(predict_many(bank, f[None, :])[0])


def build_bank(train_splits: Iterable, upto_session: int) -> PrototypeBank:
    """Bank of prototypes for all classes in train splits 0..upto_session."""
    bank = PrototypeBank()
    for t, split in enumerate(train_splits):
        if t > upto_session:
            break
        extend_bank(bank, split, t)
    return bank


def extend_bank(bank: PrototypeBank, split, session: int) -> PrototypeBank:
    """Add a prototype for each class in ``split`` (in place); returns ``bank``."""
    for c in np.unique(split.labels):
        bank.add_class(int(c), split.features[split.labels == c], session)
    return bank

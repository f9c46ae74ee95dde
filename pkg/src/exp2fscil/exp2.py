"""Inference-time prototype refinement from unlabeled test data.

For every seen class the strategy *explores* the test batch for samples that
look like the class (top-R cosine similarity to the prototype, then a
confidence threshold) and *exploits* them by moving the prototype toward
their mean with a session-decayed rate. The Average and Weight variants are
ablations of the exploit step.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .core import ProtocolConfig, ProtocolError, StrategyConfig, Variant
from .prototype import PrototypeBank, cosine_similarities, predict_many


@dataclass(frozen=True)
class ExplorationResult:
    class_id: int
    alpha: float
    selected: np.ndarray  # sorted test-sample indices
    similarities: np.ndarray


@dataclass(frozen=True)
class ClassUpdate:
    beta: float
    mean_feature: Optional[np.ndarray]
    exploration: Optional[ExplorationResult] = None


UpdatePlan = Dict[int, ClassUpdate]


def select_top_r(similarities, R: int, tau: float) -> Tuple[float, np.ndarray]:
    """Cutoff alpha (R-th highest, or the minimum if fewer than R) and selected indices.

    Every index tied at alpha is kept, so more than R may be selected on ties.
    """
    s = np.asarray(similarities, dtype=np.float64)
    if R < 1:
        raise ValueError("R must be >= 1")
    if s.size == 0:
        return float("nan"), np.empty(0, dtype=np.int64)
    if R >= s.size:
        alpha = float(s.min())
    else:
        alpha = float(np.partition(s, s.size - R)[s.size - R])
    keep = (s >= alpha) & (s > tau)
    return alpha, np.flatnonzero(keep)


def explore(w_c, test_features, R: int, tau: float, class_id: int = -1) -> ExplorationResult:
    X = np.asarray(test_features, dtype=np.float64)
    if X.size == 0:
        return ExplorationResult(class_id, float("nan"), np.empty(0, dtype=np.int64), np.empty(0))
    sims = cosine_similarities(w_c, X)
    alpha, selected = select_top_r(sims, R, tau)
    return ExplorationResult(class_id, alpha, selected, sims)


def beta_schedule(class_id: int, session: int, config: StrategyConfig, protocol: ProtocolConfig) -> float:
    """Update rate of ``class_id`` during inference of ``session``.

    Base classes use beta_base**(t+1); a class introduced in session s >= 1
    uses beta_inc**(t - s + 1), so every class starts at its rate and decays
    geometrically as sessions pass.
    """
    intro = protocol.session_of_class(class_id)
    if intro > session:
        raise ProtocolError(f"class {class_id} unseen at session {session}")
    if intro == 0:
        return config.beta_base ** (session + 1)
    return config.beta_inc ** (session - (class_id - protocol.base_classes) // protocol.way)


def exploit_update(w_c, selected_features, beta_c: float) -> np.ndarray:
    w = np.asarray(w_c, dtype=np.float64)
    if not 0.0 <= beta_c < 1.0:
        raise ValueError(f"beta must lie in [0, 1), got {beta_c}")
    F = np.asarray(selected_features, dtype=np.float64)
    if F.size == 0:
        return w
    if F.ndim == 1:
        F = F[None, :]
    if F.shape[1] != w.shape[0]:
        raise ValueError(f"dimension mismatch: {F.shape[1]} vs {w.shape[0]}")
    return (1.0 - beta_c) * w + beta_c * F.mean(axis=0)


def _constant_beta(class_id: int, config: StrategyConfig, protocol: ProtocolConfig) -> float:
    return config.beta_base if class_id < protocol.base_classes else config.beta_inc


def plan_updates(
    bank: PrototypeBank,
    test_features,
    strategy: StrategyConfig,
    session: int,
    protocol: ProtocolConfig,
) -> UpdatePlan:
    """Per-class update rates and target means, all read from the current bank."""
    X = np.asarray(test_features, dtype=np.float64)
    plan: UpdatePlan = {}
    variant = strategy.variant
    if variant is Variant.BASELINE or X.shape[0] == 0:
        return plan
    if variant is Variant.AVERAGE:
        batch_mean = X.mean(axis=0)
        for c in bank.class_ids():
            plan[c] = ClassUpdate(0.5, batch_mean)
        return plan
    for c in bank.class_ids():
        res = explore(bank.weight(c), X, strategy.R, strategy.tau, class_id=c)
        if variant is Variant.EXP2:
            beta = beta_schedule(c, session, strategy, protocol)
        else:
            beta = _constant_beta(c, strategy, protocol)
        mean = X[res.selected].mean(axis=0) if res.selected.size else None
        plan[c] = ClassUpdate(beta, mean, res)
    return plan


def apply_plan(bank: PrototypeBank, plan: UpdatePlan, class_order: Optional[Sequence[int]] = None) -> PrototypeBank:
    """Commit a plan to a copy of ``bank``; the order of classes does not matter."""
    order = list(plan) if class_order is None else list(class_order)
    if sorted(order) != sorted(plan):
        raise ValueError("class_order must be a permutation of the planned classes")
    new_weights = {}
    for c in order:
        u = plan[c]
        if u.mean_feature is None:
            continue
        new_weights[c] = (1.0 - u.beta) * bank.weight(c) + u.beta * u.mean_feature
    return bank.with_weights(new_weights)


def run_session_inference(
    bank: PrototypeBank,
    test_features,
    strategy: StrategyConfig,
    session: int,
    protocol: ProtocolConfig,
    *,
    chunk: int = 0,
    update_at_base: bool = True,
    class_order: Optional[Sequence[int]] = None,
) -> Tuple[np.ndarray, PrototypeBank]:
    """Update the bank from the test batch, then predict it.

    With ``chunk > 0`` the batch is consumed in chunks of that size: each chunk
    updates the bank and is then predicted with the updated bank.
    """
    expected = set(protocol.seen_classes(session))
    if set(bank.class_ids()) != expected:
        raise ProtocolError(f"bank does not cover exactly the classes seen by session {session}")
    X = np.asarray(test_features, dtype=np.float64)
    if X.ndim != 2 and X.size:
        raise ValueError("test_features must be (n, d)")
    adapt = strategy.variant is not Variant.BASELINE and (session > 0 or update_at_base)
    if chunk < 0:
        raise ValueError("chunk must be >= 0")
    step = X.shape[0] if chunk == 0 else chunk
    preds = []
    for i in range(0, max(X.shape[0], 1), max(step, 1)):
        part = X[i:i + step]
        if adapt and part.shape[0]:
            plan = plan_updates(bank, part, strategy, session, protocol)
            bank = apply_plan(bank, plan, class_order)
        if part.shape[0]:
            preds.append(predict_many(bank, part))
    predictions = np.concatenate(preds) if preds else np.empty(0, dtype=np.int64)
    return predictions, bank

"""Synthetic Gaussian FSCIL datasets and the inter-class overlap analysis.

Class c draws features from N(mu_c, sigma^2 I). The overlap bound gives the
probability that a class-c sample lands on the wrong side of the
nearest-estimated-mean boundary when both estimated means are off by at most
epsilon; ``monte_carlo_overlap`` simulates the worst-case configuration
directly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import ProtocolConfig, SessionDataset, Split


class MeanPlacement(str, enum.Enum):
    SPHERE_REJECTION = "sphere"
    SCALED_SIMPLEX = "simplex"


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic dataset.

    ``sigma_intra`` is the per-coordinate standard deviation, so the root of the
    covariance trace is ``sigma_intra * sqrt(dim)``. ``offset`` is the norm of a
    vector shared by all class means (along the all-ones direction); with the
    default 0 the means are centred on the origin.
    """

    protocol: ProtocolConfig
    sigma_intra: float
    target_delta_inter: float
    mean_placement: Optional[MeanPlacement] = None
    test_per_class: int = 50
    base_train_per_class: int = 50
    seed: int = 0
    offset: float = 0.0

    def __post_init__(self):
        if not self.sigma_intra > 0:
            raise ValueError("sigma_intra must be > 0")
        if not self.target_delta_inter > 0:
            raise ValueError("target_delta_inter must be > 0")
        if self.test_per_class < 0 or self.base_train_per_class < 1:
            raise ValueError("test_per_class must be >= 0 and base_train_per_class >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.offset < 0:
            raise ValueError("offset must be >= 0")
        if self.mean_placement is not None:
            object.__setattr__(self, "mean_placement", MeanPlacement(self.mean_placement))

    def placement(self) -> MeanPlacement:
        if self.mean_placement is not None:
            return self.mean_placement
        if self.protocol.total_classes <= self.protocol.dim + 1:
            return MeanPlacement.SCALED_SIMPLEX
        return MeanPlacement.SPHERE_REJECTION

    def to_dict(self) -> dict:
        p = self.protocol
        return {
            "total_classes": p.total_classes, "base_classes": p.base_classes,
            "sessions": p.sessions, "way": p.way, "shot": p.shot, "dim": p.dim,
            "sigma_intra": self.sigma_intra, "target_delta_inter": self.target_delta_inter,
            "mean_placement": self.placement().value, "test_per_class": self.test_per_class,
            "base_train_per_class": self.base_train_per_class, "seed": self.seed,
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        d = dict(d)
        protocol = ProtocolConfig(**{k: int(d.pop(k)) for k in
                                     ("total_classes", "base_classes", "sessions", "way", "shot", "dim")})
        return cls(protocol=protocol, **d)


def simplex_means(n: int, dim: int, delta: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` vertices of a regular simplex with edge ``delta``, randomly rotated into R^dim."""
    if n > dim + 1:
        raise ValueError(f"a regular simplex with {n} vertices needs dim >= {n - 1}")
    if n == 1:
        return np.zeros((1, dim))
    centred = np.eye(n) - 1.0 / n
    # Rows of U*S are the vertex coordinates in the (n-1)-dim affine hull.
    U, S, _ = np.linalg.svd(centred)
    coords = U[:, : n - 1] * S[: n - 1]
    coords *= delta / math.sqrt(2.0)
    Q, _ = np.linalg.qr(rng.standard_normal((dim, dim)))
    return coords @ Q[:, : n - 1].T


def sphere_means(
    n: int, dim: int, delta: float, rng: np.random.Generator,
    attempts_per_point: int = 2000, max_growth: int = 40,
) -> np.ndarray:
    """Rejection-sample ``n`` points on a sphere with pairwise distance >= delta.

    The radius starts where random points typically clear ``delta`` and grows
    by 10% after each failed packing. The accepted set is rescaled so that the
    minimum pairwise distance equals ``delta``.
    """
    if n == 1:
        return np.zeros((1, dim))
    if dim == 1:
        if n > 2:
            raise ValueError("packing infeasible; increase dim or radius")
        return np.array([[-delta / 2], [delta / 2]])
    radius = delta / math.sqrt(2.0)
    for _ in range(max_growth):
        pts = np.empty((0, dim))
        ok = True
        for _ in range(n):
            for _ in range(attempts_per_point):
                p = rng.standard_normal(dim)
                p *= radius / np.linalg.norm(p)
                if pts.shape[0] == 0 or np.min(np.linalg.norm(pts - p, axis=1)) >= delta:
                    pts = np.vstack([pts, p])
                    break
            else:
                ok = False
                break
        if ok:
            return pts * (delta / _min_pairwise_distance(pts))
        radius *= 1.1
    raise ValueError("packing infeasible; increase dim or radius")


def _min_pairwise_distance(M: np.ndarray) -> float:
    d2 = np.sum((M[:, None, :] - M[None, :, :]) ** 2, axis=-1)
    np.fill_diagonal(d2, np.inf)
    return float(np.sqrt(d2.min()))


def _draw(rng: np.random.Generator, mean: np.ndarray, sigma: float, n: int) -> np.ndarray:
    X = mean + sigma * rng.standard_normal((n, mean.shape[0]))
    zero = ~np.any(X != 0.0, axis=1)
    if np.any(zero):
        X[zero] += np.finfo(float).eps * rng.standard_normal((int(zero.sum()), mean.shape[0]))
    return X


def generate_dataset(spec: SynthSpec) -> SessionDataset:
    """Draw a session dataset; identical output for identical specs.

    Each class gets its own fixed test pool of ``test_per_class`` samples; the
    test split of session t is the union of the pools of all classes seen by t.
    """
    p = spec.protocol
    rng = np.random.default_rng(spec.seed)
    n = p.total_classes
    if spec.placement() is MeanPlacement.SCALED_SIMPLEX:
        means = simplex_means(n, p.dim, spec.target_delta_inter, rng)
    else:
        means = sphere_means(n, p.dim, spec.target_delta_inter, rng)
    if spec.offset:
        means = means + spec.offset / math.sqrt(p.dim)

    train_pools, test_pools = [], []
    for c in range(n):
        k = spec.base_train_per_class if c < p.base_classes else p.shot
        train_pools.append(_draw(rng, means[c], spec.sigma_intra, k))
        test_pools.append(_draw(rng, means[c], spec.sigma_intra, spec.test_per_class))

    train, test = [], []
    for t in range(p.sessions + 1):
        cls = list(p.classes_of_session(t))
        train.append(Split(
            np.concatenate([train_pools[c] for c in cls]),
            np.repeat(cls, [len(train_pools[c]) for c in cls]),
        ))
        seen = list(p.seen_classes(t))
        test.append(Split(
            np.concatenate([test_pools[c] for c in seen]).reshape(-1, p.dim),
            np.repeat(seen, spec.test_per_class),
        ))
    return SessionDataset(p, train, test, class_means=means)


def measure_separation(dataset: SessionDataset) -> Tuple[float, float]:
    """Empirical (delta_inter, sigma_intra) over all labeled and test samples.

    delta_inter is the minimum distance between empirical class means and
    sigma_intra the root of the mean trace of the per-class covariances.
    """
    feats = [s.features for s in dataset.train]
    labels = [s.labels for s in dataset.train]
    # Test pools repeat across sessions; the last session sees every class.
    if dataset.test and len(dataset.test[-1]):
        feats.append(dataset.test[-1].features)
        labels.append(dataset.test[-1].labels)
    X = np.concatenate([f for f in feats if len(f)])
    y = np.concatenate([l for l in labels if len(l)])
    classes = np.unique(y)
    if classes.size < 2:
        raise ValueError("need at least two classes")
    means, traces = [], []
    for c in classes:
        Xc = X[y == c]
        if Xc.shape[0] < 2:
            raise ValueError(f"covariance undefined for singleton class {c}")
        means.append(Xc.mean(axis=0))
        traces.append(np.sum(Xc.var(axis=0, ddof=1)))
    return _min_pairwise_distance(np.array(means)), float(math.sqrt(np.mean(traces)))


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function (double precision)."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def std_normal_sf(x: float) -> float:
    """1 - Phi(x) without cancellation in the upper tail."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def overlap_bound(delta: float, sigma: float, epsilon: float) -> float:
    """Lower bound 1 - Phi((delta - 2 eps) / (2 sigma)) on the overlap probability."""
    if not delta > 0 or not sigma > 0 or epsilon < 0:
        raise ValueError("need delta > 0, sigma > 0, epsilon >= 0")
    return std_normal_sf((delta - 2.0 * epsilon) / (2.0 * sigma))


@dataclass(frozen=True)
class OverlapQuery:
    delta: float
    sigma: float
    epsilon: float
    dim: int = 2
    trials: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if not self.delta > 0 or not self.sigma > 0 or self.epsilon < 0:
            raise ValueError("need delta > 0, sigma > 0, epsilon >= 0")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def worst_case_estimates(delta: float, epsilon: float, dim: int):
    """True and estimated means for the worst-case configuration.

    mu_c sits at the origin and mu_c' at distance delta along the first axis.
    Both estimates are shifted by epsilon in the same direction u, from c'
    towards c, which moves the midpoint boundary epsilon closer to mu_c.
    """
    mu_c = np.zeros(dim)
    mu_cp = np.zeros(dim)
    mu_cp[0] = delta
    u = (mu_c - mu_cp) / delta
    return mu_c, mu_cp, mu_c + epsilon * u, mu_cp + epsilon * u


def monte_carlo_overlap(
    query: OverlapQuery, shards: int = 1, block: int = 65536,
) -> Tuple[float, float]:
    """Fraction of class-c draws closer to the estimated mean of c' than of c.

    Returns (probability, binomial standard error). Shard i draws from the
    i-th child of ``SeedSequence(seed)``, so output depends on (seed, shards).
    """
    if shards < 1:
        raise ValueError("shards must be >= 1")
    mu_c, _, hat_c, hat_cp = worst_case_estimates(query.delta, query.epsilon, query.dim)
    sizes = [query.trials // shards + (i < query.trials % shards) for i in range(shards)]
    children = np.random.SeedSequence(query.seed).spawn(shards)
    hits = 0
    for size, ss in zip(sizes, children):
        rng = np.random.default_rng(ss)
        done = 0
        while done < size:
            m = min(block, size - done)
            X = mu_c + query.sigma * rng.standard_normal((m, query.dim))
            d_cp = np.sum((X - hat_cp) ** 2, axis=1)
            d_c = np.sum((X - hat_c) ** 2, axis=1)
            hits += int(np.count_nonzero(d_cp < d_c))
            done += m
    p = hits / query.trials
    return p, math.sqrt(p * (1.0 - p) / query.trials)

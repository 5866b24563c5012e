"""Class-creation predicates over posterior vectors: MinMax, JS, Random."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np


class CriterionKind(Enum):
    MINMAX = "minmax"
    JS = "js"
    RANDOM = "random"


@dataclass
class CriterionConfig:
    kind: CriterionKind
    random_rate: Optional[float] = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.kind is CriterionKind.RANDOM:
            if self.random_rate is None:
                raise ValueError("random criterion requires random_rate")
            if not (0.0 <= self.random_rate <= 1.0):
                raise ValueError("random_rate must be in [0, 1]")
        elif self.random_rate is not None:
            raise ValueError("random_rate only applies to the random criterion")


def _check_distribution(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d vector")
    if np.any(p < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"{name} does not sum to 1 (sum={p.sum()!r})")
    return p


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in nats: mean KL of p and q to their average.

    0*log(0/x) terms contribute 0; the result lies in [0, ln 2].
    """
    p = _check_distribution(p, "p")
    q = _check_distribution(q, "q")
    if p.size != q.size:
        raise ValueError("p and q must have the same length")
    a = 0.5 * (p + q)
    with np.errstate(divide="ignore", invalid="ignore"):
        kl_p = np.where(p > 0, p * (np.log(p) - np.log(a)), 0.0)
        kl_q = np.where(q > 0, q * (np.log(q) - np.log(a)), 0.0)
    return float(0.5 * (kl_p.sum() + kl_q.sum()))


def js_criterion(p) -> bool:
    """True iff the posterior is within JS distance 1/k of uniform over its
    k live classes (strict inequality)."""
    p = _check_distribution(p, "p")
    k = p.size
    u = np.full(k, 1.0 / k)
    return js_divergence(u, p) < 1.0 / k


def minmax_criterion(p) -> bool:
    """True iff max(p)/min(p) < 2 strictly; a zero minimum never fires."""
    p = _check_distribution(p, "p")
    lo = float(p.min())
    if lo == 0.0:
        return False
    return float(p.max()) / lo < 2.0


class Criterion:
    """Stateful wrapper dispatching on CriterionConfig.

    Only the random kind carries state: an isolated RNG seeded from the
    config, so firing sequences are reproducible per engine run.
    """

    def __init__(self, cfg: CriterionConfig):
        self.cfg = cfg
        self._rng = (
            np.random.default_rng(cfg.rng_seed)
            if cfg.kind is CriterionKind.RANDOM
            else None
        )

    def __call__(self, posterior) -> bool:
        if self.cfg.kind is CriterionKind.MINMAX:
            return minmax_criterion(posterior)
        if self.cfg.kind is CriterionKind.JS:
            return js_criterion(posterior)
        return bool(self._rng.random() < self.cfg.random_rate)


def never_fires() -> Criterion:
    """A criterion that never triggers class creation (rate-0 random)."""
    return Criterion(CriterionConfig(CriterionKind.RANDOM, random_rate=0.0))

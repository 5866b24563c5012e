"""Penalized-likelihood model scores (BIC/AIC/AICc) and the accept rule."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

log = logging.getLogger(__name__)


class SelectionCriterion(Enum):
    BIC = "bic"
    AIC = "aic"
    AICC = "aicc"


class AiccUndefinedError(ValueError):
    """AICc requires n > v + 1."""


@dataclass(frozen=True)
class SelectionScore:
    log_likelihood: float
    v: int
    n: int
    criterion: SelectionCriterion
    score: float  # lower is better


def score_model(L: float, v: int, n: int, criterion: SelectionCriterion) -> SelectionScore:
    """Score a fitted model: BIC = -2L + v ln n, AIC = -2L + 2v,
    AICc = AIC + 2v(v+1)/(n-v-1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if v < 0:
        raise ValueError("v must be >= 0")
    if criterion is SelectionCriterion.BIC:
        score = -2.0 * L + v * math.log(n)
    elif criterion is SelectionCriterion.AIC:
        score = -2.0 * L + 2.0 * v
    else:
        if n <= v + 1:
            raise AiccUndefinedError(f"AICc undefined for n={n}, v={v} (needs n > v+1)")
        score = -2.0 * L + 2.0 * v + 2.0 * v * (v + 1) / (n - v - 1)
    return SelectionScore(log_likelihood=L, v=v, n=n, criterion=criterion, score=score)


def score_with_fallback(
    L: float, v: int, n: int, criterion: SelectionCriterion
) -> SelectionScore:
    """Like score_model, but AICc outside its domain falls back to AIC with a
    warning. Text vocabularies routinely give v >= n, where AICc is undefined."""
    if criterion is SelectionCriterion.AICC and n <= v + 1:
        log.warning("AICc undefined (n=%d <= v+1=%d); falling back to AIC", n, v + 1)
        return score_model(L, v, n, SelectionCriterion.AIC)
    return score_model(L, v, n, criterion)


def accept_exploratory(explore: SelectionScore, baseline: SelectionScore) -> bool:
    """True iff the exploratory model strictly beats the baseline; ties keep
    the simpler baseline."""
    if explore.criterion is not baseline.criterion:
        raise ValueError("scores use different selection criteria")
    if explore.n != baseline.n:
        raise ValueError("scores computed over different instance counts")
    return explore.score < baseline.score

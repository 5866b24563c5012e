"""Hard-EM drivers: the exploratory variant that can create classes during
the E-step (gated by penalized model selection), and the plain
semi-supervised baseline with optional extra randomly-initialized classes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .criteria import Criterion, CriterionConfig, CriterionKind, js_criterion, minmax_criterion, never_fires
from .data import Dataset, SeedPartition
from .models import (
    ModelFamily,
    ModelState,
    data_log_likelihood,
    init_from_seeds,
    init_new_class,
    m_step,
    posterior,
)
from .selection import SelectionCriterion, accept_exploratory, score_with_fallback


@dataclass
class EngineConfig:
    family: ModelFamily
    criterion: Optional[CriterionConfig] = None
    selection: SelectionCriterion = SelectionCriterion.AICC
    max_iterations: int = 15
    ll_rel_tolerance: float = 1e-4
    extra_classes: int = 0
    rng_seed: int = 0
    kappa_init: float = 1.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.ll_rel_tolerance <= 0:
            raise ValueError("ll_rel_tolerance must be positive")
        if self.extra_classes < 0:
            raise ValueError("extra_classes must be non-negative")


@dataclass
class RunResult:
    final_state: ModelState
    iterations_run: int
    ll_trace: list[float] = field(default_factory=list)
    class_count_trace: list[int] = field(default_factory=list)
    can_add_latched_at: Optional[int] = None
    wall_time: float = 0.0


def _free_params(family: ModelFamily, m: int, vocab_size: int) -> int:
    base = m * (vocab_size - 1) + (m - 1)
    return base + m if family is ModelFamily.VMF else base


def _assign_argmax(state: ModelState, d: Dataset, indices) -> int:
    """Argmax-assign the given instances; returns how many changed."""
    changed = 0
    for i in indices:
        j = int(np.argmax(posterior(state, d.instances[i])))
        if state.assignments[i] != j:
            changed += 1
        state.assignments[i] = j
    return changed


def _run_em(
    d: Dataset,
    p: SeedPartition,
    cfg: EngineConfig,
    criterion: Criterion,
    allow_creation: bool,
) -> RunResult:
    t_start = time.perf_counter()
    p.validate(d)
    n = len(d)
    unlabeled = sorted(p.unlabeled_idx)

    state = init_from_seeds(d, p, cfg.family, cfg.kappa_init)

    if cfg.extra_classes:
        if cfg.extra_classes > len(unlabeled):
            raise ValueError("extra_classes exceeds the number of unlabeled instances")
        rng = np.random.default_rng(np.random.SeedSequence([cfg.rng_seed, 7]))
        picked = rng.choice(len(unlabeled), size=cfg.extra_classes, replace=False)
        for pos in picked:
            x = d.instances[unlabeled[pos]]
            state.add_class(init_new_class(x, cfg.family, d.vocab_size, cfg.kappa_init), n)

    if state.num_classes == 0:
        # no seeded classes at all: bootstrap one class from the first
        # unlabeled instance so the run proceeds as plain clustering
        if not (allow_creation and unlabeled):
            raise ValueError("no seeded classes and no way to create any")
        first = unlabeled[0]
        state.add_class(
            init_new_class(d.instances[first], cfg.family, d.vocab_size, cfg.kappa_init),
            n,
        )
        state.assignments[first] = 0

    # initial hard labels for the unlabeled pool, so the first baseline
    # likelihood is well defined
    _assign_argmax(state, d, unlabeled)

    can_add = allow_creation
    latched_at: Optional[int] = None
    ll_trace: list[float] = []
    class_trace: list[int] = []
    prev_score: Optional[float] = None
    prev_m: Optional[int] = None

    iterations = 0
    for t in range(1, cfg.max_iterations + 1):
        iterations = t
        m_old = state.num_classes
        baseline_ll = data_log_likelihood(state, d)

        changed = 0
        for i in unlabeled:
            x = d.instances[i]
            post = posterior(state, x)
            if can_add and criterion(post):
                params = init_new_class(x, cfg.family, d.vocab_size, cfg.kappa_init)
                j = state.add_class(params, n)
            else:
                j = int(np.argmax(post))
            if state.assignments[i] != j:
                changed += 1
            state.assignments[i] = j

        m_new = state.num_classes
        explore_ll = data_log_likelihood(state, d)
        if not (np.isfinite(baseline_ll) and np.isfinite(explore_ll)):
            raise FloatingPointError(f"non-finite likelihood at iteration {t}")

        v_old = _free_params(cfg.family, m_old, d.vocab_size)
        v_new = _free_params(cfg.family, m_new, d.vocab_size)
        sel = cfg.selection
        if sel is SelectionCriterion.AICC and n <= max(v_old, v_new) + 1:
            sel = SelectionCriterion.AIC  # score_with_fallback warns once per call
        explore_score = score_with_fallback(explore_ll, v_new, n, sel)
        baseline_score = score_with_fallback(baseline_ll, v_old, n, sel)

        if not accept_exploratory(explore_score, baseline_score):
            if m_new > m_old:
                state.truncate(m_old)
                dropped = [i for i in unlabeled if state.assignments[i] >= m_old]
                _assign_argmax(state, d, dropped)
            if can_add and latched_at is None:
                latched_at = t
            can_add = False

        state = m_step(state, d)
        ll = data_log_likelihood(state, d)
        m_now = state.num_classes
        ll_trace.append(ll)
        class_trace.append(m_now)

        score_now = score_with_fallback(
            ll,
            _free_params(cfg.family, m_now, d.vocab_size),
            n,
            sel,
        ).score
        if changed == 0 and m_now == m_old:
            break
        if (
            prev_score is not None
            and prev_m == m_now
            and abs(score_now - prev_score) < cfg.ll_rel_tolerance * max(abs(prev_score), 1.0)
        ):
            break
        prev_score, prev_m = score_now, m_now

    return RunResult(
        final_state=state,
        iterations_run=iterations,
        ll_trace=ll_trace,
        class_count_trace=class_trace,
        can_add_latched_at=latched_at,
        wall_time=time.perf_counter() - t_start,
    )


def exploratory_em(d: Dataset, p: SeedPartition, cfg: EngineConfig) -> RunResult:
    """EM that may create a class per hard-to-classify instance during the
    E-step; a penalized-likelihood gate compares the grown model against the
    pre-E-step one and permanently disables creation on first rejection."""
    if cfg.extra_classes != 0:
        raise ValueError("exploratory mode requires extra_classes = 0")
    crit_cfg = cfg.criterion
    if crit_cfg is None:
        raise ValueError("exploratory mode requires a class-creation criterion")
    if crit_cfg.kind is CriterionKind.RANDOM and crit_cfg.random_rate is None:
        raise ValueError("random criterion must be calibrated (random_rate set)")
    return _run_em(d, p, cfg, Criterion(crit_cfg), allow_creation=True)


def semisup_em(d: Dataset, p: SeedPartition, cfg: EngineConfig) -> RunResult:
    """Standard classification EM over the seeded classes plus
    cfg.extra_classes classes initialized from random unlabeled instances."""
    return _run_em(d, p, cfg, never_fires(), allow_creation=False)


def calibrate_random_rate(
    d: Dataset,
    p: SeedPartition,
    family: ModelFamily,
    reference: CriterionKind = CriterionKind.MINMAX,
    kappa_init: float = 1.0,
) -> float:
    """Empirical firing rate of a reference criterion over one pass of the
    seed-initialized model's posteriors; used to parameterize the random
    criterion for the same partition."""
    if reference is CriterionKind.RANDOM:
        raise ValueError("reference must be minmax or js")
    ref = minmax_criterion if reference is CriterionKind.MINMAX else js_criterion
    state = init_from_seeds(d, p, family, kappa_init)
    unlabeled = sorted(p.unlabeled_idx)
    if not unlabeled:
        return 0.0
    fires = sum(1 for i in unlabeled if ref(posterior(state, d.instances[i])))
    return fires / len(unlabeled)


def best_extra_classes_sweep(
    d: Dataset,
    p: SeedPartition,
    cfg: EngineConfig,
    m_values: list[int],
) -> tuple[int, float, list[dict]]:
    """Oracle sweep over extra-class counts: run the baseline per m and pick
    the m maximizing seed-class macro F1 (ties to the smaller m). Uses test
    labels, so it is an upper bound, not a practical method."""
    from .evaluation import seed_macro_f1

    if not m_values:
        raise ValueError("m_values must be non-empty")
    rows = []
    best_m, best_f1 = None, -1.0
    for m in m_values:
        result = semisup_em(d, p, replace(cfg, extra_classes=m, criterion=None))
        eval_idx = [i for i in sorted(p.unlabeled_idx) if d.gold_labels[i] is not None]
        f1 = seed_macro_f1(
            [int(result.final_state.assignments[i]) for i in eval_idx],
            [d.gold_labels[i] for i in eval_idx],
            p.seeded_class_ids,
        )
        rows.append(
            {
                "extra_classes": m,
                "seed_macro_f1": f1,
                "clusters": result.final_state.num_classes,
                "iterations": result.iterations_run,
            }
        )
        if f1 > best_f1:
            best_m, best_f1 = m, f1
    return best_m, best_f1, rows

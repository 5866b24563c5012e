"""Synthetic dataset generators: class-conditional multinomials with a
tunable separation knob, and noisy directions on the unit hypersphere."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import Dataset, SparseVector


class GeneratorFamily(Enum):
    MULTINOMIAL = "multinomial"
    HYPERSPHERE = "hypersphere"


@dataclass
class SyntheticSpec:
    num_classes: int
    instances_per_class: int
    vocab_size: int
    separation: float
    family: GeneratorFamily = GeneratorFamily.MULTINOMIAL
    rng_seed: int = 0
    doc_length: int = 30  # multinomial draws per document
    noise: float = 0.3  # hypersphere perturbation scale

    def __post_init__(self):
        if min(self.num_classes, self.instances_per_class, self.vocab_size) < 1:
            raise ValueError("num_classes, instances_per_class, vocab_size must be positive")
        if self.separation < 0:
            raise ValueError("separation must be non-negative")


def multinomial_class_distributions(spec: SyntheticSpec) -> np.ndarray:
    """Per-class word distributions. Each class gets extra mass `separation`
    (relative to a shared uniform base) on its own vocabulary block;
    separation 0 collapses all classes onto one distribution, large values
    approach disjoint-block supports."""
    V, K = spec.vocab_size, spec.num_classes
    block = V // K
    dists = np.ones((K, V))
    for c in range(K):
        lo = c * block
        hi = V if c == K - 1 else (c + 1) * block
        dists[c, lo:hi] += spec.separation
    return dists / dists.sum(axis=1, keepdims=True)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    rng = np.random.default_rng(np.random.SeedSequence([spec.rng_seed, 3]))
    if spec.family is GeneratorFamily.MULTINOMIAL:
        return _generate_multinomial(spec, rng)
    return _generate_hypersphere(spec, rng)


def _generate_multinomial(spec: SyntheticSpec, rng: np.random.Generator) -> Dataset:
    dists = multinomial_class_distributions(spec)
    instances, labels = [], []
    for c in range(spec.num_classes):
        for _ in range(spec.instances_per_class):
            counts = rng.multinomial(spec.doc_length, dists[c])
            instances.append(SparseVector.from_dense(counts.astype(np.float64)))
            labels.append(c)
    return Dataset(
        instances,
        labels,
        spec.vocab_size,
        label_names=[f"class_{c}" for c in range(spec.num_classes)],
    )


def _generate_hypersphere(spec: SyntheticSpec, rng: np.random.Generator) -> Dataset:
    """Unit-norm points around per-class mean directions; the means drift
    apart from a shared direction as separation grows."""
    V = spec.vocab_size
    shared = _unit(rng.normal(size=V))
    means = []
    for _ in range(spec.num_classes):
        means.append(_unit(shared + spec.separation * _unit(rng.normal(size=V))))
    instances, labels = [], []
    for c in range(spec.num_classes):
        for _ in range(spec.instances_per_class):
            point = _unit(means[c] + spec.noise * rng.normal(size=V))
            instances.append(SparseVector.from_dense(point))
            labels.append(c)
    return Dataset(
        instances,
        labels,
        V,
        label_names=[f"class_{c}" for c in range(spec.num_classes)],
    )


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def bayes_oracle_accuracy(spec: SyntheticSpec, num_draws: int = 1000) -> float:
    """Monte Carlo accuracy of the true-parameter Bayes classifier on fresh
    multinomial draws; an independent yardstick for separation settings."""
    if spec.family is not GeneratorFamily.MULTINOMIAL:
        raise ValueError("oracle defined for the multinomial generator")
    rng = np.random.default_rng(np.random.SeedSequence([spec.rng_seed, 5]))
    dists = multinomial_class_distributions(spec)
    log_dists = np.log(dists)
    correct = 0
    for _ in range(num_draws):
        c = rng.integers(spec.num_classes)
        counts = rng.multinomial(spec.doc_length, dists[c])
        scores = log_dists @ counts
        if int(np.argmax(scores)) == c:
            correct += 1
    return correct / num_draws

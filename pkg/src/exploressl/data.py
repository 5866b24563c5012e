"""Sparse instances, TF-IDF weighting, dataset loading and seeded partitions."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)


class Norm(Enum):
    L1 = "l1"
    L2 = "l2"


class DataFormatError(ValueError):
    """Raised for malformed or out-of-bounds input files."""


@dataclass(frozen=True)
class SparseVector:
    """Sorted sparse feature vector: parallel (feature id, weight) arrays.

    Feature ids are strictly increasing, weights finite and nonzero.
    """

    indices: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        val = np.asarray(self.values, dtype=np.float64)
        if idx.shape != val.shape or idx.ndim != 1:
            raise ValueError("indices and values must be parallel 1-d arrays")
        if idx.size and (np.any(idx[:-1] >= idx[1:]) or idx[0] < 0):
            raise ValueError("feature ids must be non-negative and strictly increasing")
        if not np.all(np.isfinite(val)):
            raise ValueError("weights must be finite")
        if np.any(val == 0.0):
            raise ValueError("explicit zero weights are not allowed")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "values", val)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, float]]) -> "SparseVector":
        items = sorted((int(i), float(w)) for i, w in pairs)
        items = [(i, w) for i, w in items if w != 0.0]
        if items:
            idx, val = zip(*items)
        else:
            idx, val = (), ()
        return cls(np.array(idx, dtype=np.int64), np.array(val, dtype=np.float64))

    @classmethod
    def from_dense(cls, dense: Sequence[float]) -> "SparseVector":
        arr = np.asarray(dense, dtype=np.float64)
        idx = np.nonzero(arr)[0]
        return cls(idx.astype(np.int64), arr[idx])

    @property
    def entries(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm(self, kind: Norm) -> float:
        if kind is Norm.L1:
            return float(np.sum(np.abs(self.values)))
        return float(np.sqrt(np.sum(self.values**2)))

    def to_dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.indices] = self.values
        return out


def normalize(x: SparseVector, norm: Norm) -> SparseVector:
    """Scale x to unit L1 or L2 norm. All-zero input is rejected."""
    n = x.norm(norm)
    if n == 0.0:
        raise ValueError("degenerate instance: cannot normalize all-zero vector")
    scaled = x.values / n
    # subnormal weights can underflow to exactly zero; drop those entries
    keep = scaled != 0.0
    return SparseVector(x.indices[keep], scaled[keep])


class Dataset:
    """Immutable collection of sparse instances with optional gold labels.

    ``gold_labels[i]`` is a dense class id or None. ``label_names`` maps
    class id back to the original label string.
    """

    def __init__(
        self,
        instances: Sequence[SparseVector],
        gold_labels: Sequence[Optional[int]],
        vocab_size: int,
        instance_ids: Optional[Sequence[str]] = None,
        label_names: Optional[Sequence[str]] = None,
    ):
        if not instances:
            raise DataFormatError("no instances")
        if len(gold_labels) != len(instances):
            raise ValueError("gold_labels length mismatch")
        if vocab_size <= 0:
            raise ValueError("vocab_size must be positive")
        for i, x in enumerate(instances):
            if x.nnz and int(x.indices[-1]) >= vocab_size:
                raise DataFormatError(
                    f"instance {i}: feature id {int(x.indices[-1])} >= vocab size {vocab_size}"
                )
        self.instances = list(instances)
        self.gold_labels = list(gold_labels)
        self.vocab_size = int(vocab_size)
        self.instance_ids = (
            list(instance_ids)
            if instance_ids is not None
            else [str(i) for i in range(len(instances))]
        )
        if len(self.instance_ids) != len(self.instances):
            raise ValueError("instance_ids length mismatch")
        self.label_names = list(label_names) if label_names is not None else None
        self._matrix: Optional[sp.csr_matrix] = None

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def num_classes(self) -> int:
        labels = [y for y in self.gold_labels if y is not None]
        return len(set(labels))

    def matrix(self) -> sp.csr_matrix:
        """CSR matrix view (n x vocab_size), built once and cached."""
        if self._matrix is None:
            indptr = np.zeros(len(self.instances) + 1, dtype=np.int64)
            for i, x in enumerate(self.instances):
                indptr[i + 1] = indptr[i] + x.nnz
            indices = np.concatenate([x.indices for x in self.instances]) if indptr[-1] else np.zeros(0, dtype=np.int64)
            data = np.concatenate([x.values for x in self.instances]) if indptr[-1] else np.zeros(0)
            self._matrix = sp.csr_matrix(
                (data, indices, indptr), shape=(len(self.instances), self.vocab_size)
            )
        return self._matrix

    def class_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for y in self.gold_labels:
            if y is not None:
                counts[y] = counts.get(y, 0) + 1
        return counts


@dataclass(frozen=True)
class SeedPartition:
    """One train/test split: seeded classes, labeled and unlabeled index sets."""

    seeded_class_ids: frozenset[int]
    labeled_idx: frozenset[int]
    unlabeled_idx: frozenset[int]
    rng_seed: int

    def __post_init__(self):
        if self.labeled_idx & self.unlabeled_idx:
            raise ValueError("labeled and unlabeled index sets overlap")

    def validate(self, d: Dataset) -> None:
        if self.labeled_idx | self.unlabeled_idx != set(range(len(d))):
            raise ValueError("partition does not cover the dataset exactly")
        for i in self.labeled_idx:
            if d.gold_labels[i] not in self.seeded_class_ids:
                raise ValueError(f"labeled instance {i} has non-seeded label")


def load_dataset(
    path: str | Path,
    format: str = "sparse-triplet",
    vocab_size: Optional[int] = None,
) -> Dataset:
    """Load a dataset file.

    sparse-triplet: one instance per line, ``<label> <fid>:<count> ...``,
    0-based feature ids. An optional first line ``%%vocab <N>`` declares the
    vocabulary size; otherwise it is inferred (or taken from ``vocab_size``).

    dense-csv: header ``label,f0,f1,...`` then one row per instance.
    """
    path = Path(path)
    if format == "sparse-triplet":
        return _load_sparse_triplet(path, vocab_size)
    if format == "dense-csv":
        return _load_dense_csv(path)
    raise ValueError(f"unknown dataset format: {format!r}")


def _load_sparse_triplet(path: Path, vocab_size: Optional[int]) -> Dataset:
    raw_labels: list[str] = []
    vectors: list[SparseVector] = []
    declared = vocab_size
    max_fid = -1
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if line.startswith("%%vocab"):
                try:
                    declared = int(line.split()[1])
                except (IndexError, ValueError):
                    raise DataFormatError(f"line {lineno}: malformed vocab header")
                continue
            parts = line.split()
            pairs = []
            for token in parts[1:]:
                try:
                    fid_s, cnt_s = token.split(":", 1)
                    fid, cnt = int(fid_s), float(cnt_s)
                except ValueError:
                    raise DataFormatError(f"line {lineno}: malformed entry {token!r}")
                if fid < 0:
                    raise DataFormatError(f"line {lineno}: negative feature id")
                if cnt != 0.0:
                    pairs.append((fid, cnt))
                    max_fid = max(max_fid, fid)
            raw_labels.append(parts[0])
            try:
                vectors.append(SparseVector.from_pairs(pairs))
            except ValueError as e:
                raise DataFormatError(f"line {lineno}: {e}")
    if not vectors:
        raise DataFormatError("no instances")
    vocab = declared if declared is not None else max_fid + 1
    if max_fid >= vocab:
        raise DataFormatError(f"feature id {max_fid} >= declared vocab size {vocab}")
    return _finish(vectors, raw_labels, vocab)


def _load_dense_csv(path: Path) -> Dataset:
    vectors: list[SparseVector] = []
    raw_labels: list[str] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("no instances")
        vocab = len(header) - 1
        if vocab <= 0:
            raise DataFormatError("dense-csv header must declare at least one feature")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != vocab + 1:
                raise DataFormatError(f"line {lineno}: expected {vocab + 1} columns")
            raw_labels.append(row[0])
            try:
                vectors.append(SparseVector.from_dense([float(v) for v in row[1:]]))
            except ValueError:
                raise DataFormatError(f"line {lineno}: non-numeric value")
    if not vectors:
        raise DataFormatError("no instances")
    return _finish(vectors, raw_labels, vocab)


_MISSING_LABEL = ""


def _finish(vectors: list[SparseVector], raw_labels: list[str], vocab: int) -> Dataset:
    names = sorted({s for s in raw_labels if s != _MISSING_LABEL})
    to_id = {name: i for i, name in enumerate(names)}
    gold = [to_id[s] if s != _MISSING_LABEL else None for s in raw_labels]
    return Dataset(vectors, gold, vocab, label_names=names)


def write_label_map(d: Dataset, path: str | Path) -> None:
    """Emit the label-string -> dense-id mapping as two-column CSV."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "class_id"])
        for class_id, name in enumerate(d.label_names or []):
            writer.writerow([name, class_id])


def write_sparse_triplet(d: Dataset, path: str | Path) -> None:
    """Write a dataset in sparse-triplet format (inverse of load_dataset)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"%%vocab {d.vocab_size}\n")
        for x, y in zip(d.instances, d.gold_labels):
            label = d.label_names[y] if (y is not None and d.label_names) else (
                str(y) if y is not None else _MISSING_LABEL
            )
            entries = " ".join(f"{i}:{v:g}" for i, v in zip(x.indices, x.values))
            fh.write(f"{label} {entries}\n".rstrip() + "\n")


def tfidf_weight(d: Dataset) -> Dataset:
    """Reweight raw counts to tf * ln(N / df).

    Terms appearing in every instance get weight 0 and vanish from the
    sparsity pattern. Instances that become all-zero are dropped with a
    warning (their removal is reported so partitions stay consistent).
    """
    n = len(d)
    df = np.zeros(d.vocab_size)
    for x in d.instances:
        df[x.indices] += 1.0
    with np.errstate(divide="ignore"):
        idf = np.where(df > 0, np.log(n / np.maximum(df, 1.0)), 0.0)

    new_instances: list[SparseVector] = []
    keep: list[int] = []
    for i, x in enumerate(d.instances):
        w = x.values * idf[x.indices]
        mask = w != 0.0
        vec = SparseVector(x.indices[mask], w[mask])
        if vec.nnz == 0:
            log.warning("dropping instance %s: all-zero after tf-idf", d.instance_ids[i])
            continue
        keep.append(i)
        new_instances.append(vec)
    if not new_instances:
        raise DataFormatError("no instances survive tf-idf weighting")
    return Dataset(
        new_instances,
        [d.gold_labels[i] for i in keep],
        d.vocab_size,
        [d.instance_ids[i] for i in keep],
        d.label_names,
    )


def normalize_dataset(d: Dataset, norm: Norm) -> Dataset:
    return Dataset(
        [normalize(x, norm) for x in d.instances],
        d.gold_labels,
        d.vocab_size,
        d.instance_ids,
        d.label_names,
    )


def subset(d: Dataset, indices: Sequence[int]) -> Dataset:
    """Dataset restricted to the given instance indices, order preserved."""
    idx = list(indices)
    return Dataset(
        [d.instances[i] for i in idx],
        [d.gold_labels[i] for i in idx],
        d.vocab_size,
        [d.instance_ids[i] for i in idx],
        d.label_names,
    )


def choose_seeded_classes(d: Dataset, num_seed_classes: int) -> list[int]:
    """Default seeded-class choice: the largest classes, ties to lower id."""
    counts = d.class_counts()
    if num_seed_classes > len(counts):
        raise ValueError(
            f"num_seed_classes={num_seed_classes} exceeds {len(counts)} distinct classes"
        )
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return sorted(c for c, _ in ranked[:num_seed_classes])


def make_partitions(
    d: Dataset,
    num_seed_classes: int,
    seeds_fraction: float,
    num_partitions: int,
    rng_seed: int,
    seeded_class_ids: Optional[Sequence[int]] = None,
) -> list[SeedPartition]:
    """Generate deterministic seeded train/test partitions.

    Every partition seeds the same classes; per seeded class,
    ceil(seeds_fraction * class size) instances (minimum 1) are labeled.
    """
    if not (0.0 < seeds_fraction < 1.0):
        raise ValueError("seeds_fraction must be in (0, 1)")
    if num_partitions < 1:
        raise ValueError("num_partitions must be positive")
    if seeded_class_ids is None:
        seeded = choose_seeded_classes(d, num_seed_classes)
    else:
        seeded = sorted(set(int(c) for c in seeded_class_ids))
        if len(seeded) != num_seed_classes:
            raise ValueError("seeded_class_ids must contain num_seed_classes distinct ids")
    counts = d.class_counts()
    for c in seeded:
        if counts.get(c, 0) == 0:
            raise ValueError(f"seeded class {c} has no instances")

    by_class: dict[int, list[int]] = {c: [] for c in seeded}
    for i, y in enumerate(d.gold_labels):
        if y in by_class:
            by_class[y].append(i)

    partitions = []
    for j in range(num_partitions):
        rng = np.random.default_rng(np.random.SeedSequence([rng_seed, j]))
        labeled: set[int] = set()
        for c in seeded:
            members = by_class[c]
            n_seed = max(1, math.ceil(seeds_fraction * len(members)))
            picked = rng.choice(len(members), size=n_seed, replace=False)
            labeled.update(members[i] for i in picked)
        unlabeled = set(range(len(d))) - labeled
        partitions.append(
            SeedPartition(
                seeded_class_ids=frozenset(seeded),
                labeled_idx=frozenset(labeled),
                unlabeled_idx=frozenset(unlabeled),
                rng_seed=rng_seed,
            )
        )
    return partitions

"""Experiment orchestration: grids over families, algorithms and criteria,
partition fan-out, and CSV/JSON report emission."""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import crp as crp_mod
from .criteria import CriterionConfig, CriterionKind
from .data import (
    Dataset,
    Norm,
    SeedPartition,
    load_dataset,
    make_partitions,
    normalize_dataset,
    subset,
    tfidf_weight,
    write_label_map,
)
from .engine import (
    EngineConfig,
    best_extra_classes_sweep,
    calibrate_random_rate,
    exploratory_em,
    semisup_em,
)
from .evaluation import paired_significance, seed_macro_f1
from .models import ModelFamily
from .selection import SelectionCriterion

log = logging.getLogger(__name__)

ALGORITHMS = ("exploratory", "semisup", "semisup-sweep", "crp-standard", "crp-modified")
SWEEP_M_VALUES = (0, 1, 2, 5, 10, 20, 40)


@dataclass
class ExperimentSpec:
    dataset_path: str
    output_dir: str
    dataset_format: str = "sparse-triplet"
    families: Sequence[str] = ("kmeans",)
    algorithms: Sequence[str] = ("exploratory", "semisup")
    criteria: Sequence[str] = ("minmax",)
    num_seed_classes: int = 2
    seeds_fraction: float = 0.05
    num_partitions: int = 10
    selection: str = "aicc"
    p_new: Sequence[float] = (1e-4,)
    rng_seed: int = 0
    max_iterations: int = 15
    ll_rel_tolerance: float = 1e-4
    crp_epochs: int = 50
    random_reference: str = "minmax"
    sweep_m_values: Sequence[int] = SWEEP_M_VALUES
    workers: int = 1
    include_seeds_in_eval: bool = False

    def __post_init__(self):
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")
        for f in self.families:
            ModelFamily(f)
        for c in self.criteria:
            CriterionKind(c)
        SelectionCriterion(self.selection)


def derive_seed(root: int, *coords: int) -> int:
    """Per-run seed from the root seed and the run's grid coordinates."""
    ss = np.random.SeedSequence([root, *coords])
    return int(ss.generate_state(1)[0])


def prepare_family_datasets(raw: Dataset) -> dict[ModelFamily, Dataset]:
    """One representation per family over a shared instance set.

    TF-IDF drops (all-zero reweighted instances) are applied to every
    representation, so instance indices agree across families."""
    weighted = tfidf_weight(raw)
    if len(weighted) != len(raw):
        kept = set(weighted.instance_ids)
        raw = subset(raw, [i for i, iid in enumerate(raw.instance_ids) if iid in kept])
    return {
        ModelFamily.NB: raw,
        ModelFamily.KMEANS: normalize_dataset(weighted, Norm.L1),
        ModelFamily.VMF: normalize_dataset(weighted, Norm.L2),
    }


def _eval_indices(d: Dataset, p: SeedPartition, include_seeds: bool) -> list[int]:
    pool = range(len(d)) if include_seeds else sorted(p.unlabeled_idx)
    return [i for i in pool if d.gold_labels[i] is not None]


def _run_one(task: dict) -> dict:
    """Execute one grid cell on one partition; returns a result row."""
    d: Dataset = task["dataset"]
    p: SeedPartition = task["partition"]
    spec: ExperimentSpec = task["spec"]
    family = ModelFamily(task["family"])
    algorithm = task["algorithm"]
    row = {
        "dataset": Path(spec.dataset_path).name,
        "algorithm": algorithm,
        "family": family.value,
        "criterion": task.get("criterion") or "",
        "p_new": task.get("p_new") if task.get("p_new") is not None else "",
        "partition": task["partition_index"],
        "seed_f1": "",
        "clusters": "",
        "iterations": "",
        "runtime_s": "",
        "error": "",
    }
    try:
        t0 = time.perf_counter()
        run_seed = task["run_seed"]
        cfg = EngineConfig(
            family=family,
            selection=SelectionCriterion(spec.selection),
            max_iterations=spec.max_iterations,
            ll_rel_tolerance=spec.ll_rel_tolerance,
            rng_seed=run_seed,
        )
        if algorithm == "exploratory":
            kind = CriterionKind(task["criterion"])
            if kind is CriterionKind.RANDOM:
                rate = calibrate_random_rate(
                    d, p, family, CriterionKind(spec.random_reference)
                )
                crit = CriterionConfig(kind, random_rate=rate, rng_seed=run_seed)
            else:
                crit = CriterionConfig(kind, rng_seed=run_seed)
            result = exploratory_em(d, p, EngineConfig(
                family=family,
                criterion=crit,
                selection=cfg.selection,
                max_iterations=cfg.max_iterations,
                ll_rel_tolerance=cfg.ll_rel_tolerance,
                rng_seed=run_seed,
            ))
        elif algorithm == "semisup":
            result = semisup_em(d, p, cfg)
        elif algorithm == "semisup-sweep":
            best_m, best_f1, per_m = best_extra_classes_sweep(
                d, p, cfg, list(spec.sweep_m_values)
            )
            row.update(
                seed_f1=f"{best_f1:.6f}",
                clusters=len(p.seeded_class_ids) + best_m,
                iterations=len(per_m),
                runtime_s=f"{time.perf_counter() - t0:.3f}",
            )
            row["sweep_table"] = per_m
            return row
        else:
            pick = (
                crp_mod.PickRule.STANDARD
                if algorithm == "crp-standard"
                else crp_mod.PickRule.MODIFIED
            )
            result = crp_mod.crp_gibbs(
                d,
                p,
                crp_mod.CrpConfig(
                    p_new=float(task["p_new"]),
                    num_epochs=spec.crp_epochs,
                    pick=pick,
                    family=family,
                    rng_seed=run_seed,
                ),
            )
        eval_idx = _eval_indices(d, p, spec.include_seeds_in_eval)
        f1 = seed_macro_f1(
            [int(result.final_state.assignments[i]) for i in eval_idx],
            [d.gold_labels[i] for i in eval_idx],
            p.seeded_class_ids,
        )
        row.update(
            seed_f1=f"{f1:.6f}",
            clusters=result.final_state.num_classes,
            iterations=result.iterations_run,
            runtime_s=f"{result.wall_time:.3f}",
        )
        row["assignments"] = {
            d.instance_ids[i]: int(result.final_state.assignments[i])
            for i in range(len(d))
        }
    except Exception as e:  # noqa: BLE001 - per-run failures become tagged rows
        log.exception("run failed: %s", row)
        row["error"] = f"{type(e).__name__}: {e}"
    return row


def build_tasks(spec: ExperimentSpec, datasets: dict[ModelFamily, Dataset],
                partitions: list[SeedPartition]) -> list[dict]:
    tasks = []
    for fi, family in enumerate(spec.families):
        d = datasets[ModelFamily(family)]
        for ai, algorithm in enumerate(spec.algorithms):
            crits = list(spec.criteria) if algorithm == "exploratory" else [None]
            pnews = list(spec.p_new) if algorithm.startswith("crp") else [None]
            for ci, criterion in enumerate(crits):
                for ni, p_new in enumerate(pnews):
                    for pi, partition in enumerate(partitions):
                        tasks.append(
                            {
                                "spec": spec,
                                "dataset": d,
                                "partition": partition,
                                "partition_index": pi,
                                "family": family,
                                "algorithm": algorithm,
                                "criterion": criterion,
                                "p_new": p_new,
                                "run_seed": derive_seed(spec.rng_seed, fi, ai, ci, ni, pi),
                            }
                        )
    return tasks


CSV_COLUMNS = [
    "dataset", "algorithm", "family", "criterion", "p_new",
    "partition", "seed_f1", "clusters", "iterations", "runtime_s", "error",
]


def run_experiment(spec: ExperimentSpec) -> int:
    """Run the full grid x partitions; write per-run CSV rows, per-run
    assignment files and a summary JSON. Returns a process exit code
    (nonzero iff every run failed)."""
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw = load_dataset(spec.dataset_path, spec.dataset_format)
    write_label_map(raw, out / "label_map.csv")
    datasets = prepare_family_datasets(raw)
    any_d = datasets[ModelFamily.NB]
    partitions = make_partitions(
        any_d,
        spec.num_seed_classes,
        spec.seeds_fraction,
        spec.num_partitions,
        spec.rng_seed,
    )
    tasks = build_tasks(spec, datasets, partitions)

    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            rows = list(pool.map(_run_one, tasks))
    else:
        rows = [_run_one(t) for t in tasks]

    _write_rows(rows, out / "runs.csv")
    _write_assignments(rows, out)
    summary = summarize(rows)
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    failed = sum(1 for r in rows if r["error"])
    log.info("%d/%d runs succeeded", len(rows) - failed, len(rows))
    return 1 if failed == len(rows) else 0


def _write_rows(rows: list[dict], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _run_id(row: dict) -> str:
    bits = [row["algorithm"], row["family"]]
    if row["criterion"]:
        bits.append(str(row["criterion"]))
    if row["p_new"] != "":
        bits.append(f"pnew{row['p_new']:g}")
    bits.append(f"part{row['partition']}")
    return "_".join(bits)


def _write_assignments(rows: list[dict], out: Path) -> None:
    for row in rows:
        sweep_table = row.pop("sweep_table", None)
        if sweep_table is not None:
            with open(out / f"sweep_{_run_id(row)}.json", "w", encoding="utf-8") as fh:
                json.dump(sweep_table, fh, indent=2)
        assignments = row.pop("assignments", None)
        if assignments is None:
            continue
        with open(out / f"assign_{_run_id(row)}.csv", "w", encoding="utf-8",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["instance_id", "cluster"])
            for iid, cluster in assignments.items():
                writer.writerow([iid, cluster])


def _group_key(row: dict) -> tuple:
    return (row["algorithm"], row["family"], row["criterion"], str(row["p_new"]))


def summarize(rows: list[dict]) -> dict:
    """Group rows by grid cell; report mean F1 / cluster counts and paired
    significance of each cell against the same-family semisup baseline."""
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        if row["error"]:
            continue
        groups.setdefault(_group_key(row), []).append(row)

    cells = {}
    for key, members in sorted(groups.items()):
        f1s = [float(r["seed_f1"]) for r in members]
        cells["|".join(str(k) for k in key)] = {
            "algorithm": key[0],
            "family": key[1],
            "criterion": key[2],
            "p_new": key[3],
            "runs": len(members),
            "mean_seed_f1": float(np.mean(f1s)),
            "mean_clusters": float(np.mean([float(r["clusters"]) for r in members])),
            "per_partition_f1": f1s,
        }

    # significance markers vs the semisup baseline of the same family
    for cell in cells.values():
        if cell["algorithm"] == "semisup":
            continue
        base_key = "|".join(["semisup", cell["family"], "", ""])
        base = cells.get(base_key)
        if not base or len(base["per_partition_f1"]) != len(cell["per_partition_f1"]):
            continue
        if len(cell["per_partition_f1"]) < 2:
            continue
        sig = paired_significance(cell["per_partition_f1"], base["per_partition_f1"])
        cell["significance_vs_semisup"] = {
            "outcome": sig.outcome.value,
            "p_value": sig.p_value,
            "marker": sig.marker(),
        }

    errors = [
        {k: r[k] for k in ("algorithm", "family", "criterion", "partition", "error")}
        for r in rows
        if r["error"]
    ]
    return {"cells": cells, "errors": errors}

"""Link-prediction and clustering evaluation protocols."""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .model import EmbeddingModel, probability_matrix
from .network import DynamicNetwork, HoldoutSplit, hold_out_links, hold_out_timepoints
from .spline import BasisSystem
from .trainer import TrainConfig, fit

__all__ = [
    "f1_score",
    "adjusted_rand_index",
    "derive_seed",
    "HoldoutRow",
    "HoldoutTable",
    "run_link_holdout",
    "run_timepoint_holdout",
    "degree_trajectory",
    "estimated_connectivity",
    "write_trajectory_csv",
]

Fitter = Callable[[DynamicNetwork, int], EmbeddingModel]


def f1_score(predictions: Sequence[bool], truths: Sequence[bool]) -> float:
    """F1 of the positive class; 0.0 when precision + recall is 0."""
    pred = np.asarray(predictions, dtype=bool)
    true = np.asarray(truths, dtype=bool)
    if pred.shape != true.shape:
        raise ValueError("predictions and truths must have equal length")
    if pred.size == 0:
        raise ValueError("f1_score of empty input")
    tp = int(np.sum(pred & true))
    fp = int(np.sum(pred & ~true))
    fn = int(np.sum(~pred & true))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def adjusted_rand_index(labels_a: Sequence, labels_b: Sequence) -> float:
    """Adjusted Rand index from the contingency table of two labelings."""
    a = np.asarray(labels_a)
    b = np.asarray(labels_b)
    if a.shape != b.shape:
        raise ValueError("labelings must have equal length")
    if a.size == 0:
        raise ValueError("adjusted_rand_index of empty input")
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    def pairs(x):
        x = np.asarray(x, dtype=np.float64)
        return float(np.sum(x * (x - 1.0) / 2.0))

    index = pairs(table)
    sum_a = pairs(table.sum(axis=1))
    sum_b = pairs(table.sum(axis=0))
    total = a.size * (a.size - 1) / 2.0
    expected = sum_a * sum_b / total if total > 0 else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        # both labelings trivial (all one cluster or all singletons)
        return 1.0
    return (index - expected) / (max_index - expected)


def derive_seed(master: int, *keys: int) -> int:
    """Deterministic 32-bit child seed of ``master`` for the given keys."""
    return int(np.random.SeedSequence([int(master), *map(int, keys)]).generate_state(1)[0])


@dataclass(frozen=True)
class HoldoutRow:
    fraction: float
    rep: int
    f1: float
    n_test: int
    train_f1: float | None = None


@dataclass(eq=False)
class HoldoutTable:
    protocol: str
    rows: list[HoldoutRow]

    def fractions(self) -> list[float]:
        return sorted({r.fraction for r in self.rows})

    def summary(self) -> list[dict]:
        out = []
        for f in self.fractions():
            rs = [r for r in self.rows if r.fraction == f]
            f1 = np.array([r.f1 for r in rs])
            entry = {
                "fraction": f,
                "reps": len(rs),
                "mean_f1": float(f1.mean()),
                "sd_f1": float(f1.std(ddof=1)) if len(rs) > 1 else 0.0,
                "mean_test_size": float(np.mean([r.n_test for r in rs])),
            }
            if rs[0].train_f1 is not None:
                entry["mean_train_f1"] = float(np.mean([r.train_f1 for r in rs]))
            out.append(entry)
        return out

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["fraction", "rep", "f1"])
            for r in self.rows:
                w.writerow([repr(r.fraction), r.rep, repr(r.f1)])

    def write_summary_json(self, path) -> None:
        doc = {"protocol": self.protocol, "summary": self.summary(), "rows": [asdict(r) for r in self.rows]}
        Path(path).write_text(json.dumps(doc, indent=2), encoding="utf-8")


def _default_fitter(config, R, basis, L_out, L_in) -> Fitter:
    def _fit(train: DynamicNetwork, seed: int) -> EmbeddingModel:
        return fit(train, replace(config, seed=seed), R, basis, L_out, L_in)[0]

    return _fit


def _f1_per_time(model: EmbeddingModel, net: DynamicNetwork, entries: np.ndarray, threshold: float) -> float:
    """F1 at each time with test entries, averaged over those times."""
    scores = []
    for i in np.unique(entries[:, 0]):
        e = entries[entries[:, 0] == i]
        p = probability_matrix(model, net.times[i])
        scores.append(f1_score(p[e[:, 1], e[:, 2]] >= threshold, e[:, 3] == 1))
    return float(np.mean(scores)) if scores else math.nan


def _observed_entries(net: DynamicNetwork, times: np.ndarray) -> np.ndarray:
    parts = []
    for i in times:
        j, k = np.nonzero(net.mask[i])
        parts.append(np.column_stack([np.full(j.size, i), j, k, net.snapshots[i, j, k]]))
    return np.concatenate(parts).astype(np.int64) if parts else np.empty((0, 4), np.int64)


def _run(
    protocol: str,
    splitter: Callable[[DynamicNetwork, float, int], HoldoutSplit],
    net: DynamicNetwork,
    fractions: Sequence[float],
    reps: int,
    fitter: Fitter,
    seed: int,
    threshold: float,
    threads: int,
    with_train_f1: bool,
) -> HoldoutTable:
    if reps < 1:
        raise ValueError("reps must be at least 1")
    for f in fractions:
        if not 0.0 < f < 1.0:
            raise ValueError(f"fractions must lie in (0, 1), got {f}")
    jobs = [(f, rep) for rep in range(reps) for f in fractions]

    def run_one(job):
        f, rep = job
        rep_seed = derive_seed(seed, rep)
        split = splitter(net, f, rep_seed)
        try:
            model = fitter(split.train, rep_seed)
        except Exception as exc:
            raise RuntimeError(f"fit failed for fraction {f}, rep {rep}: {exc}") from exc
        f1 = _f1_per_time(model, net, split.test_entries, threshold)
        train_f1 = None
        if with_train_f1:
            kept = np.flatnonzero(split.train.mask.any(axis=(1, 2)))
            train_f1 = _f1_per_time(model, net, _observed_entries(split.train, kept), threshold)
        return HoldoutRow(float(f), rep, f1, len(split), train_f1)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_one, jobs))
    else:
        rows = [run_one(j) for j in jobs]
    rows.sort(key=lambda r: (r.fraction, r.rep))
    return HoldoutTable(protocol, rows)


def run_link_holdout(
    net: DynamicNetwork,
    fractions: Sequence[float],
    reps: int,
    config: TrainConfig | None = None,
    seed: int = 0,
    *,
    R: int = 6,
    basis: BasisSystem,
    L_out: int = 4,
    L_in: int = 5,
    threshold: float = 0.5,
    fitter: Fitter | None = None,
    threads: int = 1,
) -> HoldoutTable:
    """Hide links at every time point, refit, and score the hidden entries.

    For each repetition the split seed and the fit seed both derive from
    ``seed`` and the repetition index, so different fractions of the same
    repetition share their randomness. ``fitter(train, seed)`` overrides the
    default :func:`~dynrep.trainer.fit` call, e.g. to score a known model.
    """
    fitter = fitter or _default_fitter(config or TrainConfig(), R, basis, L_out, L_in)
    return _run("links", hold_out_links, net, fractions, reps, fitter, seed, threshold, threads, False)


def run_timepoint_holdout(
    net: DynamicNetwork,
    fractions: Sequence[float],
    reps: int,
    config: TrainConfig | None = None,
    seed: int = 0,
    *,
    R: int = 6,
    basis: BasisSystem,
    L_out: int = 4,
    L_in: int = 5,
    threshold: float = 0.5,
    fitter: Fitter | None = None,
    threads: int = 1,
) -> HoldoutTable:
    """Hide whole interior snapshots, refit, and score the recovered snapshots.

    Rows also carry the in-sample F1 over the retained snapshots.
    """
    fitter = fitter or _default_fitter(config or TrainConfig(), R, basis, L_out, L_in)
    return _run("timepoints", hold_out_timepoints, net, fractions, reps, fitter, seed, threshold, threads, True)


def degree_trajectory(net: DynamicNetwork) -> np.ndarray:
    """Observed number of links per snapshot."""
    return (net.snapshots.astype(np.int64) * net.mask).sum(axis=(1, 2)).astype(np.float64)


def estimated_connectivity(model: EmbeddingModel, grid: Sequence[float]) -> np.ndarray:
    """Sum of link probabilities ``sum_{j != k} p_jk(t)`` at each grid point."""
    return np.array([probability_matrix(model, t).sum() for t in grid])


def write_trajectory_csv(path, series: dict[str, tuple[Sequence[float], Sequence[float]]]) -> None:
    """Write ``{name: (t, value)}`` as long-format ``t,value,series`` rows."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "value", "series"])
        for name, (ts, vs) in series.items():
            for t, v in zip(ts, vs):
                w.writerow([repr(float(t)), repr(float(v)), name])

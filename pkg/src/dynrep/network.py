"""Directed, unweighted dynamic networks observed as masked adjacency snapshots."""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DynamicNetwork",
    "HoldoutSplit",
    "from_snapshots",
    "load_edge_list",
    "write_edge_list",
    "export_snapshots_json",
    "hold_out_links",
    "hold_out_timepoints",
    "restore_mask",
]


class EdgeListError(ValueError):
    """Malformed edge-list input."""


@dataclass(frozen=True, eq=False)
class DynamicNetwork:
    """``n`` snapshots of an ``M``-node directed network.

    ``times`` live in the model domain ``[0, T]``; ``raw_times`` keep the
    original stamps for reporting. ``mask[i, j, k]`` marks entries that take
    part in the likelihood; the diagonal is never observed.
    """

    labels: tuple[str, ...]
    times: np.ndarray
    snapshots: np.ndarray
    mask: np.ndarray
    raw_times: np.ndarray = field(default=None)
    T: float = 1.0

    def __post_init__(self):
        snaps = np.asarray(self.snapshots, dtype=np.uint8)
        mask = np.asarray(self.mask, dtype=bool)
        times = np.asarray(self.times, dtype=np.float64)
        if snaps.ndim != 3 or snaps.shape[1] != snaps.shape[2]:
            raise ValueError("snapshots must have shape (n, M, M)")
        if mask.shape != snaps.shape:
            raise ValueError("mask and snapshots must have identical shapes")
        if times.shape != (snaps.shape[0],):
            raise ValueError("need one time per snapshot")
        if snaps.shape[1] != len(self.labels):
            raise ValueError("need one label per node")
        if np.any(snaps > 1):
            raise ValueError("snapshot entries must be 0 or 1")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if times.size and (times[0] < 0 or times[-1] > self.T):
            raise ValueError(f"times must lie in [0, {self.T}]")
        diag = np.arange(snaps.shape[1])
        if np.any(mask[:, diag, diag]):
            mask = mask.copy()
            mask[:, diag, diag] = False
        raw = times if self.raw_times is None else np.asarray(self.raw_times, dtype=np.float64)
        for a in (snaps, mask, times, raw):
            a.flags.writeable = False
        object.__setattr__(self, "snapshots", snaps)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "raw_times", raw)
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @property
    def M(self) -> int:
        return self.snapshots.shape[1]

    @property
    def n(self) -> int:
        return self.snapshots.shape[0]

    def with_mask(self, mask: np.ndarray) -> "DynamicNetwork":
        return DynamicNetwork(self.labels, self.times, self.snapshots, mask, self.raw_times, self.T)


@dataclass(frozen=True, eq=False)
class HoldoutSplit:
    """Training network plus held-out entries ``(time_index, j, k, truth)``."""

    train: DynamicNetwork
    test_entries: np.ndarray  # (m, 4) int64

    def __len__(self) -> int:
        return self.test_entries.shape[0]

    def entries_at(self, i: int) -> np.ndarray:
        return self.test_entries[self.test_entries[:, 0] == i]


def _offdiag_mask(M: int) -> np.ndarray:
    return ~np.eye(M, dtype=bool)


def from_snapshots(
    snapshots, times, labels=None, mask=None, T: float = 1.0, rescale: bool = True
) -> DynamicNetwork:
    """Build a network from dense snapshots.

    With ``rescale`` the times are mapped affinely onto ``[0, T]`` (a single
    time maps to 0); otherwise they must already lie there.
    """
    snaps = np.asarray(snapshots, dtype=np.uint8)
    raw = np.asarray(times, dtype=np.float64)
    n, M = snaps.shape[0], snaps.shape[1]
    if labels is None:
        labels = [f"n{j}" for j in range(M)]
    if mask is None:
        mask = np.broadcast_to(_offdiag_mask(M), snaps.shape).copy()
    if rescale:
        span = raw[-1] - raw[0] if n > 1 else 0.0
        scaled = (raw - raw[0]) / span * T if span > 0 else np.zeros(n)
        if n > 1:
            scaled[-1] = T
    else:
        scaled = raw
    return DynamicNetwork(tuple(labels), scaled, snaps, mask, raw, T)


def _natural_key(s: str):
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", s)]


def load_edge_list(path, T: float = 1.0) -> DynamicNetwork:
    """Read a ``time,src,dst`` CSV edge list.

    Every distinct time becomes a fully observed snapshot: unlisted pairs are
    observed zeros, so a node absent at some time simply has no links there.
    Labels are ordered naturally (``n2`` before ``n10``) and times are rescaled
    onto ``[0, T]``.
    """
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EdgeListError(f"{path}: empty file")
        if [h.strip() for h in header] != ["time", "src", "dst"]:
            raise EdgeListError(f"{path}: header must be 'time,src,dst', got {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise EdgeListError(f"{path}: row {lineno}: expected 3 fields, got {len(row)}")
            t_str, src, dst = (c.strip() for c in row)
            try:
                t = float(t_str)
            except ValueError:
                raise EdgeListError(f"{path}: row {lineno}: bad time {t_str!r}") from None
            if not math.isfinite(t):
                raise EdgeListError(f"{path}: row {lineno}: non-finite time")
            if not src or not dst:
                raise EdgeListError(f"{path}: row {lineno}: empty node label")
            if src == dst:
                raise EdgeListError(f"{path}: row {lineno}: self-loop on {src!r}")
            rows.append((t, src, dst))
    if not rows:
        raise EdgeListError(f"{path}: no edges")
    labels = sorted({r[1] for r in rows} | {r[2] for r in rows}, key=_natural_key)
    index = {lab: j for j, lab in enumerate(labels)}
    times = sorted({r[0] for r in rows})
    tindex = {t: i for i, t in enumerate(times)}
    snaps = np.zeros((len(times), len(labels), len(labels)), dtype=np.uint8)
    for t, src, dst in rows:
        snaps[tindex[t], index[src], index[dst]] = 1
    return from_snapshots(snaps, times, labels, T=T)


def write_edge_list(net: DynamicNetwork, path) -> None:
    """Write the positive entries as a ``time,src,dst`` CSV (raw times)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "src", "dst"])
        for i, t in enumerate(net.raw_times):
            for j, k in zip(*np.nonzero(net.snapshots[i])):
                w.writerow([repr(float(t)), net.labels[j], net.labels[k]])


def export_snapshots_json(net: DynamicNetwork, path) -> None:
    doc = {
        "labels": list(net.labels),
        "times": [float(t) for t in net.raw_times],
        "matrices": net.snapshots.astype(int).tolist(),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def hold_out_links(net: DynamicNetwork, fraction: float, rng_seed: int) -> HoldoutSplit:
    """Hide a balanced random set of observed entries at every time point.

    At each time ``ceil(fraction * #positives)`` observed positives and the
    same number of observed negatives (or all of them, if fewer) are removed
    from the mask and recorded with their true value.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    rng = np.random.default_rng(rng_seed)
    mask = net.mask.copy()
    entries = []
    for i in range(net.n):
        obs = net.mask[i]
        pos = np.flatnonzero(obs & (net.snapshots[i] == 1))
        neg = np.flatnonzero(obs & (net.snapshots[i] == 0))
        if pos.size == 0:
            continue
        k = math.ceil(fraction * pos.size)
        picked_pos = np.sort(rng.choice(pos, size=k, replace=False))
        picked_neg = np.sort(rng.choice(neg, size=min(k, neg.size), replace=False))
        for flat, truth in ((picked_pos, 1), (picked_neg, 0)):
            j, kk = np.unravel_index(flat, obs.shape)
            mask[i, j, kk] = False
            entries.append(np.column_stack([np.full(flat.size, i), j, kk, np.full(flat.size, truth)]))
    test = np.concatenate(entries).astype(np.int64) if entries else np.empty((0, 4), np.int64)
    return HoldoutSplit(net.with_mask(mask), test)


def hold_out_timepoints(net: DynamicNetwork, fraction: float, rng_seed: int) -> HoldoutSplit:
    """Hide whole interior snapshots; endpoints are always kept.

    ``max(1, round(fraction * n))`` interior time points are chosen at random
    and every observed off-diagonal entry there becomes a test entry.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0, 1), got {fraction}")
    if net.n < 3:
        raise ValueError("need at least 3 time points to hold out interior ones")
    k = max(1, int(round(fraction * net.n)))
    interior = np.arange(1, net.n - 1)
    if k >= interior.size:
        raise ValueError(
            f"fraction {fraction} would remove {k} of {interior.size} interior time points"
        )
    rng = np.random.default_rng(rng_seed)
    chosen = np.sort(rng.choice(interior, size=k, replace=False))
    mask = net.mask.copy()
    entries = []
    for i in chosen:
        j, kk = np.nonzero(net.mask[i])
        truth = net.snapshots[i, j, kk]
        entries.append(np.column_stack([np.full(j.size, i), j, kk, truth]))
        mask[i] = False
    return HoldoutSplit(net.with_mask(mask), np.concatenate(entries).astype(np.int64))


def restore_mask(split: HoldoutSplit) -> DynamicNetwork:
    """Put the held-out entries back into the training mask."""
    mask = split.train.mask.copy()
    e = split.test_entries
    mask[e[:, 0], e[:, 1], e[:, 2]] = True
    return split.train.with_mask(mask)

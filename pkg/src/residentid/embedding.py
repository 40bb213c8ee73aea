"""Node embeddings for POIs, plus the baseline positional encoders.

First-order weighted random walks sample the transition graph (each
step looks up the current node's transition row), the walk corpus is
fed to a skip-gram model with negative sampling, and the trained input
vectors become the per-POI embeddings. Walks start from every node so
no POI is left out of the corpus.

The positional encoders share one interface: encode(sensor_id) returns
the vector attached to that sensor's events. Variants: nothing (length
0), raw coordinates, room number, or the trained node embedding.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, UnvisitedNodeWarning
from .geometry import LayoutMap
from .graph import AccessProbabilityGraph


@dataclass(frozen=True)
class WalkConfig:
    """Random-walk corpus parameters (defaults follow the tuned setup)."""

    num_walks_per_node: int = 700
    walk_length: int = 1000
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.num_walks_per_node < 1:
            raise ValueError("num_walks_per_node must be >= 1")
        if self.walk_length < 2:
            raise ValueError("walk_length must be >= 2")


@dataclass(frozen=True)
class SkipGramConfig:
    """Skip-gram training parameters.

    The paper-style defaults are dimension 256 and window 1; the
    optimizer settings (negatives, learning rate, epochs, clip) are this
    implementation's choices and fully configurable.
    """

    dimension: int = 256
    window_size: int = 1
    negative_samples: int = 5
    learning_rate: float = 0.025
    epochs: int = 5
    rng_seed: int = 0
    gradient_clip: float = 10.0

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if self.negative_samples < 1:
            raise ValueError("negative_samples must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass
class NodeEmbeddings:
    """One dense vector per node, all rows finite."""

    node_ids: list[str]
    vectors: np.ndarray

    def __post_init__(self) -> None:
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.node_ids):
            raise ValueError(
                f"vectors shape {self.vectors.shape} does not match "
                f"{len(self.node_ids)} nodes"
            )
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("embedding vectors contain non-finite values")
        self._index = {nid: i for i, nid in enumerate(self.node_ids)}

    @property
    def dimension(self) -> int:
        return int(self.vectors.shape[1])

    def vector(self, node_id: str) -> np.ndarray:
        try:
            return self.vectors[self._index[node_id]]
        except KeyError:
            raise KeyError(f"unknown node id: {node_id!r}") from None

    def to_dict(self) -> dict:
        return {
            "node_ids": list(self.node_ids),
            "dimension": self.dimension,
            "vectors": self.vectors.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NodeEmbeddings":
        emb = cls(node_ids=list(d["node_ids"]), vectors=np.asarray(d["vectors"]))
        if emb.dimension != int(d["dimension"]):
            raise DataError("embedding file dimension field disagrees with vectors")
        return emb

    def save_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load_json(cls, path: str | Path) -> "NodeEmbeddings":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id"] + [f"v{i}" for i in range(self.dimension)])
            for nid, row in zip(self.node_ids, self.vectors):
                writer.writerow([nid] + [repr(v) for v in row])


def random_walks(apg: AccessProbabilityGraph, cfg: WalkConfig) -> list[list[str]]:
    """Sample num_walks_per_node walks of walk_length nodes from each node.

    Each step draws the successor from the current node's transition
    row. Walks from a given start node use an independent generator
    seeded by (rng_seed, node index), so output is deterministic and
    per-node generation could run in parallel.
    """
    cum = np.cumsum(apg.trans, axis=1)
    cum[:, -1] = 1.0  # guard against rounding just below 1
    walks: list[list[str]] = []
    for start in range(apg.n):
        rng = np.random.default_rng([cfg.rng_seed, start])
        for _ in range(cfg.num_walks_per_node):
            draws = rng.random(cfg.walk_length - 1)
            walk = [start]
            cur = start
            for u in draws:
                cur = int(np.searchsorted(cum[cur], u, side="right"))
                walk.append(cur)
            walks.append([apg.node_ids[i] for i in walk])
    return walks


def walk_transition_stats(walks: list[list[str]], apg: AccessProbabilityGraph) -> dict:
    """Per-node total-variation distance of empirical steps vs. the matrix.

    Counts every consecutive pair in the walks. Nodes with no outgoing
    samples report tv=None.
    """
    counts = np.zeros((apg.n, apg.n), dtype=np.float64)
    for walk in walks:
        idx = [apg.index(nid) for nid in walk]
        for a, b in zip(idx[:-1], idx[1:]):
            counts[a, b] += 1
    per_node = {}
    max_tv = 0.0
    for i, nid in enumerate(apg.node_ids):
        total = counts[i].sum()
        if total == 0:
            per_node[nid] = {"samples": 0, "tv": None}
            continue
        tv = 0.5 * float(np.abs(counts[i] / total - apg.trans[i]).sum())
        per_node[nid] = {"samples": int(total), "tv": tv}
        max_tv = max(max_tv, tv)
    return {"nodes": per_node, "max_tv": max_tv}


def _first_appearance_order(walks: list[list[str]]) -> list[str]:
    seen: dict[str, None] = {}
    for walk in walks:
        for nid in walk:
            seen.setdefault(nid, None)
    return list(seen)


def train_skipgram(
    walks: list[list[str]],
    cfg: SkipGramConfig,
    node_ids: list[str] | None = None,
) -> NodeEmbeddings:
    """Train skip-gram embeddings with negative sampling over the walks.

    For every center node and every context within window_size
    positions, one positive and negative_samples noise updates are
    applied (noise drawn from the unigram^0.75 frequency distribution).
    The learning rate decays linearly over all scheduled updates;
    gradients are clipped elementwise. Returns the input-side vectors;
    nodes that never appear in a walk keep their initialization (with a
    warning). Deterministic given rng_seed.
    """
    if not walks:
        raise DataError("cannot train embeddings on an empty walk list")
    if node_ids is None:
        node_ids = _first_appearance_order(walks)
    index = {nid: i for i, nid in enumerate(node_ids)}
    n, d = len(node_ids), cfg.dimension

    walk_idx: list[np.ndarray] = []
    counts = np.zeros(n, dtype=np.float64)
    for walk in walks:
        try:
            idx = np.asarray([index[nid] for nid in walk], dtype=np.int64)
        except KeyError as exc:
            raise DataError(f"walk contains unknown node id {exc.args[0]!r}") from None
        walk_idx.append(idx)
        np.add.at(counts, idx, 1.0)

    missing = [node_ids[i] for i in np.nonzero(counts == 0)[0]]
    if missing:
        warnings.warn(
            f"nodes {missing} never appear in any walk; their vectors stay "
            "at initialization",
            UnvisitedNodeWarning,
            stacklevel=2,
        )

    rng = np.random.default_rng(cfg.rng_seed)
    w_in = rng.uniform(-0.5 / d, 0.5 / d, size=(n, d))
    w_out = np.zeros((n, d), dtype=np.float64)

    noise = counts ** 0.75
    noise_total = noise.sum()
    if noise_total == 0:
        return NodeEmbeddings(node_ids=list(node_ids), vectors=w_in)
    noise_cdf = np.cumsum(noise / noise_total)
    noise_cdf[-1] = 1.0

    win, k, clip = cfg.window_size, cfg.negative_samples, cfg.gradient_clip
    pairs_per_walk = [
        sum(min(t, win) + min(len(w) - 1 - t, win) for t in range(len(w)))
        for w in walk_idx
    ]
    total_pairs = cfg.epochs * sum(pairs_per_walk)
    if total_pairs == 0:
        return NodeEmbeddings(node_ids=list(node_ids), vectors=w_in)

    done = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(len(walk_idx))
        for wi in order:
            idx = walk_idx[wi]
            n_pairs = pairs_per_walk[wi]
            if n_pairs == 0:
                continue
            negs = np.searchsorted(noise_cdf, rng.random((n_pairs, k)), side="right")
            pair = 0
            for t in range(len(idx)):
                center = idx[t]
                lo, hi = max(0, t - win), min(len(idx), t + win + 1)
                for s in range(lo, hi):
                    if s == t:
                        continue
                    ctx = idx[s]
                    if ctx == center:
                        continue  # self pairs (self-loop steps) carry no signal
                    alpha = cfg.learning_rate * max(
                        1e-4, 1.0 - done / (total_pairs + 1)
                    )
                    targets = np.concatenate(([ctx], negs[pair][negs[pair] != ctx]))
                    rows = w_out[targets]
                    scores = rows @ w_in[center]
                    g = 1.0 / (1.0 + np.exp(-np.clip(scores, -60.0, 60.0)))
                    g[0] -= 1.0  # positive label on the context itself
                    grad_center = np.clip(g @ rows, -clip, clip)
                    grad_rows = np.clip(np.outer(g, w_in[center]), -clip, clip)
                    np.subtract.at(w_out, targets, alpha * grad_rows)
                    w_in[center] -= alpha * grad_center
                    pair += 1
                    done += 1
    return NodeEmbeddings(node_ids=list(node_ids), vectors=w_in)


class PositionalEncoder:
    """Maps a sensor id to the positional vector attached to its events."""

    name = "base"
    dim = 0

    def encode(self, sensor_id: str) -> np.ndarray:
        raise NotImplementedError


class NullEncoder(PositionalEncoder):
    """No positional information: every sensor encodes to a length-0 vector."""

    name = "none"
    dim = 0

    def encode(self, sensor_id: str) -> np.ndarray:
        return np.zeros(0, dtype=np.float64)


class CoordinateEncoder(PositionalEncoder):
    """Raw POI coordinates as the positional vector."""

    name = "coordinates"

    def __init__(self, layout: LayoutMap):
        self._coords = {pid: np.asarray(p.coords, dtype=np.float64) for pid, p in layout.pois}
        self.dim = len(layout.pois[0][1].coords)

    def encode(self, sensor_id: str) -> np.ndarray:
        try:
            return self._coords[sensor_id]
        except KeyError:
            raise KeyError(f"unknown sensor id: {sensor_id!r}") from None


class RoomNumberEncoder(PositionalEncoder):
    """Room index of the sensor as a length-1 vector."""

    name = "room_number"
    dim = 1

    def __init__(self, rooms: dict[str, int]):
        if not rooms:
            raise DataError("room_number encoder needs a sensor-to-room mapping")
        self._rooms = {str(k): float(v) for k, v in rooms.items()}

    def encode(self, sensor_id: str) -> np.ndarray:
        try:
            return np.asarray([self._rooms[sensor_id]], dtype=np.float64)
        except KeyError:
            raise KeyError(f"unknown sensor id: {sensor_id!r}") from None


class Node2VecEncoder(PositionalEncoder):
    """Trained node embedding as the positional vector."""

    name = "node2vec"

    def __init__(self, embeddings: NodeEmbeddings):
        self._emb = embeddings
        self.dim = embeddings.dimension

    def encode(self, sensor_id: str) -> np.ndarray:
        try:
            return self._emb.vector(sensor_id)
        except KeyError:
            raise KeyError(f"unknown sensor id: {sensor_id!r}") from None


def make_encoder(
    kind: str,
    layout: LayoutMap | None = None,
    rooms: dict[str, int] | None = None,
    embeddings: NodeEmbeddings | None = None,
) -> PositionalEncoder:
    """Build the encoder variant named by kind, validating its inputs."""
    if kind == "none":
        return NullEncoder()
    if kind == "coordinates":
        if layout is None:
            raise DataError("coordinates encoder needs a layout")
        return CoordinateEncoder(layout)
    if kind == "room_number":
        if rooms is None:
            raise DataError("room_number encoder needs a rooms mapping")
        return RoomNumberEncoder(rooms)
    if kind == "node2vec":
        if embeddings is None:
            raise DataError("node2vec encoder needs trained embeddings")
        return Node2VecEncoder(embeddings)
    raise DataError(f"unknown encoder kind: {kind!r}")

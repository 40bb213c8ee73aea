"""Transition probabilities from distance weights.

Converts the accessibility graph's distance matrix into a row-stochastic
transition matrix: positive distances d become inverse weights 1/(d+1)
(closer means more likely), rows are normalized, a self-loop weight
w*I/(1-w) is added so residents can stay put, and rows are normalized
again. The result is the adjacency matrix of the accessibility
probability graph, equivalently a finite Markov chain over the POIs.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import IsolatedNodeError, IsolatedNodeWarning
from .geometry import AccessibilityGraph

DEFAULT_SELF_WEIGHT = 0.5

_ROW_SUM_TOL = 1e-9


@dataclass
class AccessProbabilityGraph:
    """Row-stochastic transition matrix over the POIs.

    Every row sums to 1; trans[i][i] equals self_weight for nodes with
    at least one neighbor (isolated nodes get a forced self-loop of 1).
    Off-diagonal entries are positive only where the source graph has an
    edge.
    """

    node_ids: list[str]
    trans: np.ndarray
    self_weight: float

    def __post_init__(self) -> None:
        self.trans = np.asarray(self.trans, dtype=np.float64)
        n = len(self.node_ids)
        if self.trans.shape != (n, n):
            raise ValueError(f"trans shape {self.trans.shape} != ({n}, {n})")
        sums = self.trans.sum(axis=1)
        if not np.all(np.abs(sums - 1.0) < _ROW_SUM_TOL):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ValueError(f"row {bad} sums to {sums[bad]!r}, not 1")
        self._index = {nid: i for i, nid in enumerate(self.node_ids)}

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def index(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise KeyError(f"unknown node id: {node_id!r}") from None

    def to_dict(self) -> dict:
        return {
            "node_ids": list(self.node_ids),
            "trans": self.trans.tolist(),
            "self_weight": self.self_weight,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AccessProbabilityGraph":
        return cls(
            node_ids=list(d["node_ids"]),
            trans=np.asarray(d["trans"]),
            self_weight=float(d["self_weight"]),
        )


def apg_from_ag(ag: AccessibilityGraph, w: float = DEFAULT_SELF_WEIGHT) -> AccessProbabilityGraph:
    """Transform distance weights into transition probabilities.

    Steps: apply 1/(d+1) to positive entries, normalize rows, add the
    diagonal w*I/(1-w), normalize rows again. Zero entries stay zero.
    Isolated nodes (no edges) end up with self-loop probability 1 and a
    warning; with w = 0 they would leave an all-zero row, which is an
    error.
    """
    if not 0.0 <= w < 1.0:
        raise ValueError(f"self weight must be in [0, 1), got {w}")
    if ag.n < 1:
        raise ValueError("graph has no nodes")
    m = ag.dist.astype(np.float64).copy()
    mask = m > 0
    m[mask] = 1.0 / (m[mask] + 1.0)
    sums = m.sum(axis=1)
    isolated = sums == 0
    if isolated.any():
        names = [ag.node_ids[i] for i in np.nonzero(isolated)[0]]
        if w == 0.0:
            raise IsolatedNodeError(
                f"nodes {names} have no edges and w=0 leaves their rows all zero"
            )
        warnings.warn(
            f"nodes {names} have no edges; forcing self-loop probability 1",
            IsolatedNodeWarning,
            stacklevel=2,
        )
    m[~isolated] /= sums[~isolated, None]
    if w > 0.0:
        m += (w / (1.0 - w)) * np.eye(ag.n)
    m /= m.sum(axis=1)[:, None]
    return AccessProbabilityGraph(node_ids=list(ag.node_ids), trans=m, self_weight=w)


def transition_row(apg: AccessProbabilityGraph, node_id: str) -> np.ndarray:
    """The outgoing probability vector of one node (copy; sums to 1)."""
    return apg.trans[apg.index(node_id)].copy()


def save_apg_json(apg: AccessProbabilityGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(apg.to_dict(), fh, indent=1)


def load_apg_json(path: str | Path) -> AccessProbabilityGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return AccessProbabilityGraph.from_dict(json.load(fh))
